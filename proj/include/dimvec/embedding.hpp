//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#ifndef DIMVEC_EMBEDDING_HPP_
#define DIMVEC_EMBEDDING_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dimvec/corpus.hpp"
#include "dimvec/rng.hpp"

namespace dimvec {

enum class Architecture { kCbow, kSkipGram };
enum class Loss { kNegativeSampling, kHierarchicalSoftmax };

std::string to_string(Architecture arch);
std::string to_string(Loss loss);
Architecture architecture_from_string(const std::string& s);
Loss loss_from_string(const std::string& s);

struct TrainingConfig {
  int32_t dim = 500;
  int32_t window = 10;  // tokens on each side of the focal word
  Architecture architecture = Architecture::kCbow;
  Loss loss = Loss::kNegativeSampling;
  int32_t negative = 5;  // noise samples per positive (negative sampling only)
  int32_t epochs = 5;
  double lr_start = 0.025;
  double lr_end = 1e-4;
  double subsample_t = 1e-3;
  uint64_t seed = 1;
  double unigram_exponent = 0.75;

  void validate() const;
};

/// Dense row-major matrix of doubles.
struct Matrix {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int64_t r, int64_t c) : rows(r), cols(c), data(static_cast<size_t>(r * c), 0.0) {}

  std::span<double> row(int64_t i) {
    return {data.data() + i * cols, static_cast<size_t>(cols)};
  }
  std::span<const double> row(int64_t i) const {
    return {data.data() + i * cols, static_cast<size_t>(cols)};
  }
};

/// Trained (or training) embedding model. W holds the input word-vectors
/// used by every downstream query; Wprime holds the output representations
/// (negative sampling) or the internal Huffman node vectors (hierarchical
/// softmax).
struct EmbeddingModel {
  Vocabulary vocab;
  Matrix W;       // V x N
  Matrix Wprime;  // V x N
  TrainingConfig config;

  int32_t vocab_size() const { return vocab.size(); }
  int32_t dim() const { return config.dim; }
};

/// W rows i.i.d. uniform on [-0.5/N, +0.5/N]; Wprime zeros. Deterministic
/// given cfg.seed. Requires V >= 2.
EmbeddingModel init_model(const Vocabulary& vocab, const TrainingConfig& cfg);

/// Noise distribution over vocabulary indices proportional to
/// count^exponent. Holds the exact cumulative distribution plus a quantized
/// index table for O(1) draws.
class NoiseTable {
 public:
  NoiseTable(const Vocabulary& vocab, double exponent, size_t table_size = 10'000'000);

  int32_t sample(Rng& rng) const;
  /// Sample avoiding `forbidden` (resamples on collision).
  int32_t sample_excluding(Rng& rng, int32_t forbidden) const;

  const std::vector<double>& cdf() const { return cdf_; }
  double probability(int32_t index) const;

 private:
  std::vector<double> cdf_;     // cdf_[i] = P(index <= i); back() == 1
  std::vector<int32_t> table_;  // quantized inverse-cdf lookup
};

/// Huffman coding of the vocabulary by frequency. codes[w] holds the bit
/// path root->leaf for word w; points[w] holds the internal-node row indices
/// (into Wprime) aligned with codes[w]. Exactly V-1 internal nodes.
struct HuffmanTree {
  std::vector<std::vector<uint8_t>> codes;
  std::vector<std::vector<int32_t>> points;
  int32_t internal_nodes = 0;
};

/// Greedy min-heap merge by frequency, ties broken by lower node id (leaves
/// carry their vocabulary index). Requires V >= 2.
HuffmanTree build_huffman(const Vocabulary& vocab);

/// Exact softmax probability of `target` given averaged context vectors
/// (Eq. over all V scores). Intended for small vocabularies; O(V*N).
double cbow_probability(const EmbeddingModel& model, std::span<const int32_t> context_ids,
                        int32_t target_id);

/// Negative-sampling log-loss of (inputs -> target) against an explicit
/// negative set, without updating weights. inputs are averaged into the
/// hidden vector (a single input reproduces skip-gram).
double ns_loss(const EmbeddingModel& model, std::span<const int32_t> input_ids, int32_t target_id,
               std::span<const int32_t> negative_ids);

/// One SGD update of the negative-sampling objective with an explicit
/// negative set; returns the loss before the update. The hidden-vector
/// gradient is split equally across input rows.
double ns_step(EmbeddingModel& model, std::span<const int32_t> input_ids, int32_t target_id,
               std::span<const int32_t> negative_ids, double lr);

/// CBOW step: samples cfg.negative noise words (resampling on target
/// collision) and applies one update. Returns the pre-update loss.
double train_step_cbow_ns(EmbeddingModel& model, std::span<const int32_t> context_ids,
                          int32_t target_id, const NoiseTable& noise, double lr, Rng& rng);

/// Skip-gram step: hidden vector is W[center]; predicts context_id.
double train_step_sg_ns(EmbeddingModel& model, int32_t center_id, int32_t context_id,
                        const NoiseTable& noise, double lr, Rng& rng);

/// Hierarchical-softmax path loss of (inputs -> target) without updating.
double hs_loss(const EmbeddingModel& model, const HuffmanTree& tree,
               std::span<const int32_t> input_ids, int32_t target_id);

/// Hierarchical-softmax step along target's Huffman path; returns the
/// pre-update negative log path probability.
double train_step_hs(EmbeddingModel& model, const HuffmanTree& tree,
                     std::span<const int32_t> input_ids, int32_t target_id, double lr);

/// Keep probability min(1, (sqrt(f/t)+1)*t/f) with f = word_count/total.
bool subsample_keep(int64_t word_count, int64_t total_tokens, double t, Rng& rng);

struct TrainOptions {
  int32_t threads = 1;
  size_t noise_table_size = 10'000'000;
  /// Called after each epoch with (epoch index, mean loss).
  std::function<void(int32_t, double)> on_epoch;
};

struct TrainStats {
  std::vector<double> epoch_mean_loss;
  uint64_t total_updates = 0;
  int64_t skipped_oov_tokens = 0;
};

/// Trains model.config.epochs over the corpus with a per-position dynamic
/// window uniform in [1, C] and linear lr decay. Out-of-vocabulary tokens are
/// skipped before windowing. Single-threaded runs are bit-reproducible for a
/// fixed seed; multi-worker runs update shared weights without locks.
TrainStats train(EmbeddingModel& model, const std::vector<Sentence>& corpus,
                 const TrainOptions& options = {});

}  // namespace dimvec

#endif  // DIMVEC_EMBEDDING_HPP_
