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

#include "dimvec/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <thread>

namespace dimvec {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 + e^x), stable for large |x|.
double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_index(const EmbeddingModel& model, int32_t id) {
  if (id < 0 || id >= model.vocab_size()) {
    throw std::out_of_range("word index out of range: " + std::to_string(id));
  }
}

// Averaged input rows (the hidden vector).
std::vector<double> hidden_vector(const EmbeddingModel& model, std::span<const int32_t> input_ids) {
  if (input_ids.empty()) throw std::invalid_argument("input context must be non-empty");
  std::vector<double> h(static_cast<size_t>(model.dim()), 0.0);
  for (const int32_t id : input_ids) {
    check_index(model, id);
    const auto row = model.W.row(id);
    for (size_t i = 0; i < h.size(); ++i) h[i] += row[i];
  }
  const double inv = 1.0 / static_cast<double>(input_ids.size());
  for (double& x : h) x *= inv;
  return h;
}

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  return seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
}

}  // namespace

std::string to_string(Architecture arch) {
  return arch == Architecture::kCbow ? "cbow" : "skipgram";
}

std::string to_string(Loss loss) {
  return loss == Loss::kNegativeSampling ? "ns" : "hs";
}

Architecture architecture_from_string(const std::string& s) {
  if (s == "cbow") return Architecture::kCbow;
  if (s == "skipgram" || s == "sg") return Architecture::kSkipGram;
  throw std::invalid_argument("unknown architecture: " + s);
}

Loss loss_from_string(const std::string& s) {
  if (s == "ns" || s == "negative-sampling") return Loss::kNegativeSampling;
  if (s == "hs" || s == "hierarchical-softmax") return Loss::kHierarchicalSoftmax;
  throw std::invalid_argument("unknown loss: " + s);
}

void TrainingConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (loss == Loss::kNegativeSampling && negative < 1) {
    throw std::invalid_argument("negative must be >= 1 for negative sampling");
  }
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(lr_start > lr_end) || !(lr_end > 0.0)) {
    throw std::invalid_argument("learning rates must satisfy lr_start > lr_end > 0");
  }
  if (subsample_t < 0.0) throw std::invalid_argument("subsample_t must be >= 0");
  if (unigram_exponent < 0.0) throw std::invalid_argument("unigram_exponent must be >= 0");
}

EmbeddingModel init_model(const Vocabulary& vocab, const TrainingConfig& cfg) {
  cfg.validate();
  if (vocab.size() < 2) throw std::invalid_argument("vocabulary must contain at least 2 words");

  EmbeddingModel model;
  model.vocab = vocab;
  model.config = cfg;
  const int64_t v = vocab.size();
  const int64_t n = cfg.dim;
  model.W = Matrix(v, n);
  model.Wprime = Matrix(v, n);

  Rng rng(cfg.seed);
  const double half = 0.5 / static_cast<double>(n);
  for (double& x : model.W.data) x = rng.next_uniform(-half, half);
  return model;
}

NoiseTable::NoiseTable(const Vocabulary& vocab, double exponent, size_t table_size) {
  const int32_t v = vocab.size();
  if (v < 1) throw std::invalid_argument("noise table needs a non-empty vocabulary");
  if (table_size < static_cast<size_t>(v)) {
    throw std::invalid_argument("noise table size must be >= vocabulary size");
  }
  cdf_.resize(static_cast<size_t>(v));
  double total = 0.0;
  for (int32_t i = 0; i < v; ++i) {
    total += std::pow(static_cast<double>(vocab.at(i).count), exponent);
  }
  double running = 0.0;
  for (int32_t i = 0; i < v; ++i) {
    running += std::pow(static_cast<double>(vocab.at(i).count), exponent) / total;
    cdf_[static_cast<size_t>(i)] = running;
  }
  cdf_.back() = 1.0;

  table_.resize(table_size);
  int32_t word = 0;
  for (size_t i = 0; i < table_size; ++i) {
    const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(table_size);
    while (word < v - 1 && cdf_[static_cast<size_t>(word)] < q) ++word;
    table_[i] = word;
  }
}

int32_t NoiseTable::sample(Rng& rng) const {
  return table_[rng.next_below(table_.size())];
}

int32_t NoiseTable::sample_excluding(Rng& rng, int32_t forbidden) const {
  int32_t s = sample(rng);
  while (s == forbidden) s = sample(rng);
  return s;
}

double NoiseTable::probability(int32_t index) const {
  const size_t i = static_cast<size_t>(index);
  if (i >= cdf_.size()) throw std::out_of_range("noise table index out of range");
  return i == 0 ? cdf_[0] : cdf_[i] - cdf_[i - 1];
}

HuffmanTree build_huffman(const Vocabulary& vocab) {
  const int32_t v = vocab.size();
  if (v < 2) throw std::invalid_argument("Huffman tree needs at least 2 words");

  // Node ids: [0, v) leaves, [v, 2v-1) internal in merge order.
  const int32_t total = 2 * v - 1;
  std::vector<int64_t> count(static_cast<size_t>(total), 0);
  std::vector<int32_t> parent(static_cast<size_t>(total), -1);
  std::vector<uint8_t> bit(static_cast<size_t>(total), 0);
  for (int32_t i = 0; i < v; ++i) count[static_cast<size_t>(i)] = vocab.at(i).count;

  const auto cmp = [&](int32_t a, int32_t b) {
    if (count[static_cast<size_t>(a)] != count[static_cast<size_t>(b)]) {
      return count[static_cast<size_t>(a)] > count[static_cast<size_t>(b)];
    }
    return a > b;  // min-heap: lower id wins ties
  };
  std::priority_queue<int32_t, std::vector<int32_t>, decltype(cmp)> heap(cmp);
  for (int32_t i = 0; i < v; ++i) heap.push(i);

  for (int32_t m = 0; m < v - 1; ++m) {
    const int32_t a = heap.top();
    heap.pop();
    const int32_t b = heap.top();
    heap.pop();
    const int32_t node = v + m;
    count[static_cast<size_t>(node)] = count[static_cast<size_t>(a)] + count[static_cast<size_t>(b)];
    parent[static_cast<size_t>(a)] = node;
    parent[static_cast<size_t>(b)] = node;
    bit[static_cast<size_t>(a)] = 0;
    bit[static_cast<size_t>(b)] = 1;
    heap.push(node);
  }

  HuffmanTree tree;
  tree.internal_nodes = v - 1;
  tree.codes.resize(static_cast<size_t>(v));
  tree.points.resize(static_cast<size_t>(v));
  for (int32_t w = 0; w < v; ++w) {
    std::vector<uint8_t> code;
    std::vector<int32_t> path;
    int32_t node = w;
    while (parent[static_cast<size_t>(node)] != -1) {
      code.push_back(bit[static_cast<size_t>(node)]);
      path.push_back(parent[static_cast<size_t>(node)] - v);  // internal row index
      node = parent[static_cast<size_t>(node)];
    }
    std::reverse(code.begin(), code.end());
    std::reverse(path.begin(), path.end());
    tree.codes[static_cast<size_t>(w)] = std::move(code);
    tree.points[static_cast<size_t>(w)] = std::move(path);
  }
  return tree;
}

double cbow_probability(const EmbeddingModel& model, std::span<const int32_t> context_ids,
                        int32_t target_id) {
  check_index(model, target_id);
  const std::vector<double> h = hidden_vector(model, context_ids);

  const int32_t v = model.vocab_size();
  std::vector<double> scores(static_cast<size_t>(v));
  double max_score = -std::numeric_limits<double>::infinity();
  for (int32_t w = 0; w < v; ++w) {
    scores[static_cast<size_t>(w)] = dot(h, model.Wprime.row(w));
    max_score = std::max(max_score, scores[static_cast<size_t>(w)]);
  }
  double denom = 0.0;
  for (int32_t w = 0; w < v; ++w) denom += std::exp(scores[static_cast<size_t>(w)] - max_score);
  return std::exp(scores[static_cast<size_t>(target_id)] - max_score) / denom;
}

double ns_loss(const EmbeddingModel& model, std::span<const int32_t> input_ids, int32_t target_id,
               std::span<const int32_t> negative_ids) {
  check_index(model, target_id);
  const std::vector<double> h = hidden_vector(model, input_ids);
  double loss = softplus(-dot(h, model.Wprime.row(target_id)));
  for (const int32_t neg : negative_ids) {
    check_index(model, neg);
    loss += softplus(dot(h, model.Wprime.row(neg)));
  }
  return loss;
}

double ns_step(EmbeddingModel& model, std::span<const int32_t> input_ids, int32_t target_id,
               std::span<const int32_t> negative_ids, double lr) {
  check_index(model, target_id);
  const std::vector<double> h = hidden_vector(model, input_ids);
  const size_t n = h.size();

  // Phase 1: per-output residuals and the hidden gradient, all against the
  // pre-update weights. Duplicate output ids then accumulate additively in
  // phase 2, matching the simultaneous gradient.
  const size_t outputs = 1 + negative_ids.size();
  std::vector<int32_t> ids(outputs);
  std::vector<double> residual(outputs);
  ids[0] = target_id;
  for (size_t k = 0; k < negative_ids.size(); ++k) {
    check_index(model, negative_ids[k]);
    ids[k + 1] = negative_ids[k];
  }

  std::vector<double> grad_h(n, 0.0);
  double loss = 0.0;
  for (size_t k = 0; k < outputs; ++k) {
    const auto row = model.Wprime.row(ids[k]);
    const double u = dot(h, row);
    const double label = k == 0 ? 1.0 : 0.0;
    loss += k == 0 ? softplus(-u) : softplus(u);
    const double g = sigmoid(u) - label;
    residual[k] = g;
    for (size_t i = 0; i < n; ++i) grad_h[i] += g * row[i];
  }

  // Phase 2: apply updates.
  for (size_t k = 0; k < outputs; ++k) {
    auto row = model.Wprime.row(ids[k]);
    const double step = lr * residual[k];
    for (size_t i = 0; i < n; ++i) row[i] -= step * h[i];
  }
  const double scale = lr / static_cast<double>(input_ids.size());
  for (const int32_t id : input_ids) {
    auto row = model.W.row(id);
    for (size_t i = 0; i < n; ++i) row[i] -= scale * grad_h[i];
  }
  return loss;
}

double train_step_cbow_ns(EmbeddingModel& model, std::span<const int32_t> context_ids,
                          int32_t target_id, const NoiseTable& noise, double lr, Rng& rng) {
  if (!(lr >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  const int32_t k = model.config.negative;
  std::vector<int32_t> negatives(static_cast<size_t>(k));
  for (int32_t i = 0; i < k; ++i) negatives[static_cast<size_t>(i)] = noise.sample_excluding(rng, target_id);
  return ns_step(model, context_ids, target_id, negatives, lr);
}

double train_step_sg_ns(EmbeddingModel& model, int32_t center_id, int32_t context_id,
                        const NoiseTable& noise, double lr, Rng& rng) {
  const int32_t center[1] = {center_id};
  return train_step_cbow_ns(model, center, context_id, noise, lr, rng);
}

double hs_loss(const EmbeddingModel& model, const HuffmanTree& tree,
               std::span<const int32_t> input_ids, int32_t target_id) {
  check_index(model, target_id);
  const std::vector<double> h = hidden_vector(model, input_ids);
  const auto& code = tree.codes[static_cast<size_t>(target_id)];
  const auto& path = tree.points[static_cast<size_t>(target_id)];
  double loss = 0.0;
  for (size_t j = 0; j < code.size(); ++j) {
    const double u = dot(h, model.Wprime.row(path[j]));
    // P(bit=0) = sigmoid(u); branch loss is -log P(observed bit).
    loss += softplus((code[j] == 0 ? -1.0 : 1.0) * u);
  }
  return loss;
}

double train_step_hs(EmbeddingModel& model, const HuffmanTree& tree,
                     std::span<const int32_t> input_ids, int32_t target_id, double lr) {
  check_index(model, target_id);
  const std::vector<double> h = hidden_vector(model, input_ids);
  const size_t n = h.size();
  const auto& code = tree.codes[static_cast<size_t>(target_id)];
  const auto& path = tree.points[static_cast<size_t>(target_id)];

  std::vector<double> residual(code.size());
  std::vector<double> grad_h(n, 0.0);
  double loss = 0.0;
  for (size_t j = 0; j < code.size(); ++j) {
    const auto row = model.Wprime.row(path[j]);
    const double u = dot(h, row);
    loss += softplus((code[j] == 0 ? -1.0 : 1.0) * u);
    const double g = sigmoid(u) - (code[j] == 0 ? 1.0 : 0.0);
    residual[j] = g;
    for (size_t i = 0; i < n; ++i) grad_h[i] += g * row[i];
  }
  for (size_t j = 0; j < code.size(); ++j) {
    auto row = model.Wprime.row(path[j]);
    const double step = lr * residual[j];
    for (size_t i = 0; i < n; ++i) row[i] -= step * h[i];
  }
  const double scale = lr / static_cast<double>(input_ids.size());
  for (const int32_t id : input_ids) {
    auto row = model.W.row(id);
    for (size_t i = 0; i < n; ++i) row[i] -= scale * grad_h[i];
  }
  return loss;
}

bool subsample_keep(int64_t word_count, int64_t total_tokens, double t, Rng& rng) {
  if (!(t > 0.0)) throw std::invalid_argument("subsample threshold must be > 0");
  const double f = static_cast<double>(word_count) / static_cast<double>(total_tokens);
  const double keep = (std::sqrt(f / t) + 1.0) * t / f;
  return rng.next_double() < keep;  // keep >= 1 always keeps
}

namespace {

struct EncodedCorpus {
  std::vector<std::vector<int32_t>> sentences;
  int64_t total_tokens = 0;
  int64_t skipped_oov = 0;
};

EncodedCorpus encode_corpus(const Vocabulary& vocab, const std::vector<Sentence>& corpus) {
  EncodedCorpus enc;
  enc.sentences.reserve(corpus.size());
  for (const auto& sent : corpus) {
    std::vector<int32_t> ids;
    ids.reserve(sent.size());
    for (const auto& token : sent) {
      if (const auto id = vocab.find(token)) {
        ids.push_back(*id);
      } else {
        ++enc.skipped_oov;
      }
    }
    enc.total_tokens += static_cast<int64_t>(ids.size());
    if (!ids.empty()) enc.sentences.push_back(std::move(ids));
  }
  return enc;
}

struct EpochShard {
  double loss_sum = 0.0;
  uint64_t steps = 0;
};

void check_finite(const Matrix& m, const char* name) {
  for (const double x : m.data) {
    if (!std::isfinite(x)) {
      throw std::runtime_error(std::string("non-finite weight in ") + name +
                               " after epoch; lower the learning rate");
    }
  }
}

}  // namespace

TrainStats train(EmbeddingModel& model, const std::vector<Sentence>& corpus,
                 const TrainOptions& options) {
  const TrainingConfig& cfg = model.config;
  cfg.validate();
  const int32_t threads = std::max<int32_t>(1, options.threads);

  const EncodedCorpus enc = encode_corpus(model.vocab, corpus);
  if (enc.total_tokens == 0) throw std::runtime_error("effective training corpus is empty");

  const NoiseTable* noise = nullptr;
  NoiseTable noise_storage =
      cfg.loss == Loss::kNegativeSampling
          ? NoiseTable(model.vocab, cfg.unigram_exponent,
                       std::max(options.noise_table_size, static_cast<size_t>(model.vocab_size())))
          : NoiseTable(model.vocab, 0.0, static_cast<size_t>(model.vocab_size()));
  if (cfg.loss == Loss::kNegativeSampling) noise = &noise_storage;

  HuffmanTree tree;
  if (cfg.loss == Loss::kHierarchicalSoftmax) tree = build_huffman(model.vocab);

  const int64_t schedule_total = static_cast<int64_t>(cfg.epochs) * enc.total_tokens;
  std::atomic<int64_t> processed{0};

  TrainStats stats;
  stats.skipped_oov_tokens = enc.skipped_oov;

  const size_t n_sentences = enc.sentences.size();
  for (int32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<EpochShard> shards(static_cast<size_t>(threads));

    const auto worker = [&](int32_t tid) {
      Rng rng(mix_seed(cfg.seed, static_cast<uint64_t>(epoch) * static_cast<uint64_t>(threads) +
                                     static_cast<uint64_t>(tid)));
      EpochShard& shard = shards[static_cast<size_t>(tid)];
      const size_t begin = n_sentences * static_cast<size_t>(tid) / static_cast<size_t>(threads);
      const size_t end = n_sentences * static_cast<size_t>(tid + 1) / static_cast<size_t>(threads);

      std::vector<int32_t> kept;
      std::vector<int32_t> context;
      for (size_t s = begin; s < end; ++s) {
        const auto& sentence = enc.sentences[s];
        const int64_t done =
            processed.fetch_add(static_cast<int64_t>(sentence.size()), std::memory_order_relaxed);
        const double frac = static_cast<double>(done) / static_cast<double>(schedule_total);
        const double lr = std::max(cfg.lr_end, cfg.lr_start - (cfg.lr_start - cfg.lr_end) * frac);

        kept.clear();
        if (cfg.subsample_t > 0.0) {
          for (const int32_t id : sentence) {
            const int64_t count = model.vocab.at(id).count;
            if (subsample_keep(count, model.vocab.total_tokens(), cfg.subsample_t, rng)) {
              kept.push_back(id);
            }
          }
        } else {
          kept.assign(sentence.begin(), sentence.end());
        }
        const int64_t len = static_cast<int64_t>(kept.size());
        for (int64_t i = 0; i < len; ++i) {
          const int64_t win = 1 + static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(cfg.window)));
          const int64_t lo = std::max<int64_t>(0, i - win);
          const int64_t hi = std::min<int64_t>(len - 1, i + win);
          if (cfg.architecture == Architecture::kCbow) {
            context.clear();
            for (int64_t j = lo; j <= hi; ++j) {
              if (j != i) context.push_back(kept[static_cast<size_t>(j)]);
            }
            if (context.empty()) continue;
            double loss;
            if (cfg.loss == Loss::kNegativeSampling) {
              loss = train_step_cbow_ns(model, context, kept[static_cast<size_t>(i)], *noise, lr, rng);
            } else {
              loss = train_step_hs(model, tree, context, kept[static_cast<size_t>(i)], lr);
            }
            shard.loss_sum += loss;
            ++shard.steps;
          } else {
            for (int64_t j = lo; j <= hi; ++j) {
              if (j == i) continue;
              double loss;
              const int32_t center = kept[static_cast<size_t>(i)];
              const int32_t ctx_word = kept[static_cast<size_t>(j)];
              if (cfg.loss == Loss::kNegativeSampling) {
                loss = train_step_sg_ns(model, center, ctx_word, *noise, lr, rng);
              } else {
                const int32_t input[1] = {center};
                loss = train_step_hs(model, tree, input, ctx_word, lr);
              }
              shard.loss_sum += loss;
              ++shard.steps;
            }
          }
        }
      }
    };

    if (threads == 1) {
      worker(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<size_t>(threads));
      for (int32_t t = 0; t < threads; ++t) pool.emplace_back(worker, t);
      for (auto& th : pool) th.join();
    }

    double loss_sum = 0.0;
    uint64_t steps = 0;
    for (const auto& shard : shards) {
      loss_sum += shard.loss_sum;
      steps += shard.steps;
    }
    stats.total_updates += steps;
    stats.epoch_mean_loss.push_back(steps == 0 ? 0.0 : loss_sum / static_cast<double>(steps));

    check_finite(model.W, "W");
    check_finite(model.Wprime, "Wprime");
    if (options.on_epoch) options.on_epoch(epoch, stats.epoch_mean_loss.back());
  }
  return stats;
}

}  // namespace dimvec
