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

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dimvec/corpus.hpp"
#include "dimvec/dimension.hpp"
#include "dimvec/embedding.hpp"

namespace dimvec {

// Robustness protocol: train k models on random document subsamples of the
// corpus, re-extract every dimension per model, and project keywords and
// anchors in each. A word is robustly classified only when its projection
// carries the same nonzero sign in all k models — and is present in all k.

struct EnsembleConfig {
  int32_t k_models = 25;
  double subsample_fraction = 0.9;
  uint64_t base_seed = 1;
  TrainingConfig training;
  int32_t min_count = 40;          // per-model vocabulary rebuild threshold
  int64_t keyword_min_count = 40;  // keyword presence rule per model
  DimMethod method = DimMethod::kLarsen;  // larsen or bolukbasi
  bool save_models = false;        // also write each trained model (native format)

  void validate() const;
};

/// Uniform sample without replacement of floor(fraction * n_docs) document
/// indices, returned in ascending order so document order is preserved.
/// Deterministic per seed. Throws when the result would be empty.
std::vector<size_t> subsample_documents(size_t n_docs, double fraction, uint64_t seed);

/// Concatenates the sentences of the selected documents, in order. Throws
/// when the index does not fit the corpus.
std::vector<Sentence> select_sentences(const std::vector<Sentence>& corpus,
                                       const std::vector<DocSpan>& doc_index,
                                       const std::vector<size_t>& selected);

struct EnsembleKeyword {
  std::string token;
  std::string role;  // free-form tag (e.g. fatness, behavior); may be empty
};

/// Keyword TSV: token, optionally followed by a tab and a role tag. Lines
/// starting with "#" are comments.
std::vector<EnsembleKeyword> load_keywords(const std::filesystem::path& path);

// Persisted per-model projections (model_<i>/projections.json).

struct WordProjection {
  std::string word;
  std::string role;                  // keyword role, or "anchor"
  std::optional<std::string> split;  // anchors only
  std::optional<std::string> pole;   // anchors only
  bool present = false;              // in vocabulary and above the count rule
  int64_t count = 0;                 // occurrences in this model's corpus
  std::optional<double> projection;  // set iff present
};

struct LexiconProjections {
  std::string name;
  std::pair<std::string, std::string> pole_names;
  std::string method;
  double anchor_coverage = 0.0;
  std::map<std::string, WordProjection> words;  // keyed by word
};

struct ModelProjections {
  int32_t model_index = 0;
  uint64_t seed = 0;
  int64_t vocab_size = 0;
  size_t n_documents = 0;
  std::vector<LexiconProjections> lexicons;
};

struct EnsembleRunResult {
  std::vector<int32_t> completed_models;
  std::vector<std::string> warnings;  // per-model failures, flagged keywords
};

/// Trains model i on a fresh subsample with seed base_seed + i (used for
/// both subsampling and training), rebuilds the vocabulary, extracts every
/// lexicon's dimension, projects keywords and anchors, and writes
/// out_dir/model_<i>/projections.json. A model that fails (e.g. empty
/// vocabulary) is reported in warnings and excluded. `threads` is passed to
/// the trainer; 1 keeps the run bit-reproducible.
EnsembleRunResult run_ensemble(const EnsembleConfig& cfg, const std::vector<Sentence>& corpus,
                               const std::vector<DocSpan>& doc_index,
                               const std::vector<AnchorLexicon>& lexicons,
                               const std::vector<EnsembleKeyword>& keywords,
                               const std::filesystem::path& out_dir, int32_t threads = 1);

/// Reads every model_*/projections.json under out_dir, sorted by model
/// index. Missing models are simply absent.
std::vector<ModelProjections> load_model_projections(const std::filesystem::path& out_dir);

struct EnsembleSummary {
  std::string lexicon;
  std::string word;
  std::string role;
  std::optional<std::string> split;
  std::optional<std::string> pole;  // true pole for anchors
  int32_t n_models_present = 0;
  int32_t k = 0;
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
  bool robust = false;        // same nonzero sign in all k models
  std::string pole_at_mean;   // pole label for the sign of the mean
};

/// Aggregates per-model projections into per-(lexicon, word) summaries.
/// Statistics run over the models where the word is present; robust requires
/// presence in all k models and a consistent nonzero projection sign.
std::vector<EnsembleSummary> robust_classify(const std::vector<ModelProjections>& models,
                                             int32_t k);

struct RobustAccuracy {
  std::string lexicon;
  int64_t train_robust = 0;
  int64_t train_total = 0;
  int64_t test_robust = 0;
  int64_t test_total = 0;
};

/// An anchor counts as robustly correct when every one of the k models
/// contains it and classifies it to its true pole. Totals count lexicon
/// entries as listed (train multiplicity preserved).
std::vector<RobustAccuracy> robust_accuracy(const std::vector<AnchorLexicon>& lexicons,
                                            const std::vector<ModelProjections>& models,
                                            int32_t k);

/// Writes figure_<lexicon>.csv per lexicon: word,role,mean,sd,min,max,robust
/// rows sorted by mean. The sd column is the population standard deviation.
void emit_figure_data(const std::vector<EnsembleSummary>& summaries,
                      const std::filesystem::path& out_dir);

}  // namespace dimvec
