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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dimvec/vecmath.hpp"

namespace dimvec {

// Semantic dimensions: a direction in embedding space whose two ends carry
// opposite meanings (feminine/masculine, healthy/unhealthy, ...). Dimensions
// are extracted from anchor lexicons by one of three methods:
//
//  - larsen:    normalize(mean of positive unit vectors - mean of negative
//               unit vectors)
//  - bolukbasi: first principal component of pair-centered unit vectors
//  - svm:       linear soft-margin classifier; the separating hyperplane
//               normal plays the role of the axis
//
// Words are scored by cosine against the axis (geometric methods) or by the
// classifier's decision value (SVM).

enum class Pole { kPositive, kNegative };
enum class Split { kTrain, kTest };
enum class DimMethod { kLarsen, kBolukbasi, kSvm };

std::string to_string(Pole pole);
std::string to_string(Split split);
std::string to_string(DimMethod method);
DimMethod dim_method_from_string(const std::string& s);

struct LexiconEntry {
  std::string word;
  Pole pole = Pole::kPositive;
  std::optional<int32_t> pair_id;  // train words may be paired across poles
  Split split = Split::kTrain;
};

/// Anchor lexicon, usually loaded from TSV. Invariants (enforced on load and
/// by validate()): each pair_id maps exactly one positive and one negative
/// train word; test words are unique; train words may repeat across pairs.
struct AnchorLexicon {
  std::string name;
  std::pair<std::string, std::string> pole_names = {"positive", "negative"};
  std::vector<LexiconEntry> entries;

  std::vector<LexiconEntry> split_entries(Split split) const;
  /// Sorted pair ids present among train entries.
  std::vector<int32_t> pair_ids() const;
  /// True when every train entry carries a pair id.
  bool fully_paired() const;

  void validate() const;
};

/// Parses lexicon TSV: columns word, pole (positive|negative), pair_id
/// (integer or empty), split (train|test). Lines starting with "#" are
/// comments; the optional directives "# name: X" and "# poles: P,N" set the
/// lexicon name (default: file stem) and pole labels.
AnchorLexicon load_lexicon(const std::filesystem::path& path);

struct Dimension {
  std::string name;
  std::vector<double> axis;  // unit norm
  std::pair<std::string, std::string> pole_names;
  DimMethod method = DimMethod::kLarsen;
  double anchor_coverage = 0.0;  // in-vocabulary fraction of train anchors
};

struct LinearClassifier {
  std::string name;
  std::vector<double> weight;
  double bias = 0.0;
  double C = 1.0;
  std::pair<std::string, std::string> pole_names;
  std::vector<std::string> warnings;  // e.g. fewer anchors than dimensions
};

/// Difference-of-means axis over the train split, anchors counted with
/// multiplicity. Throws when a pole has no in-vocabulary anchors or the
/// difference vector is zero.
Dimension extract_larsen(const UnitEmbedding& emb, const AnchorLexicon& lexicon);

/// PCA axis over pair-centered unit vectors of the train split. Requires a
/// fully paired lexicon with at least 2 complete in-vocabulary pairs. The
/// sign is oriented so positive-pole anchors project positive on average.
Dimension extract_bolukbasi(const UnitEmbedding& emb, const AnchorLexicon& lexicon);

struct SvmOptions {
  std::vector<double> c_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
  uint64_t seed = 1;
  double tolerance = 1e-6;
  int32_t max_epochs = 1000;
};

/// Soft-margin linear SVM (hinge loss, dual coordinate descent) on unit
/// anchor vectors of the train split; positive pole is the +1 class. C is
/// chosen by cross-validation over the grid, ties to the smaller C.
LinearClassifier train_svm(const UnitEmbedding& emb, const AnchorLexicon& lexicon,
                           const SvmOptions& options = {});

/// Cosine of the word's unit vector against the axis. Throws on OOV.
double project(const UnitEmbedding& emb, const Dimension& dim, const std::string& word);

/// SVM decision value w·x + b for the word's unit vector. Throws on OOV.
double decision_value(const UnitEmbedding& emb, const LinearClassifier& clf,
                      const std::string& word);

struct WordClassification {
  std::string word;
  std::string predicted_pole;
  double score = 0.0;     // projection or decision value
  bool boundary = false;  // score exactly 0: forced to the negative pole
  bool correct = false;
};

struct ClassificationReport {
  Split split = Split::kTrain;
  int64_t total = 0;  // usable (in-vocabulary) anchors, with multiplicity
  int64_t correct = 0;
  int64_t oov = 0;
  double accuracy = 0.0;  // correct / total
  std::vector<WordClassification> words;
};

/// Scores every in-vocabulary anchor of the split. A score > 0 predicts the
/// positive pole; exactly 0 predicts negative and sets the boundary flag.
/// Throws when the split has no usable anchors.
ClassificationReport classify(const UnitEmbedding& emb, const Dimension& dim,
                              const AnchorLexicon& lexicon, Split split);
ClassificationReport classify(const UnitEmbedding& emb, const LinearClassifier& clf,
                              const AnchorLexicon& lexicon, Split split);

struct CrossValidation {
  int32_t folds = 0;
  double mean_train_accuracy = 0.0;
  double mean_heldout_accuracy = 0.0;
};

/// K-fold cross-validation over the train split. Folds are assigned by pair
/// (both members held out together; unpaired words are their own unit) with
/// a seeded shuffle. Throws when there are fewer units than folds.
CrossValidation crossvalidate_lexicon(const UnitEmbedding& emb, const AnchorLexicon& lexicon,
                                      int32_t folds, DimMethod method, uint64_t seed = 1);

/// Cosine similarity of two axes. Throws on length mismatch.
double dim_similarity(const Dimension& a, const Dimension& b);

}  // namespace dimvec
