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

#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "dimvec/embedding.hpp"

namespace dimvec {

/// Cosine similarity, clamped into [-1, 1]. Throws on a zero vector or a
/// length mismatch.
double cosine(std::span<const double> a, std::span<const double> b);

/// Unit-normalized view of a model's input vectors. All query operations
/// (neighbors, analogies, projections) run over these rows; the raw matrix
/// stays untouched for training. Rows with zero norm cannot be normalized:
/// they are skipped as candidates and error as query words.
///
/// Holds a reference to the model, which must outlive the view.
class UnitEmbedding {
 public:
  explicit UnitEmbedding(const EmbeddingModel& model);

  const Vocabulary& vocab() const { return model_->vocab; }
  int32_t size() const { return model_->vocab_size(); }
  int64_t dim() const { return model_->dim(); }

  bool has_unit(int32_t index) const { return norms_[static_cast<size_t>(index)] > 0.0; }
  /// Unit vector for a row; throws if the raw row has zero norm.
  std::span<const double> unit(int32_t index) const;

  /// Index for a token; throws on OOV.
  int32_t require(const std::string& token) const;

 private:
  const EmbeddingModel* model_;
  Matrix units_;
  std::vector<double> norms_;
};

struct QueryResult {
  std::string word;
  double similarity = 0.0;
};

/// Top-k words by cosine to `word`, excluding the word itself and `exclude`.
/// Sorted descending, ties broken by lower vocabulary index. Returns fewer
/// than k results when the candidate pool is smaller.
std::vector<QueryResult> nearest_neighbors(const UnitEmbedding& emb, const std::string& word,
                                           int32_t k,
                                           const std::unordered_set<std::string>& exclude = {});

/// a : b :: c : ? — argmax over the vocabulary minus {a,b,c} of
/// cosine(x, b - a + c), all terms unit-normalized.
QueryResult analogy(const UnitEmbedding& emb, const std::string& a, const std::string& b,
                    const std::string& c);

struct MeanVectorResult {
  std::vector<double> mean;          // may be all-zero; callers normalizing it must check
  std::vector<std::string> used;
  std::vector<std::string> skipped;  // OOV or zero-norm
  double coverage = 0.0;             // used / (used + skipped)
};

/// Arithmetic mean of unit vectors. Skips OOV and zero-norm words; throws
/// when nothing is left.
MeanVectorResult mean_vector(const UnitEmbedding& emb, const std::vector<std::string>& words);

}  // namespace dimvec
