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

#include "dimvec/vecmath.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dimvec {

namespace {

double clamp_unit(double x) { return std::min(1.0, std::max(-1.0, x)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: vector lengths differ");
  double aa = 0.0;
  double bb = 0.0;
  double ab = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    aa += a[i] * a[i];
    bb += b[i] * b[i];
    ab += a[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw std::invalid_argument("cosine: zero vector");
  return clamp_unit(ab / (std::sqrt(aa) * std::sqrt(bb)));
}

UnitEmbedding::UnitEmbedding(const EmbeddingModel& model)
    : model_(&model),
      units_(model.vocab_size(), model.dim()),
      norms_(static_cast<size_t>(model.vocab_size()), 0.0) {
  for (int32_t i = 0; i < model.vocab_size(); ++i) {
    const auto src = model.W.row(i);
    double ss = 0.0;
    for (const double x : src) ss += x * x;
    const double norm = std::sqrt(ss);
    norms_[static_cast<size_t>(i)] = norm;
    if (norm > 0.0) {
      auto dst = units_.row(i);
      for (size_t d = 0; d < src.size(); ++d) dst[d] = src[d] / norm;
    }
  }
}

std::span<const double> UnitEmbedding::unit(int32_t index) const {
  if (index < 0 || index >= size()) throw std::out_of_range("word index out of range");
  if (!has_unit(index)) {
    throw std::runtime_error("word \"" + vocab().at(index).token + "\" has a zero vector");
  }
  return units_.row(index);
}

int32_t UnitEmbedding::require(const std::string& token) const {
  const auto id = vocab().find(token);
  if (!id) throw std::runtime_error("word not in vocabulary: \"" + token + "\"");
  return *id;
}

std::vector<QueryResult> nearest_neighbors(const UnitEmbedding& emb, const std::string& word,
                                           int32_t k,
                                           const std::unordered_set<std::string>& exclude) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const int32_t query = emb.require(word);
  const auto q = emb.unit(query);

  std::vector<std::pair<double, int32_t>> scored;
  scored.reserve(static_cast<size_t>(emb.size()));
  for (int32_t i = 0; i < emb.size(); ++i) {
    if (i == query || !emb.has_unit(i)) continue;
    if (!exclude.empty() && exclude.count(emb.vocab().at(i).token)) continue;
    scored.emplace_back(clamp_unit(dot(q, emb.unit(i))), i);
  }
  const size_t keep = std::min<size_t>(static_cast<size_t>(k), scored.size());
  const auto better = [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<ptrdiff_t>(keep), scored.end(),
                    better);

  std::vector<QueryResult> out;
  out.reserve(keep);
  for (size_t i = 0; i < keep; ++i) {
    out.push_back({emb.vocab().at(scored[i].second).token, scored[i].first});
  }
  return out;
}

QueryResult analogy(const UnitEmbedding& emb, const std::string& a, const std::string& b,
                    const std::string& c) {
  const int32_t ia = emb.require(a);
  const int32_t ib = emb.require(b);
  const int32_t ic = emb.require(c);
  const auto va = emb.unit(ia);
  const auto vb = emb.unit(ib);
  const auto vc = emb.unit(ic);

  std::vector<double> target(va.size());
  double ss = 0.0;
  for (size_t d = 0; d < target.size(); ++d) {
    target[d] = vb[d] - va[d] + vc[d];
    ss += target[d] * target[d];
  }
  if (ss == 0.0) throw std::runtime_error("analogy target vector is zero");
  const double inv = 1.0 / std::sqrt(ss);
  for (double& x : target) x *= inv;

  int32_t best = -1;
  double best_score = -2.0;
  for (int32_t i = 0; i < emb.size(); ++i) {
    if (i == ia || i == ib || i == ic || !emb.has_unit(i)) continue;
    const double score = dot(target, emb.unit(i));
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  if (best < 0) throw std::runtime_error("analogy: no candidate words available");
  return {emb.vocab().at(best).token, clamp_unit(best_score)};
}

MeanVectorResult mean_vector(const UnitEmbedding& emb, const std::vector<std::string>& words) {
  MeanVectorResult result;
  result.mean.assign(static_cast<size_t>(emb.dim()), 0.0);
  for (const auto& word : words) {
    const auto id = emb.vocab().find(word);
    if (!id || !emb.has_unit(*id)) {
      result.skipped.push_back(word);
      continue;
    }
    const auto u = emb.unit(*id);
    for (size_t d = 0; d < result.mean.size(); ++d) result.mean[d] += u[d];
    result.used.push_back(word);
  }
  if (result.used.empty()) throw std::runtime_error("mean_vector: no usable words");
  const double inv = 1.0 / static_cast<double>(result.used.size());
  for (double& x : result.mean) x *= inv;
  result.coverage = static_cast<double>(result.used.size()) /
                    static_cast<double>(result.used.size() + result.skipped.size());
  return result;
}

}  // namespace dimvec
