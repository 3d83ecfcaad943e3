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
#include <span>
#include <string>
#include <vector>

#include "dimvec/vecmath.hpp"

namespace dimvec {

// Analogy benchmark (Google format): lines of the form ": section-name"
// open a section; every other non-blank line is exactly four whitespace-
// separated tokens a b c expected, asking a : b :: c : expected.

struct AnalogyQuestion {
  std::string a, b, c, expected;
};

struct AnalogySection {
  std::string name;
  std::vector<AnalogyQuestion> questions;
};

/// Parses the Google analogy text format. Tokens are lowercased to match the
/// corpus pipeline. Throws with a line number on malformed question lines,
/// questions before the first section header, or duplicate section names.
std::vector<AnalogySection> load_analogy_file(const std::filesystem::path& path);

/// OOV question policy. A question is unusable when any of its four tokens
/// is missing from the vocabulary (or has a zero vector). skip removes such
/// questions from the accuracy denominator; count-as-wrong keeps them.
enum class OovMode { kSkip, kCountAsWrong };

std::string to_string(OovMode mode);
OovMode oov_mode_from_string(const std::string& s);

struct SectionResult {
  std::string name;
  int64_t total = 0;     // questions in the section
  int64_t skipped = 0;   // unusable questions (answered + skipped = total)
  int64_t answered = 0;
  int64_t correct = 0;
  std::optional<double> accuracy;  // nullopt when the denominator is zero
};

struct AnalogyEval {
  OovMode mode = OovMode::kSkip;
  std::vector<SectionResult> sections;
  // Aggregates: the "family" section, the syntactic sections (names starting
  // with "gram"), and everything.
  SectionResult family;
  SectionResult syntax;
  SectionResult all;
};

AnalogyEval eval_analogy(const UnitEmbedding& emb, const std::vector<AnalogySection>& sections,
                         OovMode mode = OovMode::kSkip, int32_t threads = 1);

// Word similarity benchmark: CSV with header `word1,word2,score`.

struct SimilarityPair {
  std::string w1, w2;
  double human_score = 0.0;
};

std::vector<SimilarityPair> load_wordsim_csv(const std::filesystem::path& path);

struct WordSimEval {
  double rho = 0.0;
  int64_t n_used = 0;    // pairs with both words in vocabulary
  int64_t n_total = 0;
  double p_value = 1.0;  // two-sided t-approximation; advisory only
};

/// Spearman correlation between human scores and model cosines over the
/// usable pairs. Throws when fewer than 2 pairs are usable.
WordSimEval eval_wordsim(const UnitEmbedding& emb, const std::vector<SimilarityPair>& pairs);

/// Spearman rank correlation with midrank ties. Computed from doubled ranks
/// in integer arithmetic, so equal inputs give bit-identical results across
/// platforms. Throws on length mismatch, n < 2, or zero rank variance.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace dimvec
