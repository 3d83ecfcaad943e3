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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dimvec/evaluation.hpp"
#include "dimvec/vecmath.hpp"
#include "testutil.hpp"

using namespace dimvec;
using testutil::TempDir;
using testutil::write_file;

namespace {

// Rank-based Spearman oracle: midranks computed the slow way, correlation as
// the Pearson correlation of the rank vectors.
double spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const auto ranks = [](const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<double> r(n);
    for (size_t i = 0; i < n; ++i) {
      size_t below = 0, equal = 0;
      for (size_t j = 0; j < n; ++j) {
        if (v[j] < v[i]) ++below;
        if (v[j] == v[i]) ++equal;
      }
      // midrank: average of occupied rank positions below+1 .. below+equal
      r[i] = static_cast<double>(below) + (static_cast<double>(equal) + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const size_t n = x.size();
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Model with a planted relation y_i = e_i + 2 e_R, as in the vecmath tests.
dimvec::EmbeddingModel planted_relation_model(int n_pairs) {
  const int dim = n_pairs + 1;
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < n_pairs; ++i) {
    std::vector<double> x(static_cast<size_t>(dim), 0.0), y(static_cast<size_t>(dim), 0.0);
    x[static_cast<size_t>(i)] = 1.0;
    y[static_cast<size_t>(i)] = 1.0;
    y[static_cast<size_t>(dim - 1)] = 2.0;
    tokens.push_back("x" + std::to_string(i));
    rows.push_back(x);
    tokens.push_back("y" + std::to_string(i));
    rows.push_back(y);
  }
  return testutil::model_from_rows(tokens, rows);
}

}  // namespace

TEST_CASE("load_analogy_file parses sections and lowercases") {
  TempDir tmp;
  write_file(tmp / "q.txt",
             ": family\n"
             "Boy Girl Brother Sister\n"
             "king queen man woman\n"
             "\n"
             ": gram1-plural\n"
             "cat cats dog dogs\n");
  const auto sections = load_analogy_file(tmp / "q.txt");
  REQUIRE(sections.size() == 2);
  CHECK(sections[0].name == "family");
  REQUIRE(sections[0].questions.size() == 2);
  CHECK(sections[0].questions[0].a == "boy");
  CHECK(sections[0].questions[0].expected == "sister");
  CHECK(sections[1].name == "gram1-plural");
  CHECK(sections[1].questions.size() == 1);
}

TEST_CASE("load_analogy_file rejects malformed input with line numbers") {
  TempDir tmp;
  write_file(tmp / "early.txt", "a b c d\n");
  CHECK_THROWS_WITH(static_cast<void>(load_analogy_file(tmp / "early.txt")), doctest::Contains(":1:"));

  write_file(tmp / "short.txt", ": sec\na b c\n");
  CHECK_THROWS_WITH(static_cast<void>(load_analogy_file(tmp / "short.txt")), doctest::Contains(":2:"));

  write_file(tmp / "dup.txt", ": sec\na b c d\n: sec\n");
  CHECK_THROWS(static_cast<void>(load_analogy_file(tmp / "dup.txt")));

  write_file(tmp / "unnamed.txt", ":   \na b c d\n");
  CHECK_THROWS(static_cast<void>(load_analogy_file(tmp / "unnamed.txt")));
}

TEST_CASE("eval_analogy is perfect on the planted relation") {
  const auto model = planted_relation_model(8);
  const UnitEmbedding emb(model);
  std::vector<AnalogySection> sections(1);
  sections[0].name = "family";
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      if (i == j) continue;
      sections[0].questions.push_back({"x" + std::to_string(i), "y" + std::to_string(i),
                                       "x" + std::to_string(j), "y" + std::to_string(j)});
    }
  }
  const AnalogyEval eval = eval_analogy(emb, sections);
  CHECK(eval.all.total == 56);
  CHECK(eval.all.skipped == 0);
  CHECK(eval.all.correct == 56);
  REQUIRE(eval.all.accuracy.has_value());
  CHECK(*eval.all.accuracy == doctest::Approx(1.0));
  CHECK(eval.family.total == 56);
  CHECK(eval.syntax.total == 0);
  CHECK(!eval.syntax.accuracy.has_value());
}

TEST_CASE("eval_analogy OOV handling: skip vs count-as-wrong") {
  const auto model = planted_relation_model(4);
  const UnitEmbedding emb(model);
  std::vector<AnalogySection> sections(1);
  sections[0].name = "gram2-test";
  sections[0].questions.push_back({"x0", "y0", "x1", "y1"});
  sections[0].questions.push_back({"x0", "y0", "missing", "y1"});  // unusable c
  sections[0].questions.push_back({"x2", "y2", "x3", "missing"});  // unusable expected

  const AnalogyEval skip = eval_analogy(emb, sections, OovMode::kSkip);
  CHECK(skip.all.total == 3);
  CHECK(skip.all.skipped == 2);
  CHECK(skip.all.answered == 1);
  CHECK(*skip.all.accuracy == doctest::Approx(1.0));
  CHECK(skip.syntax.total == 3);

  const AnalogyEval wrong = eval_analogy(emb, sections, OovMode::kCountAsWrong);
  CHECK(wrong.all.total == 3);
  CHECK(wrong.all.skipped == 2);
  CHECK(wrong.all.correct == 1);
  CHECK(*wrong.all.accuracy == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("eval_analogy multithreaded equals single-threaded") {
  const auto model = planted_relation_model(10);
  const UnitEmbedding emb(model);
  std::vector<AnalogySection> sections(2);
  sections[0].name = "family";
  sections[1].name = "gram1-x";
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      if (i == j) continue;
      sections[static_cast<size_t>(i % 2)].questions.push_back(
          {"x" + std::to_string(i), "y" + std::to_string(i), "x" + std::to_string(j),
           "y" + std::to_string(j)});
    }
  }
  const AnalogyEval one = eval_analogy(emb, sections, OovMode::kSkip, 1);
  const AnalogyEval four = eval_analogy(emb, sections, OovMode::kSkip, 4);
  CHECK(one.all.correct == four.all.correct);
  CHECK(one.all.skipped == four.all.skipped);
  CHECK(one.family.correct == four.family.correct);
  CHECK(one.syntax.correct == four.syntax.correct);
}

TEST_CASE("oov_mode_from_string accepts both spellings") {
  CHECK(oov_mode_from_string("skip") == OovMode::kSkip);
  CHECK(oov_mode_from_string("wrong") == OovMode::kCountAsWrong);
  CHECK(oov_mode_from_string("count-as-wrong") == OovMode::kCountAsWrong);
  CHECK_THROWS(oov_mode_from_string("maybe"));
}

TEST_CASE("spearman hand values") {
  const std::vector<double> asc = {1, 2, 3, 4, 5};
  const std::vector<double> desc = {9, 7, 5, 3, 1};
  const std::vector<double> scrambled = {2.5, -1, 7, 0, 11};
  CHECK(spearman(asc, asc) == 1.0);
  CHECK(spearman(asc, desc) == -1.0);
  // Monotone transforms do not change ranks.
  CHECK(spearman(asc, scrambled) == spearman(desc, scrambled) * -1.0);
}

TEST_CASE("spearman matches the rank oracle on tied data") {
  Rng rng(314);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = 2 + rng.next_below(19);  // 2..20
    std::vector<double> x(n), y(n);
    bool degenerate = true;
    while (degenerate) {
      for (auto& v : x) v = static_cast<double>(rng.next_below(6));  // heavy ties
      for (auto& v : y) v = static_cast<double>(rng.next_below(6));
      const auto varies = [](const std::vector<double>& v) {
        return std::any_of(v.begin(), v.end(), [&](double e) { return e != v[0]; });
      };
      degenerate = !varies(x) || !varies(y);
    }
    const double got = spearman(x, y);
    const double want = spearman_oracle(x, y);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
    CHECK(got >= -1.0);
    CHECK(got <= 1.0);
  }
}

TEST_CASE("spearman rejects degenerate input") {
  const std::vector<double> flat = {2, 2, 2};
  const std::vector<double> var = {1, 2, 3};
  CHECK_THROWS(spearman(flat, var));
  CHECK_THROWS(spearman(var, flat));
  CHECK_THROWS(spearman(std::vector<double>{1.0}, std::vector<double>{2.0}));
  CHECK_THROWS(spearman(var, std::vector<double>{1, 2}));
}

TEST_CASE("load_wordsim_csv enforces the header and field count") {
  TempDir tmp;
  write_file(tmp / "ok.csv", "word1,word2,score\nTiger,Cat,7.35\nbook,paper,5.0\n");
  const auto pairs = load_wordsim_csv(tmp / "ok.csv");
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].w1 == "tiger");
  CHECK(pairs[0].w2 == "cat");
  CHECK(pairs[0].human_score == doctest::Approx(7.35));

  write_file(tmp / "bad_header.csv", "a,b,c\nx,y,1\n");
  CHECK_THROWS(static_cast<void>(load_wordsim_csv(tmp / "bad_header.csv")));
  write_file(tmp / "bad_fields.csv", "word1,word2,score\nx,y\n");
  CHECK_THROWS(static_cast<void>(load_wordsim_csv(tmp / "bad_fields.csv")));
  write_file(tmp / "bad_score.csv", "word1,word2,score\nx,y,high\n");
  CHECK_THROWS(static_cast<void>(load_wordsim_csv(tmp / "bad_score.csv")));
}

TEST_CASE("eval_wordsim correlates cosines with human scores") {
  // Vectors arranged on a quarter circle: cosine to "anchor" decreases in
  // order w1 > w2 > w3; human scores agree for rho = 1, disagree for -1.
  const double pi = 3.14159265358979323846;
  const auto at = [&](double frac) {
    return std::vector<double>{std::cos(frac * pi / 2.0), std::sin(frac * pi / 2.0)};
  };
  const auto model = testutil::model_from_rows({"anchor", "w1", "w2", "w3"},
                                               {at(0.0), at(0.2), at(0.5), at(0.9)});
  const UnitEmbedding emb(model);

  std::vector<SimilarityPair> pairs = {
      {"anchor", "w1", 10.0}, {"anchor", "w2", 6.0}, {"anchor", "w3", 1.0}};
  const WordSimEval agree = eval_wordsim(emb, pairs);
  CHECK(agree.rho == doctest::Approx(1.0));
  CHECK(agree.n_used == 3);
  CHECK(agree.n_total == 3);
  CHECK(agree.p_value >= 0.0);
  CHECK(agree.p_value <= 1.0);

  pairs[0].human_score = 1.0;
  pairs[2].human_score = 10.0;
  const WordSimEval disagree = eval_wordsim(emb, pairs);
  CHECK(disagree.rho == doctest::Approx(-1.0));
}

TEST_CASE("eval_wordsim skips out-of-vocabulary pairs") {
  const auto model = testutil::random_model(6, 4, 12);
  const UnitEmbedding emb(model);
  std::vector<SimilarityPair> pairs = {
      {"w0", "w1", 3.0}, {"w2", "w3", 5.0}, {"w4", "ghost", 9.0}, {"ghost", "w5", 2.0}};
  const WordSimEval eval = eval_wordsim(emb, pairs);
  CHECK(eval.n_total == 4);
  CHECK(eval.n_used == 2);

  const std::vector<SimilarityPair> hopeless = {{"ghost", "w0", 1.0}, {"w1", "w2", 2.0}};
  CHECK_THROWS(eval_wordsim(emb, hopeless));
}
