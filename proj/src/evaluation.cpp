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

#include "dimvec/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

namespace dimvec {

namespace {

std::string lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

[[noreturn]] void fail_at(const std::filesystem::path& path, size_t line_no, const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::string trim(const std::string& s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

void finish_section(SectionResult& r, OovMode mode) {
  const int64_t denom = mode == OovMode::kSkip ? r.answered : r.total;
  if (denom > 0) {
    r.accuracy = static_cast<double>(r.correct) / static_cast<double>(denom);
  } else {
    r.accuracy = std::nullopt;
  }
}

void add_counts(SectionResult& agg, const SectionResult& r) {
  agg.total += r.total;
  agg.skipped += r.skipped;
  agg.answered += r.answered;
  agg.correct += r.correct;
}

// Doubled midranks: for a tie group occupying sorted positions [lo, hi]
// (0-based), each member's doubled 1-based average rank is lo + hi + 2.
std::vector<int64_t> doubled_ranks(std::span<const double> x) {
  const size_t n = x.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });

  std::vector<int64_t> rank(n, 0);
  size_t lo = 0;
  while (lo < n) {
    size_t hi = lo;
    while (hi + 1 < n && x[order[hi + 1]] == x[order[lo]]) ++hi;
    const int64_t doubled = static_cast<int64_t>(lo) + static_cast<int64_t>(hi) + 2;
    for (size_t i = lo; i <= hi; ++i) rank[order[i]] = doubled;
    lo = hi + 1;
  }
  return rank;
}

// Regularized incomplete beta by Lentz's continued fraction; used only for
// the advisory t-test p-value.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 200;
  constexpr double kEps = 3e-14;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double incbeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double front = std::exp(a * std::log(x) + b * std::log(1.0 - x) - ln_beta);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double t_two_sided_p(double rho, int64_t n) {
  if (n < 3) return 1.0;
  const double r2 = std::min(rho * rho, 1.0 - 1e-15);
  const double df = static_cast<double>(n - 2);
  const double t2 = r2 * df / (1.0 - r2);
  return incbeta(df / 2.0, 0.5, df / (df + t2));
}

}  // namespace

std::vector<AnalogySection> load_analogy_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());

  std::vector<AnalogySection> sections;
  std::unordered_set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    if (trimmed[0] == ':') {
      const std::string name = trim(trimmed.substr(1));
      if (name.empty()) fail_at(path, line_no, "section header with empty name");
      if (!seen.insert(name).second) fail_at(path, line_no, "duplicate section name: " + name);
      sections.push_back({name, {}});
      continue;
    }
    auto tokens = split_ws(trimmed);
    if (tokens.size() != 4) {
      fail_at(path, line_no,
              "expected 4 tokens on question line, got " + std::to_string(tokens.size()));
    }
    if (sections.empty()) fail_at(path, line_no, "question before first section header");
    sections.back().questions.push_back({lower_ascii(tokens[0]), lower_ascii(tokens[1]),
                                         lower_ascii(tokens[2]), lower_ascii(tokens[3])});
  }
  return sections;
}

std::string to_string(OovMode mode) {
  return mode == OovMode::kSkip ? "skip" : "wrong";
}

OovMode oov_mode_from_string(const std::string& s) {
  if (s == "skip") return OovMode::kSkip;
  if (s == "wrong" || s == "count-as-wrong") return OovMode::kCountAsWrong;
  throw std::invalid_argument("unknown OOV mode: " + s);
}

AnalogyEval eval_analogy(const UnitEmbedding& emb, const std::vector<AnalogySection>& sections,
                         OovMode mode, int32_t threads) {
  AnalogyEval eval;
  eval.mode = mode;
  eval.sections.resize(sections.size());

  const auto usable = [&](const std::string& token) {
    const auto id = emb.vocab().find(token);
    return id.has_value() && emb.has_unit(*id);
  };

  for (size_t s = 0; s < sections.size(); ++s) {
    SectionResult& r = eval.sections[s];
    r.name = sections[s].name;
    r.total = static_cast<int64_t>(sections[s].questions.size());

    const auto& questions = sections[s].questions;
    const size_t n = questions.size();
    const size_t n_threads =
        std::max<size_t>(1, std::min<size_t>(static_cast<size_t>(std::max<int32_t>(1, threads)),
                                             n == 0 ? 1 : n));
    std::vector<int64_t> skipped(n_threads, 0);
    std::vector<int64_t> correct(n_threads, 0);
    const auto worker = [&](size_t tid) {
      const size_t begin = n * tid / n_threads;
      const size_t end = n * (tid + 1) / n_threads;
      for (size_t q = begin; q < end; ++q) {
        const auto& question = questions[q];
        if (!usable(question.a) || !usable(question.b) || !usable(question.c) ||
            !usable(question.expected)) {
          ++skipped[tid];
          continue;
        }
        const QueryResult result = analogy(emb, question.a, question.b, question.c);
        if (result.word == question.expected) ++correct[tid];
      }
    };
    if (n_threads == 1) {
      worker(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(n_threads);
      for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
      for (auto& th : pool) th.join();
    }
    r.skipped = std::accumulate(skipped.begin(), skipped.end(), int64_t{0});
    r.correct = std::accumulate(correct.begin(), correct.end(), int64_t{0});
    r.answered = r.total - r.skipped;
    finish_section(r, mode);
  }

  eval.family.name = "family";
  eval.syntax.name = "syntax";
  eval.all.name = "all";
  for (const auto& r : eval.sections) {
    if (r.name == "family") add_counts(eval.family, r);
    if (r.name.rfind("gram", 0) == 0) add_counts(eval.syntax, r);
    add_counts(eval.all, r);
  }
  finish_section(eval.family, mode);
  finish_section(eval.syntax, mode);
  finish_section(eval.all, mode);
  return eval;
}

std::vector<SimilarityPair> load_wordsim_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());

  const auto split_csv = [](const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
  };

  std::string line;
  size_t line_no = 0;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv(line);
  for (auto& h : header) h = lower_ascii(h);
  if (header.size() != 3 || header[0] != "word1" || header[1] != "word2" || header[2] != "score") {
    fail_at(path, line_no, "expected CSV header word1,word2,score");
  }

  std::vector<SimilarityPair> pairs;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3) fail_at(path, line_no, "expected 3 CSV fields");
    try {
      size_t pos = 0;
      const double score = std::stod(fields[2], &pos);
      if (pos != fields[2].size() || !std::isfinite(score)) throw std::invalid_argument(fields[2]);
      pairs.push_back({lower_ascii(fields[0]), lower_ascii(fields[1]), score});
    } catch (const std::exception&) {
      fail_at(path, line_no, "malformed score: \"" + fields[2] + "\"");
    }
  }
  return pairs;
}

WordSimEval eval_wordsim(const UnitEmbedding& emb, const std::vector<SimilarityPair>& pairs) {
  std::vector<double> human;
  std::vector<double> predicted;
  for (const auto& pair : pairs) {
    const auto i1 = emb.vocab().find(pair.w1);
    const auto i2 = emb.vocab().find(pair.w2);
    if (!i1 || !i2 || !emb.has_unit(*i1) || !emb.has_unit(*i2)) continue;
    human.push_back(pair.human_score);
    predicted.push_back(cosine(emb.unit(*i1), emb.unit(*i2)));
  }
  if (human.size() < 2) {
    throw std::runtime_error("word similarity needs at least 2 pairs with both words in vocabulary");
  }
  WordSimEval eval;
  eval.n_used = static_cast<int64_t>(human.size());
  eval.n_total = static_cast<int64_t>(pairs.size());
  eval.rho = spearman(human, predicted);
  eval.p_value = t_two_sided_p(eval.rho, eval.n_used);
  return eval;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  const size_t n = x.size();
  if (n < 2) throw std::invalid_argument("spearman: need at least 2 observations");

  const std::vector<int64_t> u = doubled_ranks(x);
  const std::vector<int64_t> v = doubled_ranks(y);

  using wide = __int128;
  wide su = 0, sv = 0, suu = 0, svv = 0, suv = 0;
  for (size_t i = 0; i < n; ++i) {
    su += u[i];
    sv += v[i];
    suu += static_cast<wide>(u[i]) * u[i];
    svv += static_cast<wide>(v[i]) * v[i];
    suv += static_cast<wide>(u[i]) * v[i];
  }
  const wide wn = static_cast<wide>(n);
  const wide var_u = wn * suu - su * su;
  const wide var_v = wn * svv - sv * sv;
  if (var_u == 0 || var_v == 0) throw std::runtime_error("spearman: zero rank variance");
  const wide cov = wn * suv - su * sv;
  // sqrt of the product, not the product of sqrts: identical rankings then
  // divide a value by itself and give exactly +/-1.
  const double rho = static_cast<double>(cov) /
                     std::sqrt(static_cast<double>(var_u) * static_cast<double>(var_v));
  return std::min(1.0, std::max(-1.0, rho));
}

}  // namespace dimvec
