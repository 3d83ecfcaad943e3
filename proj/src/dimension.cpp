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

#include "dimvec/dimension.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dimvec/rng.hpp"

namespace dimvec {

namespace {

[[noreturn]] void fail_at(const std::filesystem::path& path, size_t line_no, const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::string lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::optional<int32_t> lookup(const UnitEmbedding& emb, const std::string& word) {
  const auto id = emb.vocab().find(word);
  if (!id || !emb.has_unit(*id)) return std::nullopt;
  return id;
}

double coverage_of(const UnitEmbedding& emb, const std::vector<LexiconEntry>& entries) {
  if (entries.empty()) return 0.0;
  size_t used = 0;
  for (const auto& entry : entries) {
    if (lookup(emb, entry.word)) ++used;
  }
  return static_cast<double>(used) / static_cast<double>(entries.size());
}

// Mean projection of in-vocabulary positive-pole train anchors onto the axis.
double positive_pole_mean_projection(const UnitEmbedding& emb, const AnchorLexicon& lexicon,
                                     const std::vector<double>& axis) {
  double sum = 0.0;
  size_t n = 0;
  for (const auto& entry : lexicon.split_entries(Split::kTrain)) {
    if (entry.pole != Pole::kPositive) continue;
    const auto id = lookup(emb, entry.word);
    if (!id) continue;
    const auto u = emb.unit(*id);
    double d = 0.0;
    for (size_t i = 0; i < axis.size(); ++i) d += axis[i] * u[i];
    sum += d;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

// Cross-validation units: paired train entries move as one unit, unpaired
// entries are their own unit. Entries are indices into lexicon.entries.
std::vector<std::vector<size_t>> fold_units(const AnchorLexicon& lexicon) {
  std::map<int32_t, std::vector<size_t>> paired;
  std::vector<std::vector<size_t>> units;
  for (size_t i = 0; i < lexicon.entries.size(); ++i) {
    const auto& entry = lexicon.entries[i];
    if (entry.split != Split::kTrain) continue;
    if (entry.pair_id) {
      paired[*entry.pair_id].push_back(i);
    } else {
      units.push_back({i});
    }
  }
  std::vector<std::vector<size_t>> out;
  out.reserve(paired.size() + units.size());
  for (auto& [id, members] : paired) out.push_back(std::move(members));
  for (auto& unit : units) out.push_back(std::move(unit));
  return out;
}

void shuffle_units(std::vector<std::vector<size_t>>& units, Rng& rng) {
  for (size_t i = units.size(); i > 1; --i) {
    const size_t j = rng.next_below(i);
    std::swap(units[i - 1], units[j]);
  }
}

struct AnchorMatrix {
  std::vector<std::vector<double>> rows;  // unit vector + trailing constant 1
  std::vector<double> labels;             // +1 positive, -1 negative
};

AnchorMatrix collect_anchors(const UnitEmbedding& emb, const std::vector<LexiconEntry>& entries) {
  AnchorMatrix m;
  for (const auto& entry : entries) {
    const auto id = lookup(emb, entry.word);
    if (!id) continue;
    const auto u = emb.unit(*id);
    std::vector<double> row(u.begin(), u.end());
    row.push_back(1.0);
    m.rows.push_back(std::move(row));
    m.labels.push_back(entry.pole == Pole::kPositive ? 1.0 : -1.0);
  }
  return m;
}

// Dual coordinate descent for the L1-loss (hinge) linear SVM. The bias is
// the weight of a constant feature appended to every row.
std::vector<double> solve_svm_dual(const AnchorMatrix& anchors, double c, double tolerance,
                                   int32_t max_epochs, Rng& rng) {
  const size_t n = anchors.rows.size();
  const size_t dim = anchors.rows.front().size();
  std::vector<double> alpha(n, 0.0);
  std::vector<double> w(dim, 0.0);
  std::vector<double> qii(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const double x : anchors.rows[i]) s += x * x;
    qii[i] = s;
  }

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  for (int32_t epoch = 0; epoch < max_epochs; ++epoch) {
    for (size_t i = n; i > 1; --i) {
      const size_t j = rng.next_below(i);
      std::swap(order[i - 1], order[j]);
    }
    double max_violation = 0.0;
    for (const size_t i : order) {
      const auto& x = anchors.rows[i];
      const double y = anchors.labels[i];
      double wx = 0.0;
      for (size_t d = 0; d < dim; ++d) wx += w[d] * x[d];
      const double g = y * wx - 1.0;

      double pg = g;
      if (alpha[i] <= 0.0) {
        pg = std::min(g, 0.0);
      } else if (alpha[i] >= c) {
        pg = std::max(g, 0.0);
      }
      max_violation = std::max(max_violation, std::fabs(pg));
      if (std::fabs(pg) > 1e-12) {
        const double old = alpha[i];
        alpha[i] = std::min(std::max(old - g / qii[i], 0.0), c);
        const double delta = (alpha[i] - old) * y;
        if (delta != 0.0) {
          for (size_t d = 0; d < dim; ++d) w[d] += delta * x[d];
        }
      }
    }
    if (max_violation < tolerance) break;
  }
  return w;
}

double svm_score(const std::vector<double>& w, const std::vector<double>& row) {
  double s = 0.0;
  for (size_t d = 0; d < row.size(); ++d) s += w[d] * row[d];
  return s;
}

}  // namespace

std::string to_string(Pole pole) { return pole == Pole::kPositive ? "positive" : "negative"; }
std::string to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

std::string to_string(DimMethod method) {
  switch (method) {
    case DimMethod::kLarsen: return "larsen";
    case DimMethod::kBolukbasi: return "bolukbasi";
    case DimMethod::kSvm: return "svm";
  }
  throw std::logic_error("unreachable");
}

DimMethod dim_method_from_string(const std::string& s) {
  if (s == "larsen") return DimMethod::kLarsen;
  if (s == "bolukbasi") return DimMethod::kBolukbasi;
  if (s == "svm") return DimMethod::kSvm;
  throw std::invalid_argument("unknown dimension method: " + s);
}

std::vector<LexiconEntry> AnchorLexicon::split_entries(Split split) const {
  std::vector<LexiconEntry> out;
  for (const auto& entry : entries) {
    if (entry.split == split) out.push_back(entry);
  }
  return out;
}

std::vector<int32_t> AnchorLexicon::pair_ids() const {
  std::set<int32_t> ids;
  for (const auto& entry : entries) {
    if (entry.split == Split::kTrain && entry.pair_id) ids.insert(*entry.pair_id);
  }
  return {ids.begin(), ids.end()};
}

bool AnchorLexicon::fully_paired() const {
  bool any = false;
  for (const auto& entry : entries) {
    if (entry.split != Split::kTrain) continue;
    any = true;
    if (!entry.pair_id) return false;
  }
  return any;
}

void AnchorLexicon::validate() const {
  if (entries.empty()) throw std::runtime_error("lexicon \"" + name + "\" has no entries");
  std::map<int32_t, std::pair<int, int>> pair_counts;  // id -> (positive, negative)
  std::set<std::string> test_words;
  for (const auto& entry : entries) {
    if (entry.word.empty()) throw std::runtime_error("lexicon \"" + name + "\" has an empty word");
    if (entry.split == Split::kTrain && entry.pair_id) {
      auto& counts = pair_counts[*entry.pair_id];
      (entry.pole == Pole::kPositive ? counts.first : counts.second) += 1;
    }
    if (entry.split == Split::kTest && !test_words.insert(entry.word).second) {
      throw std::runtime_error("lexicon \"" + name + "\": duplicate test word \"" + entry.word + "\"");
    }
  }
  for (const auto& [id, counts] : pair_counts) {
    if (counts.first != 1 || counts.second != 1) {
      throw std::runtime_error("lexicon \"" + name + "\": pair " + std::to_string(id) +
                               " must have exactly one positive and one negative train word");
    }
  }
}

AnchorLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());

  AnchorLexicon lexicon;
  lexicon.name = path.stem().string();

  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line[0] == '#') {
      const std::string body = trim(line.substr(1));
      if (body.rfind("name:", 0) == 0) {
        const std::string value = trim(body.substr(5));
        if (value.empty()) fail_at(path, line_no, "empty lexicon name directive");
        lexicon.name = value;
      } else if (body.rfind("poles:", 0) == 0) {
        const std::string value = trim(body.substr(6));
        const auto comma = value.find(',');
        if (comma == std::string::npos) {
          fail_at(path, line_no, "poles directive must be \"# poles: positive_label,negative_label\"");
        }
        lexicon.pole_names = {trim(value.substr(0, comma)), trim(value.substr(comma + 1))};
        if (lexicon.pole_names.first.empty() || lexicon.pole_names.second.empty()) {
          fail_at(path, line_no, "empty pole label");
        }
      }
      continue;
    }

    std::vector<std::string> fields;
    {
      std::string field;
      std::istringstream ss(line);
      while (std::getline(ss, field, '\t')) fields.push_back(field);
      if (!line.empty() && line.back() == '\t') fields.push_back("");
    }
    if (fields.size() != 4) {
      fail_at(path, line_no, "expected 4 tab-separated fields (word, pole, pair_id, split), got " +
                                 std::to_string(fields.size()));
    }

    LexiconEntry entry;
    entry.word = lower_ascii(trim(fields[0]));
    if (entry.word.empty()) fail_at(path, line_no, "empty word");

    const std::string pole = trim(fields[1]);
    if (pole == "positive") {
      entry.pole = Pole::kPositive;
    } else if (pole == "negative") {
      entry.pole = Pole::kNegative;
    } else {
      fail_at(path, line_no, "pole must be \"positive\" or \"negative\", got \"" + pole + "\"");
    }

    const std::string pair_id = trim(fields[2]);
    if (!pair_id.empty()) {
      int32_t value = 0;
      const auto res = std::from_chars(pair_id.data(), pair_id.data() + pair_id.size(), value);
      if (res.ec != std::errc() || res.ptr != pair_id.data() + pair_id.size()) {
        fail_at(path, line_no, "malformed pair_id: \"" + pair_id + "\"");
      }
      entry.pair_id = value;
    }

    const std::string split = trim(fields[3]);
    if (split == "train") {
      entry.split = Split::kTrain;
    } else if (split == "test") {
      entry.split = Split::kTest;
    } else if (split.empty()) {
      fail_at(path, line_no, "empty split");
    } else {
      fail_at(path, line_no, "split must be \"train\" or \"test\", got \"" + split + "\"");
    }
    lexicon.entries.push_back(std::move(entry));
  }
  lexicon.validate();
  return lexicon;
}

Dimension extract_larsen(const UnitEmbedding& emb, const AnchorLexicon& lexicon) {
  const auto train = lexicon.split_entries(Split::kTrain);
  std::vector<double> pos(static_cast<size_t>(emb.dim()), 0.0);
  std::vector<double> neg(static_cast<size_t>(emb.dim()), 0.0);
  size_t n_pos = 0;
  size_t n_neg = 0;
  for (const auto& entry : train) {
    const auto id = lookup(emb, entry.word);
    if (!id) continue;
    const auto u = emb.unit(*id);
    auto& acc = entry.pole == Pole::kPositive ? pos : neg;
    for (size_t d = 0; d < acc.size(); ++d) acc[d] += u[d];
    (entry.pole == Pole::kPositive ? n_pos : n_neg) += 1;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw std::runtime_error("lexicon \"" + lexicon.name + "\": pole \"" +
                             (n_pos == 0 ? lexicon.pole_names.first : lexicon.pole_names.second) +
                             "\" has no in-vocabulary train anchors");
  }

  Dimension dim;
  dim.name = lexicon.name;
  dim.pole_names = lexicon.pole_names;
  dim.method = DimMethod::kLarsen;
  dim.anchor_coverage = coverage_of(emb, train);
  dim.axis.resize(pos.size());
  double ss = 0.0;
  for (size_t d = 0; d < pos.size(); ++d) {
    dim.axis[d] = pos[d] / static_cast<double>(n_pos) - neg[d] / static_cast<double>(n_neg);
    ss += dim.axis[d] * dim.axis[d];
  }
  if (ss == 0.0) {
    throw std::runtime_error("lexicon \"" + lexicon.name + "\": pole means are identical");
  }
  const double inv = 1.0 / std::sqrt(ss);
  for (double& x : dim.axis) x *= inv;
  return dim;
}

Dimension extract_bolukbasi(const UnitEmbedding& emb, const AnchorLexicon& lexicon) {
  if (!lexicon.fully_paired()) {
    throw std::runtime_error("lexicon \"" + lexicon.name +
                             "\": PCA extraction requires a fully paired lexicon");
  }

  // One positive and one negative train word per pair id, guaranteed by
  // validate(). Pairs with either member out of vocabulary are dropped.
  std::map<int32_t, std::pair<std::optional<int32_t>, std::optional<int32_t>>> pairs;
  for (const auto& entry : lexicon.entries) {
    if (entry.split != Split::kTrain) continue;
    auto& slot = pairs[*entry.pair_id];
    (entry.pole == Pole::kPositive ? slot.first : slot.second) = lookup(emb, entry.word);
  }

  const auto n = static_cast<size_t>(emb.dim());
  std::vector<std::vector<double>> rows;
  for (const auto& [id, members] : pairs) {
    if (!members.first || !members.second) continue;
    const auto up = emb.unit(*members.first);
    const auto un = emb.unit(*members.second);
    std::vector<double> centered_pos(n);
    std::vector<double> centered_neg(n);
    for (size_t d = 0; d < n; ++d) {
      const double mean = 0.5 * (up[d] + un[d]);
      centered_pos[d] = up[d] - mean;
      centered_neg[d] = un[d] - mean;
    }
    rows.push_back(std::move(centered_pos));
    rows.push_back(std::move(centered_neg));
  }
  if (rows.size() < 4) {
    throw std::runtime_error("lexicon \"" + lexicon.name +
                             "\": PCA extraction needs at least 2 complete in-vocabulary pairs");
  }

  const size_t m = rows.size();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < m; ++i) {
    for (size_t d = 0; d < n; ++d) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i][d];
  }

  // First principal component via the smaller of the two scatter matrices.
  Eigen::VectorXd axis;
  double top_eigenvalue = 0.0;
  if (n <= m) {
    const Eigen::MatrixXd scatter = a.transpose() * a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(scatter);
    top_eigenvalue = solver.eigenvalues()(static_cast<Eigen::Index>(n - 1));
    axis = solver.eigenvectors().col(static_cast<Eigen::Index>(n - 1));
  } else {
    const Eigen::MatrixXd gram = a * a.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    top_eigenvalue = solver.eigenvalues()(static_cast<Eigen::Index>(m - 1));
    axis = a.transpose() * solver.eigenvectors().col(static_cast<Eigen::Index>(m - 1));
  }
  if (!(top_eigenvalue > 1e-12)) {
    throw std::runtime_error("lexicon \"" + lexicon.name +
                             "\": centered anchor vectors have zero scatter");
  }
  axis.normalize();

  Dimension dim;
  dim.name = lexicon.name;
  dim.pole_names = lexicon.pole_names;
  dim.method = DimMethod::kBolukbasi;
  dim.anchor_coverage = coverage_of(emb, lexicon.split_entries(Split::kTrain));
  dim.axis.assign(axis.data(), axis.data() + axis.size());

  const double orientation = positive_pole_mean_projection(emb, lexicon, dim.axis);
  if (orientation == 0.0) {
    throw std::runtime_error("lexicon \"" + lexicon.name +
                             "\": cannot orient axis (positive anchors project to zero)");
  }
  if (orientation < 0.0) {
    for (double& x : dim.axis) x = -x;
  }
  return dim;
}

LinearClassifier train_svm(const UnitEmbedding& emb, const AnchorLexicon& lexicon,
                           const SvmOptions& options) {
  if (options.c_grid.empty()) throw std::invalid_argument("C grid must be non-empty");
  const auto train = lexicon.split_entries(Split::kTrain);

  size_t pos_in_vocab = 0;
  size_t neg_in_vocab = 0;
  for (const auto& entry : train) {
    if (!lookup(emb, entry.word)) continue;
    (entry.pole == Pole::kPositive ? pos_in_vocab : neg_in_vocab) += 1;
  }
  if (pos_in_vocab < 2 || neg_in_vocab < 2) {
    throw std::runtime_error("lexicon \"" + lexicon.name +
                             "\": SVM needs at least 2 in-vocabulary train anchors per pole");
  }

  Rng rng(options.seed);

  // Select C by cross-validation over fold units (pairs move together),
  // pooled heldout accuracy, ties to the earliest grid entry.
  auto units = fold_units(lexicon);
  shuffle_units(units, rng);
  const int32_t folds = static_cast<int32_t>(std::min<size_t>(5, units.size()));

  double best_accuracy = -1.0;
  double best_c = options.c_grid.front();
  for (const double c : options.c_grid) {
    int64_t correct = 0;
    int64_t total = 0;
    for (int32_t f = 0; f < folds; ++f) {
      std::vector<LexiconEntry> fold_train;
      std::vector<LexiconEntry> heldout;
      for (size_t uidx = 0; uidx < units.size(); ++uidx) {
        for (const size_t e : units[uidx]) {
          (static_cast<int32_t>(uidx % static_cast<size_t>(folds)) == f ? heldout : fold_train)
              .push_back(lexicon.entries[e]);
        }
      }
      const AnchorMatrix anchors = collect_anchors(emb, fold_train);
      if (anchors.rows.empty()) continue;
      const std::vector<double> w =
          solve_svm_dual(anchors, c, options.tolerance, options.max_epochs, rng);
      const AnchorMatrix held = collect_anchors(emb, heldout);
      for (size_t i = 0; i < held.rows.size(); ++i) {
        const double score = svm_score(w, held.rows[i]);
        const bool predicted_positive = score > 0.0;
        if (predicted_positive == (held.labels[i] > 0.0)) ++correct;
        ++total;
      }
    }
    const double accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    if (accuracy > best_accuracy) {
      best_accuracy = accuracy;
      best_c = c;
    }
  }

  const AnchorMatrix anchors = collect_anchors(emb, train);
  const std::vector<double> w =
      solve_svm_dual(anchors, best_c, options.tolerance, options.max_epochs, rng);

  LinearClassifier clf;
  clf.name = lexicon.name;
  clf.pole_names = lexicon.pole_names;
  clf.C = best_c;
  clf.weight.assign(w.begin(), w.end() - 1);
  clf.bias = w.back();
  if (anchors.rows.size() < static_cast<size_t>(emb.dim())) {
    clf.warnings.push_back("anchor count (" + std::to_string(anchors.rows.size()) +
                           ") is below the embedding dimensionality (" + std::to_string(emb.dim()) +
                           "); the classifier may overfit");
  }
  return clf;
}

double project(const UnitEmbedding& emb, const Dimension& dim, const std::string& word) {
  const int32_t id = emb.require(word);
  return cosine(emb.unit(id), dim.axis);
}

double decision_value(const UnitEmbedding& emb, const LinearClassifier& clf,
                      const std::string& word) {
  const int32_t id = emb.require(word);
  const auto u = emb.unit(id);
  if (clf.weight.size() != u.size()) {
    throw std::invalid_argument("classifier dimensionality does not match the model");
  }
  double s = clf.bias;
  for (size_t d = 0; d < u.size(); ++d) s += clf.weight[d] * u[d];
  return s;
}

namespace {

template <typename Scorer>
ClassificationReport classify_with(const UnitEmbedding& emb, const AnchorLexicon& lexicon,
                                   Split split, const std::pair<std::string, std::string>& poles,
                                   Scorer&& scorer) {
  ClassificationReport report;
  report.split = split;
  for (const auto& entry : lexicon.split_entries(split)) {
    if (!lookup(emb, entry.word)) {
      ++report.oov;
      continue;
    }
    WordClassification wc;
    wc.word = entry.word;
    wc.score = scorer(entry.word);
    const bool positive = wc.score > 0.0;
    wc.boundary = wc.score == 0.0;
    wc.predicted_pole = positive ? poles.first : poles.second;
    wc.correct = positive == (entry.pole == Pole::kPositive);
    report.correct += wc.correct ? 1 : 0;
    ++report.total;
    report.words.push_back(std::move(wc));
  }
  if (report.total == 0) {
    throw std::runtime_error("lexicon \"" + lexicon.name + "\": no usable anchors in the " +
                             to_string(split) + " split");
  }
  report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.total);
  return report;
}

}  // namespace

ClassificationReport classify(const UnitEmbedding& emb, const Dimension& dim,
                              const AnchorLexicon& lexicon, Split split) {
  return classify_with(emb, lexicon, split, dim.pole_names,
                       [&](const std::string& word) { return project(emb, dim, word); });
}

ClassificationReport classify(const UnitEmbedding& emb, const LinearClassifier& clf,
                              const AnchorLexicon& lexicon, Split split) {
  return classify_with(emb, lexicon, split, clf.pole_names,
                       [&](const std::string& word) { return decision_value(emb, clf, word); });
}

CrossValidation crossvalidate_lexicon(const UnitEmbedding& emb, const AnchorLexicon& lexicon,
                                      int32_t folds, DimMethod method, uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
  auto units = fold_units(lexicon);
  if (units.size() < static_cast<size_t>(folds)) {
    throw std::runtime_error("lexicon \"" + lexicon.name + "\": " + std::to_string(units.size()) +
                             " anchor units cannot fill " + std::to_string(folds) + " folds");
  }
  Rng rng(seed);
  shuffle_units(units, rng);

  double train_sum = 0.0;
  int32_t train_folds = 0;
  double heldout_sum = 0.0;
  int32_t heldout_folds = 0;
  for (int32_t f = 0; f < folds; ++f) {
    AnchorLexicon fold_lexicon;
    fold_lexicon.name = lexicon.name;
    fold_lexicon.pole_names = lexicon.pole_names;
    std::vector<LexiconEntry> heldout;
    for (size_t uidx = 0; uidx < units.size(); ++uidx) {
      for (const size_t e : units[uidx]) {
        if (static_cast<int32_t>(uidx % static_cast<size_t>(folds)) == f) {
          heldout.push_back(lexicon.entries[e]);
        } else {
          fold_lexicon.entries.push_back(lexicon.entries[e]);
        }
      }
    }

    std::function<double(const std::string&)> scorer;
    if (method == DimMethod::kSvm) {
      SvmOptions options;
      options.seed = seed + static_cast<uint64_t>(f) + 1;
      const LinearClassifier clf = train_svm(emb, fold_lexicon, options);
      scorer = [&emb, clf](const std::string& word) { return decision_value(emb, clf, word); };
    } else {
      const Dimension dim = method == DimMethod::kLarsen ? extract_larsen(emb, fold_lexicon)
                                                         : extract_bolukbasi(emb, fold_lexicon);
      scorer = [&emb, dim](const std::string& word) { return project(emb, dim, word); };
    }

    int64_t fold_correct = 0;
    int64_t fold_total = 0;
    const auto score_entries = [&](const std::vector<LexiconEntry>& entries, int64_t& correct,
                                   int64_t& total) {
      for (const auto& entry : entries) {
        if (!lookup(emb, entry.word)) continue;
        const bool positive = scorer(entry.word) > 0.0;
        if (positive == (entry.pole == Pole::kPositive)) ++correct;
        ++total;
      }
    };
    score_entries(fold_lexicon.entries, fold_correct, fold_total);
    if (fold_total > 0) {
      train_sum += static_cast<double>(fold_correct) / static_cast<double>(fold_total);
      ++train_folds;
    }
    int64_t held_correct = 0;
    int64_t held_total = 0;
    score_entries(heldout, held_correct, held_total);
    if (held_total > 0) {
      heldout_sum += static_cast<double>(held_correct) / static_cast<double>(held_total);
      ++heldout_folds;
    }
  }
  if (heldout_folds == 0) {
    throw std::runtime_error("lexicon \"" + lexicon.name +
                             "\": no fold had usable heldout anchors");
  }

  CrossValidation cv;
  cv.folds = folds;
  cv.mean_train_accuracy = train_folds == 0 ? 0.0 : train_sum / static_cast<double>(train_folds);
  cv.mean_heldout_accuracy = heldout_sum / static_cast<double>(heldout_folds);
  return cv;
}

double dim_similarity(const Dimension& a, const Dimension& b) {
  return cosine(a.axis, b.axis);
}

}  // namespace dimvec
