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
#include <map>
#include <numeric>
#include <set>

#include "dimvec/embedding.hpp"
#include "testutil.hpp"

using namespace dimvec;

namespace {

// Gradient implied by one SGD step: (theta_before - theta_after) / lr.
std::vector<double> implied_gradient(const Matrix& before, const Matrix& after, double lr) {
  std::vector<double> g(before.data.size());
  for (size_t i = 0; i < g.size(); ++i) g[i] = (before.data[i] - after.data[i]) / lr;
  return g;
}

// Central finite difference of `loss` with respect to one entry of W or
// Wprime, everything else held fixed (including the negative set).
template <typename LossFn>
double central_difference(EmbeddingModel model, bool in_W, size_t flat_index, double eps,
                          LossFn loss) {
  auto& data = in_W ? model.W.data : model.Wprime.data;
  const double saved = data[flat_index];
  data[flat_index] = saved + eps;
  const double plus = loss(model);
  data[flat_index] = saved - eps;
  const double minus = loss(model);
  return (plus - minus) / (2.0 * eps);
}

double rel_err(double a, double b) {
  const double scale = std::max({1e-8, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) / scale;
}

// Minimal cost of any prefix-free binary code for `counts`: enumerates all
// non-decreasing code-length profiles satisfying the Kraft equality (which
// are exactly the profiles realizable as full binary trees) and assigns the
// longest codes to the smallest counts.
int64_t brute_force_prefix_cost(std::vector<int64_t> counts) {
  const size_t v = counts.size();
  if (v == 1) return counts[0];  // degenerate: single leaf, zero-length code
  std::sort(counts.begin(), counts.end(), std::greater<>());
  const int max_len = static_cast<int>(v) - 1;
  const int64_t kraft_unit = int64_t{1} << max_len;  // 2^max_len
  std::vector<int> lengths(v);
  int64_t best = std::numeric_limits<int64_t>::max();
  // lengths non-decreasing; counts descending: pairing them directly is the
  // cheapest assignment for any fixed profile.
  auto rec = [&](auto&& self, size_t i, int min_len, int64_t kraft_left) -> void {
    if (i == v) {
      if (kraft_left == 0) {
        int64_t cost = 0;
        for (size_t j = 0; j < v; ++j) cost += counts[j] * lengths[j];
        best = std::min(best, cost);
      }
      return;
    }
    for (int len = min_len; len <= max_len; ++len) {
      const int64_t unit = kraft_unit >> len;  // 2^(max_len - len)
      if (unit > kraft_left) continue;  // overspends; a longer code might fit
      // Remaining leaves all get length >= len, so they can absorb at most
      // (v - i - 1) * unit; once that fails it fails for longer codes too.
      if (kraft_left - unit > static_cast<int64_t>(v - i - 1) * unit) break;
      lengths[i] = len;
      self(self, i + 1, len, kraft_left - unit);
    }
  };
  rec(rec, 0, 1, kraft_unit);
  return best;
}

int64_t huffman_cost(const Vocabulary& vocab, const HuffmanTree& tree) {
  int64_t cost = 0;
  for (int32_t i = 0; i < vocab.size(); ++i) {
    cost += vocab.at(i).count * static_cast<int64_t>(tree.codes[static_cast<size_t>(i)].size());
  }
  return cost;
}

}  // namespace

TEST_CASE("TrainingConfig validation") {
  TrainingConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.dim = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.lr_end = cfg.lr_start;  // decay needs lr_start > lr_end
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.negative = 0;
  CHECK_THROWS(cfg.validate());
  cfg.loss = Loss::kHierarchicalSoftmax;  // negative unused here
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("init_model is deterministic and bounded") {
  auto model1 = testutil::random_model(12, 8, 7);
  auto model2 = testutil::random_model(12, 8, 7);
  CHECK(model1.W.data == model2.W.data);
  const double half = 0.5 / 8.0;
  for (double x : model1.W.data) {
    CHECK(x >= -half);
    CHECK(x < half);
  }
  auto model3 = testutil::random_model(12, 8, 8);
  CHECK(model1.W.data != model3.W.data);

  TrainingConfig cfg;
  const Vocabulary vocab = Vocabulary::from_counts({{"a", 1}, {"b", 1}}, 2, 1);
  const auto fresh = init_model(vocab, cfg);
  CHECK(std::all_of(fresh.Wprime.data.begin(), fresh.Wprime.data.end(),
                    [](double x) { return x == 0.0; }));
}

TEST_CASE("noise table probabilities follow count^exponent") {
  const Vocabulary vocab = Vocabulary::from_counts({{"a", 3}, {"b", 1}}, 4, 1);
  const NoiseTable noise(vocab, 0.75, 1000);
  const double pa = std::pow(3.0, 0.75) / (std::pow(3.0, 0.75) + 1.0);
  CHECK(noise.probability(0) == doctest::Approx(pa).epsilon(1e-12));
  CHECK(noise.probability(1) == doctest::Approx(1.0 - pa).epsilon(1e-12));
}

TEST_CASE("noise table sampling matches its own distribution") {
  const Vocabulary vocab =
      Vocabulary::from_counts({{"w0", 40}, {"w1", 10}, {"w2", 5}, {"w3", 1}}, 56, 1);
  const NoiseTable noise(vocab, 0.75, 100'000);
  Rng rng(123);
  const int64_t n = 200'000;
  std::vector<int64_t> hits(4, 0);
  for (int64_t i = 0; i < n; ++i) ++hits[static_cast<size_t>(noise.sample(rng))];
  for (int32_t w = 0; w < 4; ++w) {
    const double p = noise.probability(w);
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    CHECK(std::fabs(static_cast<double>(hits[static_cast<size_t>(w)]) / n - p) < 4.0 * sigma);
  }
}

TEST_CASE("sample_excluding never returns the forbidden word") {
  const Vocabulary vocab = Vocabulary::from_counts({{"a", 100}, {"b", 1}}, 101, 1);
  const NoiseTable noise(vocab, 0.75, 1000);
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) CHECK(noise.sample_excluding(rng, 0) != 0);
}

TEST_CASE("huffman codes are prefix-free, complete, and optimal") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const int32_t v = 2 + static_cast<int32_t>(rng.next_below(9));  // 2..10
    std::unordered_map<std::string, int64_t> counts;
    int64_t total = 0;
    for (int32_t i = 0; i < v; ++i) {
      const int64_t c = 1 + static_cast<int64_t>(rng.next_below(50));
      counts["w" + std::to_string(i)] = c;
      total += c;
    }
    const Vocabulary vocab = Vocabulary::from_counts(counts, total, 1);
    const HuffmanTree tree = build_huffman(vocab);

    // Prefix-freeness and the Kraft equality (sum of 2^-len == 1).
    std::set<std::vector<uint8_t>> codes;
    double kraft = 0.0;
    for (int32_t i = 0; i < v; ++i) {
      const auto& code = tree.codes[static_cast<size_t>(i)];
      REQUIRE(!code.empty());
      REQUIRE(codes.insert(code).second);
      kraft += std::pow(2.0, -static_cast<double>(code.size()));
      for (const auto& other : codes) {
        if (other.size() < code.size()) {
          CHECK(!std::equal(other.begin(), other.end(), code.begin()));
        }
      }
      // The path has one internal node per bit, starting at the root row.
      REQUIRE(tree.points[static_cast<size_t>(i)].size() == code.size());
      CHECK(tree.points[static_cast<size_t>(i)][0] == v - 2);
      for (int32_t row : tree.points[static_cast<size_t>(i)]) {
        CHECK(row >= 0);
        CHECK(row <= v - 2);
      }
    }
    CHECK(kraft == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tree.internal_nodes == v - 1);

    // Optimality against exhaustive search over code-length profiles.
    std::vector<int64_t> raw;
    for (int32_t i = 0; i < v; ++i) raw.push_back(vocab.at(i).count);
    CHECK(huffman_cost(vocab, tree) == brute_force_prefix_cost(raw));
  }
}

TEST_CASE("cbow_probability is a distribution over targets") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int32_t v = 3 + static_cast<int32_t>(rng.next_below(10));
    const int32_t n = 2 + static_cast<int32_t>(rng.next_below(7));
    const auto model = testutil::random_model(v, n, 1000 + static_cast<uint64_t>(trial));
    std::vector<int32_t> context;
    const int32_t c = 1 + static_cast<int32_t>(rng.next_below(4));
    for (int32_t i = 0; i < c; ++i) {
      context.push_back(static_cast<int32_t>(rng.next_below(static_cast<uint64_t>(v))));
    }
    double sum = 0.0;
    for (int32_t t = 0; t < v; ++t) sum += cbow_probability(model, context, t);
    CHECK(std::fabs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("ns_loss matches the closed form on tiny weights") {
  // One input, one negative, dim 1: loss = softplus(-w*wp_t) + softplus(w*wp_n).
  auto model = testutil::model_from_rows({"in", "tgt", "neg"}, {{0.5}, {0.0}, {0.0}});
  model.Wprime.row(1)[0] = 0.8;
  model.Wprime.row(2)[0] = -0.3;
  const std::vector<int32_t> inputs = {0};
  const std::vector<int32_t> negs = {2};
  const double expect = std::log1p(std::exp(-0.5 * 0.8)) + std::log1p(std::exp(0.5 * -0.3));
  CHECK(ns_loss(model, inputs, 1, negs) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ns_step gradient matches finite differences") {
  auto model = testutil::random_model(20, 10, 42);
  const std::vector<int32_t> inputs = {2, 7, 7, 11};  // duplicate exercises additive updates
  const int32_t target = 3;
  const std::vector<int32_t> negs = {0, 5, 9, 14, 19};
  const double lr = 0.1;

  const Matrix w_before = model.W;
  const Matrix wp_before = model.Wprime;
  EmbeddingModel stepped = model;
  const double loss0 = ns_step(stepped, inputs, target, negs, lr);
  CHECK(loss0 == doctest::Approx(ns_loss(model, inputs, target, negs)));

  const auto grad_w = implied_gradient(w_before, stepped.W, lr);
  const auto grad_wp = implied_gradient(wp_before, stepped.Wprime, lr);
  const auto loss_fn = [&](const EmbeddingModel& m) { return ns_loss(m, inputs, target, negs); };

  const double eps = 1e-6;
  double max_err = 0.0;
  const std::set<int32_t> w_rows(inputs.begin(), inputs.end());
  for (int32_t row : w_rows) {
    for (int64_t d = 0; d < 10; ++d) {
      const size_t idx = static_cast<size_t>(row) * 10 + static_cast<size_t>(d);
      const double fd = central_difference(model, true, idx, eps, loss_fn);
      max_err = std::max(max_err, rel_err(fd, grad_w[idx]));
    }
  }
  std::set<int32_t> wp_rows(negs.begin(), negs.end());
  wp_rows.insert(target);
  for (int32_t row : wp_rows) {
    for (int64_t d = 0; d < 10; ++d) {
      const size_t idx = static_cast<size_t>(row) * 10 + static_cast<size_t>(d);
      const double fd = central_difference(model, false, idx, eps, loss_fn);
      max_err = std::max(max_err, rel_err(fd, grad_wp[idx]));
    }
  }
  CHECK(max_err < 1e-4);

  // Rows outside the touched set stay bit-identical.
  for (int32_t row = 0; row < 20; ++row) {
    if (w_rows.count(row)) continue;
    const auto before = w_before.row(row);
    const auto after = stepped.W.row(row);
    CHECK(std::equal(before.begin(), before.end(), after.begin()));
  }
}

TEST_CASE("hs_step gradient matches finite differences") {
  auto model = testutil::random_model(20, 10, 77);
  const HuffmanTree tree = build_huffman(model.vocab);
  const std::vector<int32_t> inputs = {1, 4, 4};
  const int32_t target = 6;
  const double lr = 0.05;

  const Matrix w_before = model.W;
  const Matrix wp_before = model.Wprime;
  EmbeddingModel stepped = model;
  const double loss0 = train_step_hs(stepped, tree, inputs, target, lr);
  CHECK(loss0 == doctest::Approx(hs_loss(model, tree, inputs, target)));

  const auto grad_w = implied_gradient(w_before, stepped.W, lr);
  const auto grad_wp = implied_gradient(wp_before, stepped.Wprime, lr);
  const auto loss_fn = [&](const EmbeddingModel& m) { return hs_loss(m, tree, inputs, target); };

  const double eps = 1e-6;
  double max_err = 0.0;
  for (int32_t row : std::set<int32_t>(inputs.begin(), inputs.end())) {
    for (int64_t d = 0; d < 10; ++d) {
      const size_t idx = static_cast<size_t>(row) * 10 + static_cast<size_t>(d);
      max_err = std::max(max_err, rel_err(central_difference(model, true, idx, eps, loss_fn),
                                          grad_w[idx]));
    }
  }
  for (int32_t row : tree.points[static_cast<size_t>(target)]) {
    for (int64_t d = 0; d < 10; ++d) {
      const size_t idx = static_cast<size_t>(row) * 10 + static_cast<size_t>(d);
      max_err = std::max(max_err, rel_err(central_difference(model, false, idx, eps, loss_fn),
                                          grad_wp[idx]));
    }
  }
  CHECK(max_err < 1e-4);
}

TEST_CASE("hs path probabilities over all leaves sum to one") {
  const auto model = testutil::random_model(9, 4, 3);
  const HuffmanTree tree = build_huffman(model.vocab);
  const std::vector<int32_t> inputs = {2, 5};
  double sum = 0.0;
  for (int32_t t = 0; t < 9; ++t) sum += std::exp(-hs_loss(model, tree, inputs, t));
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("subsample_keep keeps rare words and advances the stream") {
  Rng rng(1);
  // f = 1e-6 << t = 1e-3: keep probability is 1.
  for (int i = 0; i < 100; ++i) CHECK(subsample_keep(1, 1'000'000, 1e-3, rng));

  // The draw is consumed even when the decision is certain, so the stream
  // position matches a reference that made the same number of draws.
  Rng a(7), b(7);
  CHECK(subsample_keep(1, 1'000'000, 1e-3, a));
  (void)b.next_double();
  CHECK(a.next_u64() == b.next_u64());

  // f = 0.25, t = 1e-3: keep = (sqrt(250)+1)/250 ~ 0.0672.
  Rng c(42);
  int kept = 0;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) kept += subsample_keep(25'000, 100'000, 1e-3, c) ? 1 : 0;
  const double p = (std::sqrt(0.25 / 1e-3) + 1.0) * 1e-3 / 0.25;
  const double sigma = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::fabs(static_cast<double>(kept) / n - p) < 4.0 * sigma);

  Rng d(1);
  CHECK_THROWS(subsample_keep(1, 100, 0.0, d));
}

TEST_CASE("training reduces loss and is reproducible single-threaded") {
  const auto corpus = testutil::two_cluster_corpus(10, 20'000, 10, 11);
  const Vocabulary vocab = build_vocab(corpus, 1);
  TrainingConfig cfg;
  cfg.dim = 16;
  cfg.window = 4;
  cfg.epochs = 4;
  cfg.negative = 5;
  cfg.subsample_t = 0.0;
  cfg.seed = 3;

  auto model1 = init_model(vocab, cfg);
  TrainOptions opts;
  opts.noise_table_size = 100'000;
  const TrainStats stats = train(model1, corpus, opts);
  REQUIRE(stats.epoch_mean_loss.size() == 4);
  CHECK(stats.epoch_mean_loss.back() < stats.epoch_mean_loss.front());
  CHECK(stats.total_updates > 0);
  CHECK(stats.skipped_oov_tokens == 0);

  auto model2 = init_model(vocab, cfg);
  train(model2, corpus, opts);
  CHECK(model1.W.data == model2.W.data);
  CHECK(model1.Wprime.data == model2.Wprime.data);
}

TEST_CASE("training skips out-of-vocabulary tokens") {
  std::vector<Sentence> corpus;
  for (int i = 0; i < 200; ++i) corpus.push_back({"a", "b", "rare", "a", "b"});
  const Vocabulary vocab = build_vocab(corpus, 300);  // drops "rare" (count 200)
  REQUIRE(vocab.size() == 2);
  TrainingConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 1;
  cfg.subsample_t = 0.0;
  auto model = init_model(vocab, cfg);
  TrainOptions opts;
  opts.noise_table_size = 1000;
  const TrainStats stats = train(model, corpus, opts);
  CHECK(stats.skipped_oov_tokens == 200);
}

TEST_CASE("skip-gram and hierarchical softmax training run and stay finite") {
  const auto corpus = testutil::two_cluster_corpus(8, 10'000, 8, 21);
  const Vocabulary vocab = build_vocab(corpus, 1);

  for (const auto arch : {Architecture::kCbow, Architecture::kSkipGram}) {
    for (const auto loss : {Loss::kNegativeSampling, Loss::kHierarchicalSoftmax}) {
      TrainingConfig cfg;
      cfg.dim = 8;
      cfg.window = 3;
      cfg.epochs = 2;
      cfg.architecture = arch;
      cfg.loss = loss;
      cfg.subsample_t = 0.0;
      auto model = init_model(vocab, cfg);
      TrainOptions opts;
      opts.noise_table_size = 10'000;
      const TrainStats stats = train(model, corpus, opts);
      CHECK(stats.epoch_mean_loss.back() < stats.epoch_mean_loss.front());
      for (double x : model.W.data) CHECK(std::isfinite(x));
    }
  }
}

TEST_CASE("multi-threaded training produces finite usable vectors") {
  const auto corpus = testutil::two_cluster_corpus(10, 30'000, 10, 5);
  const Vocabulary vocab = build_vocab(corpus, 1);
  TrainingConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 2;
  cfg.subsample_t = 0.0;
  auto model = init_model(vocab, cfg);
  TrainOptions opts;
  opts.threads = 4;
  opts.noise_table_size = 100'000;
  const TrainStats stats = train(model, corpus, opts);
  CHECK(stats.total_updates > 0);
  for (double x : model.W.data) CHECK(std::isfinite(x));
}

TEST_CASE("train throws when nothing in the corpus is in vocabulary") {
  const Vocabulary vocab = Vocabulary::from_counts({{"a", 5}, {"b", 5}}, 10, 1);
  TrainingConfig cfg;
  cfg.dim = 4;
  auto model = init_model(vocab, cfg);
  const std::vector<Sentence> corpus = {{"x", "y", "z"}};
  CHECK_THROWS(train(model, corpus));
}

TEST_CASE("epoch callback sees every epoch in order") {
  const auto corpus = testutil::two_cluster_corpus(6, 5'000, 8, 9);
  const Vocabulary vocab = build_vocab(corpus, 1);
  TrainingConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 3;
  auto model = init_model(vocab, cfg);
  TrainOptions opts;
  opts.noise_table_size = 1000;
  std::vector<int32_t> seen;
  opts.on_epoch = [&](int32_t epoch, double) { seen.push_back(epoch); };
  train(model, corpus, opts);
  CHECK(seen == std::vector<int32_t>{0, 1, 2});
}
