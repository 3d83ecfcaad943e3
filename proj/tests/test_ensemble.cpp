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

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "dimvec/ensemble.hpp"
#include "testutil.hpp"

using namespace dimvec;
using testutil::TempDir;
using testutil::write_file;

namespace {

// Small but trainable fixture: two topical clusters plus anchor words that
// co-occur strictly with one cluster, split across many short documents.
struct EnsembleFixture {
  std::vector<Sentence> corpus;
  std::vector<DocSpan> doc_index;
  AnchorLexicon lexicon;
  TempDir tmp;

  EnsembleFixture() {
    Rng rng(404);
    const std::vector<std::string> hot = {"fire", "sun", "ember", "heat_a", "heat_b"};
    const std::vector<std::string> cold = {"ice", "snow", "frost", "chill_a", "chill_b"};
    int64_t line = 0;
    for (int doc = 0; doc < 60; ++doc) {
      const auto& pool = (doc % 2 == 0) ? hot : cold;
      DocSpan span;
      span.id = "doc" + std::to_string(doc);
      span.start_line = line;
      for (int s = 0; s < 6; ++s) {
        Sentence sent;
        for (int t = 0; t < 8; ++t) sent.push_back(pool[rng.next_below(pool.size())]);
        corpus.push_back(std::move(sent));
        ++line;
      }
      span.n_lines = line - span.start_line;
      doc_index.push_back(std::move(span));
    }
    write_file(tmp / "lex.tsv",
               "# name: temperature\n"
               "# poles: hot,cold\n"
               "fire\tpositive\t0\ttrain\n"
               "ice\tnegative\t0\ttrain\n"
               "sun\tpositive\t1\ttrain\n"
               "snow\tnegative\t1\ttrain\n"
               "ember\tpositive\t\ttest\n"
               "frost\tnegative\t\ttest\n");
    lexicon = load_lexicon(tmp / "lex.tsv");
  }

  EnsembleConfig config(int32_t k) const {
    EnsembleConfig cfg;
    cfg.k_models = k;
    cfg.subsample_fraction = 0.9;
    cfg.base_seed = 11;
    cfg.min_count = 2;
    cfg.keyword_min_count = 2;
    cfg.training.dim = 12;
    cfg.training.window = 4;
    cfg.training.epochs = 5;
    cfg.training.negative = 4;
    cfg.training.subsample_t = 0.0;
    return cfg;
  }
};

}  // namespace

TEST_CASE("subsample_documents is a deterministic sorted sample") {
  const auto s1 = subsample_documents(100, 0.9, 42);
  const auto s2 = subsample_documents(100, 0.9, 42);
  CHECK(s1 == s2);
  REQUIRE(s1.size() == 90);
  CHECK(std::is_sorted(s1.begin(), s1.end()));
  CHECK(std::set<size_t>(s1.begin(), s1.end()).size() == 90);
  CHECK(s1.back() < 100);

  const auto s3 = subsample_documents(100, 0.9, 43);
  CHECK(s1 != s3);

  const auto all = subsample_documents(10, 1.0, 1);
  CHECK(all == std::vector<size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});

  CHECK(subsample_documents(10, 0.25, 1).size() == 2);  // floor(2.5)
  CHECK_THROWS(subsample_documents(10, 0.01, 1));       // floor(0.1) = 0
}

TEST_CASE("subsample_documents covers all documents across seeds") {
  std::set<size_t> seen;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    for (size_t i : subsample_documents(20, 0.5, seed)) seen.insert(i);
  }
  CHECK(seen.size() == 20);
}

TEST_CASE("select_sentences concatenates documents in order") {
  const std::vector<Sentence> corpus = {{"s0"}, {"s1"}, {"s2"}, {"s3"}, {"s4"}};
  const std::vector<DocSpan> index = {{"a", 0, 2}, {"b", 2, 0}, {"c", 2, 3}};
  const auto picked = select_sentences(corpus, index, {0, 2});
  REQUIRE(picked.size() == 5);
  CHECK(picked[0] == Sentence{"s0"});
  CHECK(picked[2] == Sentence{"s2"});

  const auto empty_doc = select_sentences(corpus, index, {1});
  CHECK(empty_doc.empty());

  CHECK_THROWS(select_sentences(corpus, index, {3}));
  const std::vector<DocSpan> broken = {{"x", 4, 3}};
  CHECK_THROWS(select_sentences(corpus, broken, {0}));
}

TEST_CASE("load_keywords parses tokens and optional roles") {
  TempDir tmp;
  write_file(tmp / "kw.tsv",
             "# comment\n"
             "Butter\tfat\n"
             "salt\n"
             "olive_oil\tfat\n");
  const auto keywords = load_keywords(tmp / "kw.tsv");
  REQUIRE(keywords.size() == 3);
  CHECK(keywords[0].token == "butter");
  CHECK(keywords[0].role == "fat");
  CHECK(keywords[1].role.empty());

  write_file(tmp / "dup.tsv", "a\na\n");
  CHECK_THROWS(load_keywords(tmp / "dup.tsv"));
  write_file(tmp / "space.tsv", "two words\tx\n");
  CHECK_THROWS(load_keywords(tmp / "space.tsv"));
}

TEST_CASE("EnsembleConfig validation") {
  EnsembleConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.method = DimMethod::kSvm;
  CHECK_THROWS_WITH(cfg.validate(), doctest::Contains("axis"));
  cfg = {};
  cfg.subsample_fraction = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.subsample_fraction = 1.5;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.k_models = 0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("run_ensemble writes per-model projections that reload faithfully") {
  const EnsembleFixture fx;
  TempDir out;
  std::vector<EnsembleKeyword> keywords = {{"ember", "glow"}, {"unicorn", "myth"}};

  const EnsembleRunResult run =
      run_ensemble(fx.config(3), fx.corpus, fx.doc_index, {fx.lexicon}, keywords, out.path());
  CHECK(run.completed_models == std::vector<int32_t>{0, 1, 2});
  // "unicorn" never appears: each model flags it.
  CHECK(run.warnings.size() == 3);

  const auto models = load_model_projections(out.path());
  REQUIRE(models.size() == 3);
  for (int32_t i = 0; i < 3; ++i) {
    const auto& m = models[static_cast<size_t>(i)];
    CHECK(m.model_index == i);
    CHECK(m.seed == 11 + static_cast<uint64_t>(i));
    CHECK(m.n_documents == 54);  // floor(0.9 * 60)
    REQUIRE(m.lexicons.size() == 1);
    const auto& lex = m.lexicons[0];
    CHECK(lex.name == "temperature");
    CHECK(lex.pole_names.first == "hot");
    CHECK(lex.method == "larsen");
    CHECK(lex.anchor_coverage == doctest::Approx(1.0));

    const auto& fire = lex.words.at("fire");
    CHECK(fire.role == "anchor");
    CHECK(fire.present);
    REQUIRE(fire.projection.has_value());
    CHECK(*fire.pole == "positive");
    CHECK(*fire.split == "train");
    CHECK(fire.count > 0);

    const auto& ember = lex.words.at("ember");
    CHECK(ember.role == "glow");  // keyword role wins over plain anchor tag

    const auto& unicorn = lex.words.at("unicorn");
    CHECK(!unicorn.present);
    CHECK(!unicorn.projection.has_value());
    CHECK(unicorn.count == 0);
  }

  // The anchors point the right way in every model: this corpus never mixes
  // clusters, so "fire" and "ice" land on opposite sides of the axis.
  for (const auto& m : models) {
    const auto& words = m.lexicons[0].words;
    CHECK(*words.at("fire").projection > 0.0);
    CHECK(*words.at("ice").projection < 0.0);
  }
}

TEST_CASE("run_ensemble is byte-deterministic") {
  const EnsembleFixture fx;
  TempDir out1, out2;
  const auto cfg = fx.config(2);
  run_ensemble(cfg, fx.corpus, fx.doc_index, {fx.lexicon}, {}, out1.path());
  run_ensemble(cfg, fx.corpus, fx.doc_index, {fx.lexicon}, {}, out2.path());
  for (int i = 0; i < 2; ++i) {
    const auto rel = "model_" + std::to_string(i);
    const auto a = testutil::read_file(out1.path() / rel / "projections.json");
    const auto b = testutil::read_file(out2.path() / rel / "projections.json");
    REQUIRE(!a.empty());
    CHECK(a == b);
  }
}

TEST_CASE("run_ensemble can persist the trained models") {
  const EnsembleFixture fx;
  TempDir out;
  auto cfg = fx.config(1);
  cfg.save_models = true;
  run_ensemble(cfg, fx.corpus, fx.doc_index, {fx.lexicon}, {}, out.path());
  CHECK(std::filesystem::exists(out.path() / "model_0" / "model.dv"));
}

TEST_CASE("robust_classify summarizes hand-built projections") {
  // Three models; word behavior varies: stable sign, sign flip, absence.
  const auto make_model = [](int32_t idx, double steady, double flippy,
                             bool with_rare) {
    ModelProjections m;
    m.model_index = idx;
    m.seed = 100 + static_cast<uint64_t>(idx);
    m.vocab_size = 10;
    m.n_documents = 9;
    LexiconProjections lex;
    lex.name = "temperature";
    lex.pole_names = {"hot", "cold"};
    lex.method = "larsen";
    lex.anchor_coverage = 1.0;
    WordProjection steady_word{"steady", "anchor", "train", "positive", true, 50, steady};
    WordProjection flippy_word{"flippy", "keyword", std::nullopt, std::nullopt, true, 20, flippy};
    lex.words["steady"] = steady_word;
    lex.words["flippy"] = flippy_word;
    if (with_rare) {
      lex.words["rare"] = WordProjection{"rare", "keyword", std::nullopt, std::nullopt,
                                         true, 5, 0.25};
    } else {
      lex.words["rare"] = WordProjection{"rare", "keyword", std::nullopt, std::nullopt,
                                         false, 1, std::nullopt};
    }
    lex.words["ghost"] = WordProjection{"ghost", "keyword", std::nullopt, std::nullopt,
                                        false, 0, std::nullopt};
    m.lexicons.push_back(std::move(lex));
    return m;
  };

  const std::vector<ModelProjections> models = {
      make_model(0, 0.30, +0.10, true),
      make_model(1, 0.10, -0.20, true),
      make_model(2, 0.20, +0.30, false),
  };
  const auto summaries = robust_classify(models, 3);

  const auto find = [&](const std::string& word) {
    const auto it = std::find_if(summaries.begin(), summaries.end(),
                                 [&](const EnsembleSummary& s) { return s.word == word; });
    REQUIRE(it != summaries.end());
    return *it;
  };

  const EnsembleSummary steady = find("steady");
  CHECK(steady.lexicon == "temperature");
  CHECK(steady.n_models_present == 3);
  CHECK(steady.k == 3);
  CHECK(steady.mean == doctest::Approx(0.2));
  CHECK(steady.sd == doctest::Approx(std::sqrt(0.02 / 3.0)));  // population sd
  CHECK(steady.min == doctest::Approx(0.1));
  CHECK(steady.max == doctest::Approx(0.3));
  CHECK(steady.robust);
  CHECK(steady.pole_at_mean == "hot");
  CHECK(*steady.pole == "positive");

  const EnsembleSummary flippy = find("flippy");
  CHECK(flippy.n_models_present == 3);
  CHECK(!flippy.robust);  // sign flips
  CHECK(flippy.mean == doctest::Approx((0.1 - 0.2 + 0.3) / 3.0));

  const EnsembleSummary rare = find("rare");
  CHECK(rare.n_models_present == 2);
  CHECK(!rare.robust);  // missing from model 2
  CHECK(rare.mean == doctest::Approx(0.25));
  CHECK(rare.sd == doctest::Approx(0.0));

  // Never present anywhere: no summary row at all.
  CHECK(std::none_of(summaries.begin(), summaries.end(),
                     [](const EnsembleSummary& s) { return s.word == "ghost"; }));
}

TEST_CASE("robust_accuracy demands correctness in every model") {
  const EnsembleFixture fx;
  const auto make_model = [](int32_t idx, double fire, double ice, bool with_sun) {
    ModelProjections m;
    m.model_index = idx;
    LexiconProjections lex;
    lex.name = "temperature";
    lex.pole_names = {"hot", "cold"};
    lex.words["fire"] = {"fire", "anchor", "train", "positive", true, 9, fire};
    lex.words["ice"] = {"ice", "anchor", "train", "negative", true, 9, ice};
    if (with_sun) lex.words["sun"] = {"sun", "anchor", "train", "positive", true, 9, 0.8};
    lex.words["snow"] = {"snow", "anchor", "train", "negative", true, 9, -0.7};
    lex.words["ember"] = {"ember", "anchor", "test", "positive", true, 9, 0.6};
    lex.words["frost"] = {"frost", "anchor", "test", "negative", true, 9, 0.1};  // misclassified
    m.lexicons.push_back(std::move(lex));
    return m;
  };
  const std::vector<ModelProjections> models = {
      make_model(0, 0.5, -0.5, true),
      make_model(1, 0.4, +0.2, true),   // "ice" lands on the wrong side here
      make_model(2, 0.6, -0.3, false),  // "sun" absent here
  };
  const auto acc = robust_accuracy({fx.lexicon}, models, 3);
  REQUIRE(acc.size() == 1);
  CHECK(acc[0].lexicon == "temperature");
  // Train entries: fire (robustly correct), ice (wrong in model 1),
  // sun (absent in model 2), snow (correct everywhere).
  CHECK(acc[0].train_total == 4);
  CHECK(acc[0].train_robust == 2);
  // Test entries: ember correct everywhere; frost positive-side in all
  // models but its pole is negative.
  CHECK(acc[0].test_total == 2);
  CHECK(acc[0].test_robust == 1);
}

TEST_CASE("emit_figure_data writes sorted per-lexicon CSVs") {
  TempDir out;
  std::vector<EnsembleSummary> summaries;
  EnsembleSummary s;
  s.lexicon = "temperature";
  s.word = "warm";
  s.role = "keyword";
  s.n_models_present = 3;
  s.k = 3;
  s.mean = 0.5;
  s.sd = 0.01;
  s.min = 0.4;
  s.max = 0.6;
  s.robust = true;
  s.pole_at_mean = "hot";
  summaries.push_back(s);
  s.word = "cool";
  s.mean = -0.25;
  s.robust = false;
  summaries.push_back(s);

  emit_figure_data(summaries, out.path());
  const auto csv = testutil::read_file(out.path() / "figure_temperature.csv");
  REQUIRE(!csv.empty());
  std::istringstream lines(csv);
  std::string header, first, second;
  std::getline(lines, header);
  std::getline(lines, first);
  std::getline(lines, second);
  CHECK(header == "word,role,mean,sd,min,max,robust");
  CHECK(first.substr(0, 5) == "cool,");   // sorted by mean: -0.25 first
  CHECK(second.substr(0, 5) == "warm,");
  CHECK(first.find("false") != std::string::npos);
  CHECK(second.find("true") != std::string::npos);
}

TEST_CASE("robust flags equal an independent scan of the persisted files") {
  const EnsembleFixture fx;
  TempDir out;
  std::vector<EnsembleKeyword> keywords = {{"ember", ""}, {"frost", ""}};
  run_ensemble(fx.config(3), fx.corpus, fx.doc_index, {fx.lexicon}, keywords, out.path());

  // Independent pass over the raw JSON, no library parsing involved.
  std::map<std::string, std::vector<double>> projections;
  std::map<std::string, int> presence;
  for (int i = 0; i < 3; ++i) {
    const auto raw = testutil::read_file(out.path() / ("model_" + std::to_string(i)) /
                                         "projections.json");
    const auto j = nlohmann::json::parse(raw);
    for (const auto& lex : j.at("lexicons")) {
      for (const auto& w : lex.at("words")) {
        const std::string key = lex.at("name").get<std::string>() + "/" +
                                w.at("word").get<std::string>();
        if (w.at("present").get<bool>()) {
          ++presence[key];
          projections[key].push_back(w.at("projection").get<double>());
        }
      }
    }
  }

  const auto summaries = robust_classify(load_model_projections(out.path()), 3);
  for (const auto& s : summaries) {
    const std::string key = s.lexicon + "/" + s.word;
    const auto& p = projections[key];
    const bool all_pos = std::all_of(p.begin(), p.end(), [](double x) { return x > 0; });
    const bool all_neg = std::all_of(p.begin(), p.end(), [](double x) { return x < 0; });
    const bool expect = presence[key] == 3 && !p.empty() && (all_pos || all_neg);
    CHECK(s.robust == expect);
    CHECK(s.n_models_present == presence[key]);
  }
}
