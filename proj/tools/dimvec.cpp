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

// Command-line front end: preprocess -> train -> eval -> dim -> ensemble.
// Every JSON report embeds the tool version, the effective configuration,
// the seeds in play, and FNV-1a digests of the inputs, so a report alone
// identifies the run that produced it. Exit codes: 0 success, 1 domain
// error, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "dimvec/corpus.hpp"
#include "dimvec/dimension.hpp"
#include "dimvec/embedding.hpp"
#include "dimvec/ensemble.hpp"
#include "dimvec/evaluation.hpp"
#include "dimvec/json_support.hpp"
#include "dimvec/model_io.hpp"
#include "dimvec/report.hpp"
#include "dimvec/vecmath.hpp"

namespace {

using dimvec::kToolVersion;
using nlohmann::json;

struct GlobalOptions {
  std::string config_path;
  uint64_t seed = 1;
  int32_t threads = static_cast<int32_t>(std::max(1u, std::thread::hardware_concurrency()));
  bool deterministic = false;
  bool verbose = false;
  bool error_json = false;

  int32_t effective_threads() const { return deterministic ? 1 : std::max(1, threads); }
};

struct ConfigFile {
  json training = json::object();
  json preprocess = json::object();
  json ensemble = json::object();
  json eval = json::object();
};

ConfigFile load_config_file(const std::string& path) {
  ConfigFile cfg;
  if (path.empty()) return cfg;
  const json j = dimvec::read_json(path);
  if (!j.is_object()) throw std::runtime_error(path + ": config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "training") {
      cfg.training = value;
    } else if (key == "preprocess") {
      cfg.preprocess = value;
    } else if (key == "ensemble") {
      cfg.ensemble = value;
    } else if (key == "eval") {
      cfg.eval = value;
    } else {
      throw std::runtime_error(path + ": unknown config section \"" + key + "\"");
    }
    if (!value.is_object()) throw std::runtime_error(path + ": section \"" + key + "\" must be an object");
  }
  return cfg;
}

void reject_unknown_keys(const json& section, const std::set<std::string>& known,
                         const std::string& name) {
  for (const auto& [key, value] : section.items()) {
    (void)value;
    if (!known.count(key)) {
      throw std::runtime_error("unknown config key \"" + key + "\" in section \"" + name + "\"");
    }
  }
}

void log_verbose(const GlobalOptions& global, const std::string& message) {
  if (global.verbose) std::cerr << "[dimvec] " << message << '\n';
}

json report_envelope(const GlobalOptions& global) {
  return {{"version", kToolVersion},
          {"seed", global.seed},
          {"threads", global.effective_threads()},
          {"deterministic", global.deterministic}};
}

std::string format_score(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessArgs {
  std::string input;
  std::string format = "auto";
  std::string output_dir;
  std::string exclude_path;
  int32_t min_count = 5;
  double phrase_delta = 5.0;
  double phrase_threshold = 10.0;
  int32_t phrase_passes = 1;
};

std::unordered_set<std::string> load_exclusion_terms(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::unordered_set<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    terms.insert(line);
  }
  return terms;
}

int cmd_preprocess(const GlobalOptions& global, const ConfigFile& config, PreprocessArgs args,
                   const CLI::App& sub) {
  reject_unknown_keys(config.preprocess,
                      {"min_count", "phrase_delta", "phrase_threshold", "phrase_passes"},
                      "preprocess");
  if (!sub.count("--min-count") && config.preprocess.contains("min_count")) {
    args.min_count = config.preprocess.at("min_count").get<int32_t>();
  }
  if (!sub.count("--phrase-delta") && config.preprocess.contains("phrase_delta")) {
    args.phrase_delta = config.preprocess.at("phrase_delta").get<double>();
  }
  if (!sub.count("--phrase-threshold") && config.preprocess.contains("phrase_threshold")) {
    args.phrase_threshold = config.preprocess.at("phrase_threshold").get<double>();
  }
  if (!sub.count("--phrase-passes") && config.preprocess.contains("phrase_passes")) {
    args.phrase_passes = config.preprocess.at("phrase_passes").get<int32_t>();
  }
  if (args.phrase_passes < 0) throw std::runtime_error("--phrase-passes must be >= 0");

  dimvec::CorpusFormat format;
  if (args.format == "text-dir") {
    format = dimvec::CorpusFormat::kTextDir;
  } else if (args.format == "jsonl") {
    format = dimvec::CorpusFormat::kJsonl;
  } else if (args.format == "auto") {
    if (std::filesystem::is_directory(args.input)) {
      format = dimvec::CorpusFormat::kTextDir;
    } else if (std::filesystem::path(args.input).extension() == ".jsonl") {
      format = dimvec::CorpusFormat::kJsonl;
    } else {
      throw std::runtime_error("cannot infer corpus format of " + args.input +
                               "; pass --format text-dir or jsonl");
    }
  } else {
    throw std::runtime_error("unknown corpus format: " + args.format);
  }

  log_verbose(global, "loading documents from " + args.input);
  std::vector<dimvec::Document> documents = dimvec::load_documents(args.input, format);

  dimvec::FilterStats filter_stats;
  filter_stats.input_count = static_cast<int64_t>(documents.size());
  filter_stats.kept_count = filter_stats.input_count;
  if (!args.exclude_path.empty()) {
    const auto terms = load_exclusion_terms(args.exclude_path);
    documents = dimvec::filter_documents(std::move(documents), terms, &filter_stats);
    log_verbose(global, "dropped " + std::to_string(filter_stats.dropped_count) + " documents");
  }

  std::vector<dimvec::Sentence> sentences;
  std::vector<dimvec::DocSpan> spans;
  for (const auto& doc : documents) {
    dimvec::DocSpan span;
    span.id = doc.id;
    span.start_line = static_cast<int64_t>(sentences.size());
    for (const auto& raw : dimvec::split_sentences(doc.text)) {
      dimvec::Sentence tokens = dimvec::normalize(raw);
      if (!tokens.empty()) sentences.push_back(std::move(tokens));
    }
    span.n_lines = static_cast<int64_t>(sentences.size()) - span.start_line;
    spans.push_back(std::move(span));
  }

  dimvec::PhraseConfig phrase_cfg;
  phrase_cfg.delta = args.phrase_delta;
  phrase_cfg.threshold = args.phrase_threshold;
  phrase_cfg.max_passes = std::max(1, args.phrase_passes);

  json phrase_report = json::array();
  for (int32_t pass = 0; pass < args.phrase_passes; ++pass) {
    int64_t before = 0;
    for (const auto& s : sentences) before += static_cast<int64_t>(s.size());
    sentences = dimvec::detect_phrases(sentences, phrase_cfg);
    int64_t after = 0;
    for (const auto& s : sentences) after += static_cast<int64_t>(s.size());
    phrase_report.push_back({{"pass", pass + 1}, {"merges", before - after}});
    log_verbose(global, "phrase pass " + std::to_string(pass + 1) + ": " +
                            std::to_string(before - after) + " merges");
  }

  const dimvec::Vocabulary vocab = dimvec::build_vocab(sentences, args.min_count);

  std::filesystem::create_directories(args.output_dir);
  const std::filesystem::path out_dir(args.output_dir);
  dimvec::save_corpus(sentences, out_dir / "corpus.txt");
  dimvec::save_doc_index(spans, out_dir / "corpus.docidx");
  vocab.save_tsv(out_dir / "vocab.tsv");

  int64_t total_tokens = 0;
  for (const auto& s : sentences) total_tokens += static_cast<int64_t>(s.size());

  json report = report_envelope(global);
  report["inputs"] = json::array({dimvec::input_digest(args.input)});
  report["config"] = {{"format", format == dimvec::CorpusFormat::kTextDir ? "text-dir" : "jsonl"},
                      {"min_count", args.min_count},
                      {"phrase_delta", args.phrase_delta},
                      {"phrase_threshold", args.phrase_threshold},
                      {"phrase_passes", args.phrase_passes},
                      {"exclude", args.exclude_path}};
  report["documents"] = {{"input", filter_stats.input_count},
                         {"kept", filter_stats.kept_count},
                         {"dropped", filter_stats.dropped_count},
                         {"dropped_fraction", filter_stats.dropped_fraction}};
  report["sentences"] = sentences.size();
  report["total_tokens"] = total_tokens;
  report["vocab_size"] = vocab.size();
  report["phrase_passes"] = phrase_report;
  dimvec::write_json(report, out_dir / "preprocess_report.json");

  std::cout << "documents " << filter_stats.kept_count << " (dropped " << filter_stats.dropped_count
            << "), sentences " << sentences.size() << ", tokens " << total_tokens << ", vocab "
            << vocab.size() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// training options shared by `train` and `ensemble`

void add_training_flags(CLI::App* sub, dimvec::TrainingConfig& tc) {
  sub->add_option("--dim", tc.dim, "Embedding dimensionality");
  sub->add_option("--window", tc.window, "Context window size (per side)");
  sub->add_option("--arch", [&tc](const std::vector<std::string>& vals) {
    try {
      tc.architecture = dimvec::architecture_from_string(vals.back());
      return true;
    } catch (const std::exception&) {
      return false;
    }
  }, "Architecture: cbow or skipgram");
  sub->add_option("--loss", [&tc](const std::vector<std::string>& vals) {
    try {
      tc.loss = dimvec::loss_from_string(vals.back());
      return true;
    } catch (const std::exception&) {
      return false;
    }
  }, "Loss: ns (negative sampling) or hs (hierarchical softmax)");
  sub->add_option("--negative", tc.negative, "Negative samples per target");
  sub->add_option("--epochs", tc.epochs, "Training epochs");
  sub->add_option("--lr-start", tc.lr_start, "Initial learning rate");
  sub->add_option("--lr-end", tc.lr_end, "Final learning rate");
  sub->add_option("--subsample", tc.subsample_t, "Frequent-word subsampling threshold (0 = off)");
  sub->add_option("--unigram-exponent", tc.unigram_exponent, "Noise distribution exponent");
}

dimvec::TrainingConfig merge_training_config(const ConfigFile& config, const CLI::App& sub,
                                             const dimvec::TrainingConfig& flag_values,
                                             uint64_t seed) {
  // Precedence: flags > config file > defaults. flag_values starts from
  // defaults and was overwritten by any flags the user passed, so re-apply
  // config-file values only for options the user did not pass.
  dimvec::TrainingConfig tc =
      dimvec::training_config_from_json(config.training, dimvec::TrainingConfig{});
  if (sub.count("--dim")) tc.dim = flag_values.dim;
  if (sub.count("--window")) tc.window = flag_values.window;
  if (sub.count("--arch")) tc.architecture = flag_values.architecture;
  if (sub.count("--loss")) tc.loss = flag_values.loss;
  if (sub.count("--negative")) tc.negative = flag_values.negative;
  if (sub.count("--epochs")) tc.epochs = flag_values.epochs;
  if (sub.count("--lr-start")) tc.lr_start = flag_values.lr_start;
  if (sub.count("--lr-end")) tc.lr_end = flag_values.lr_end;
  if (sub.count("--subsample")) tc.subsample_t = flag_values.subsample_t;
  if (sub.count("--unigram-exponent")) tc.unigram_exponent = flag_values.unigram_exponent;
  tc.seed = seed;
  return tc;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string corpus;
  std::string vocab_path;
  std::string output;
  std::string format = "native";
  std::string report_path;
  int32_t min_count = 5;
  dimvec::TrainingConfig flags;
};

int cmd_train(const GlobalOptions& global, const ConfigFile& config, const TrainArgs& args,
              const CLI::App& sub) {
  const dimvec::TrainingConfig tc = merge_training_config(config, sub, args.flags, global.seed);
  tc.validate();

  log_verbose(global, "loading corpus " + args.corpus);
  const std::vector<dimvec::Sentence> corpus = dimvec::load_corpus(args.corpus);
  const dimvec::Vocabulary vocab = args.vocab_path.empty()
                                       ? dimvec::build_vocab(corpus, args.min_count)
                                       : dimvec::Vocabulary::load_tsv(args.vocab_path);

  dimvec::EmbeddingModel model = dimvec::init_model(vocab, tc);
  dimvec::TrainOptions options;
  options.threads = global.effective_threads();
  if (global.verbose) {
    options.on_epoch = [&](int32_t epoch, double loss) {
      std::cerr << "[dimvec] epoch " << (epoch + 1) << "/" << tc.epochs << " mean loss " << loss
                << '\n';
    };
  }
  const dimvec::TrainStats stats = dimvec::train(model, corpus, options);
  dimvec::save_model(model, args.output, dimvec::model_format_from_string(args.format));

  if (!args.report_path.empty()) {
    json report = report_envelope(global);
    json inputs = json::array({dimvec::input_digest(args.corpus)});
    if (!args.vocab_path.empty()) inputs.push_back(dimvec::input_digest(args.vocab_path));
    report["inputs"] = inputs;
    report["config"] = tc;
    report["min_count"] = args.min_count;
    report["vocab_size"] = vocab.size();
    report["total_updates"] = stats.total_updates;
    report["skipped_oov_tokens"] = stats.skipped_oov_tokens;
    report["epoch_mean_loss"] = stats.epoch_mean_loss;
    report["model"] = args.output;
    dimvec::write_json(report, args.report_path);
  }
  std::cout << "trained " << vocab.size() << " words, " << stats.total_updates << " updates, saved "
            << args.output << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string model;
  std::string model_format = "native";
  std::string analogies;
  std::string wordsim;
  std::string oov = "skip";
  std::string report_path;
};

json section_to_json(const dimvec::SectionResult& r) {
  return {{"name", r.name},
          {"total", r.total},
          {"answered", r.answered},
          {"skipped", r.skipped},
          {"correct", r.correct},
          {"accuracy", r.accuracy ? json(*r.accuracy) : json(nullptr)}};
}

int cmd_eval(const GlobalOptions& global, const ConfigFile& config, EvalArgs args,
             const CLI::App& sub) {
  reject_unknown_keys(config.eval, {"oov"}, "eval");
  if (!sub.count("--oov") && config.eval.contains("oov")) {
    args.oov = config.eval.at("oov").get<std::string>();
  }
  if (args.analogies.empty() && args.wordsim.empty()) {
    throw std::runtime_error("nothing to evaluate: pass --analogies and/or --wordsim");
  }
  const dimvec::OovMode mode = dimvec::oov_mode_from_string(args.oov);

  const dimvec::EmbeddingModel model =
      dimvec::load_model(args.model, dimvec::model_format_from_string(args.model_format));
  const dimvec::UnitEmbedding emb(model);

  json report = report_envelope(global);
  json inputs = json::array({dimvec::input_digest(args.model)});
  report["oov_mode"] = dimvec::to_string(mode);

  if (!args.analogies.empty()) {
    inputs.push_back(dimvec::input_digest(args.analogies));
    const auto sections = dimvec::load_analogy_file(args.analogies);
    const dimvec::AnalogyEval eval =
        dimvec::eval_analogy(emb, sections, mode, global.effective_threads());
    json aj;
    aj["sections"] = json::array();
    for (const auto& r : eval.sections) aj["sections"].push_back(section_to_json(r));
    aj["family"] = section_to_json(eval.family);
    aj["syntax"] = section_to_json(eval.syntax);
    aj["all"] = section_to_json(eval.all);
    report["analogy"] = std::move(aj);
    const auto show = [](const dimvec::SectionResult& r) {
      return r.accuracy ? format_score(*r.accuracy) : std::string("n/a");
    };
    std::cout << "analogy: family " << show(eval.family) << ", syntax " << show(eval.syntax)
              << ", all " << show(eval.all) << " (" << eval.all.answered << "/" << eval.all.total
              << " answered)\n";
  }
  if (!args.wordsim.empty()) {
    inputs.push_back(dimvec::input_digest(args.wordsim));
    const auto pairs = dimvec::load_wordsim_csv(args.wordsim);
    const dimvec::WordSimEval eval = dimvec::eval_wordsim(emb, pairs);
    report["wordsim"] = {{"rho", eval.rho},
                         {"n_used", eval.n_used},
                         {"n_total", eval.n_total},
                         {"p_value", eval.p_value}};
    std::cout << "wordsim: rho " << format_score(eval.rho) << " over " << eval.n_used << "/"
              << eval.n_total << " pairs\n";
  }
  report["inputs"] = std::move(inputs);
  if (!args.report_path.empty()) dimvec::write_json(report, args.report_path);
  return 0;
}

// ---------------------------------------------------------------------------
// neighbors

struct NeighborsArgs {
  std::string model;
  std::string model_format = "native";
  std::string word;
  int32_t k = 10;
  std::vector<std::string> exclude;
};

int cmd_neighbors(const GlobalOptions& global, const NeighborsArgs& args) {
  const dimvec::EmbeddingModel model =
      dimvec::load_model(args.model, dimvec::model_format_from_string(args.model_format));
  const dimvec::UnitEmbedding emb(model);
  log_verbose(global, "querying neighbors of \"" + args.word + "\"");
  const std::unordered_set<std::string> exclude(args.exclude.begin(), args.exclude.end());
  for (const auto& r : dimvec::nearest_neighbors(emb, args.word, args.k, exclude)) {
    std::cout << r.word << '\t' << format_score(r.similarity) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// dim

json dimension_to_json(const dimvec::Dimension& dim) {
  return {{"name", dim.name},
          {"method", dimvec::to_string(dim.method)},
          {"pole_names", {dim.pole_names.first, dim.pole_names.second}},
          {"anchor_coverage", dim.anchor_coverage},
          {"axis", dim.axis}};
}

dimvec::Dimension dimension_from_json(const json& j, const std::string& path) {
  const std::string method = j.at("method").get<std::string>();
  if (method == "svm") {
    throw std::runtime_error(path + " holds an SVM classifier, not an axis; projection needs "
                             "a larsen or bolukbasi dimension");
  }
  dimvec::Dimension dim;
  dim.name = j.at("name").get<std::string>();
  dim.method = dimvec::dim_method_from_string(method);
  dim.pole_names = {j.at("pole_names").at(0).get<std::string>(),
                    j.at("pole_names").at(1).get<std::string>()};
  dim.anchor_coverage = j.at("anchor_coverage").get<double>();
  dim.axis = j.at("axis").get<std::vector<double>>();
  if (dim.axis.empty()) throw std::runtime_error(path + ": empty axis");
  return dim;
}

json classifier_to_json(const dimvec::LinearClassifier& clf) {
  return {{"name", clf.name},
          {"method", "svm"},
          {"pole_names", {clf.pole_names.first, clf.pole_names.second}},
          {"weight", clf.weight},
          {"bias", clf.bias},
          {"C", clf.C},
          {"warnings", clf.warnings}};
}

std::vector<double> parse_c_grid(const std::string& csv) {
  std::vector<double> grid;
  std::istringstream ss(csv);
  std::string field;
  while (std::getline(ss, field, ',')) {
    size_t pos = 0;
    const double value = std::stod(field, &pos);
    if (pos != field.size() || !(value > 0)) throw std::runtime_error("bad C grid entry: " + field);
    grid.push_back(value);
  }
  if (grid.empty()) throw std::runtime_error("empty C grid");
  return grid;
}

struct DimExtractArgs {
  std::string model;
  std::string model_format = "native";
  std::string lexicon;
  std::string method = "larsen";
  std::string output;
  std::string c_grid;
};

int cmd_dim_extract(const GlobalOptions& global, const DimExtractArgs& args) {
  const dimvec::EmbeddingModel model =
      dimvec::load_model(args.model, dimvec::model_format_from_string(args.model_format));
  const dimvec::UnitEmbedding emb(model);
  const dimvec::AnchorLexicon lexicon = dimvec::load_lexicon(args.lexicon);
  const dimvec::DimMethod method = dimvec::dim_method_from_string(args.method);

  json body;
  if (method == dimvec::DimMethod::kSvm) {
    dimvec::SvmOptions options;
    options.seed = global.seed;
    if (!args.c_grid.empty()) options.c_grid = parse_c_grid(args.c_grid);
    const dimvec::LinearClassifier clf = dimvec::train_svm(emb, lexicon, options);
    for (const auto& w : clf.warnings) std::cerr << "warning: " << w << '\n';
    body = classifier_to_json(clf);
  } else {
    const dimvec::Dimension dim = method == dimvec::DimMethod::kLarsen
                                      ? dimvec::extract_larsen(emb, lexicon)
                                      : dimvec::extract_bolukbasi(emb, lexicon);
    body = dimension_to_json(dim);
  }
  json report = report_envelope(global);
  report["inputs"] = json::array({dimvec::input_digest(args.model), dimvec::input_digest(args.lexicon)});
  for (auto& [key, value] : body.items()) report[key] = std::move(value);
  dimvec::write_json(report, args.output);
  std::cout << "wrote " << args.method << " " << lexicon.name << " -> " << args.output << '\n';
  return 0;
}

struct DimValidateArgs {
  std::string model;
  std::string model_format = "native";
  std::string lexicon;
  std::string method = "larsen";
  int32_t folds = 10;
  std::string report_path;
  std::string c_grid;
};

json classification_to_json(const dimvec::ClassificationReport& report) {
  json words = json::array();
  for (const auto& w : report.words) {
    words.push_back({{"word", w.word},
                     {"predicted_pole", w.predicted_pole},
                     {"score", w.score},
                     {"boundary", w.boundary},
                     {"correct", w.correct}});
  }
  return {{"split", dimvec::to_string(report.split)},
          {"total", report.total},
          {"correct", report.correct},
          {"oov", report.oov},
          {"accuracy", report.accuracy},
          {"words", std::move(words)}};
}

int cmd_dim_validate(const GlobalOptions& global, const DimValidateArgs& args) {
  const dimvec::EmbeddingModel model =
      dimvec::load_model(args.model, dimvec::model_format_from_string(args.model_format));
  const dimvec::UnitEmbedding emb(model);
  const dimvec::AnchorLexicon lexicon = dimvec::load_lexicon(args.lexicon);
  const dimvec::DimMethod method = dimvec::dim_method_from_string(args.method);

  json report = report_envelope(global);
  report["inputs"] = json::array({dimvec::input_digest(args.model), dimvec::input_digest(args.lexicon)});
  report["lexicon"] = lexicon.name;
  report["method"] = args.method;

  dimvec::ClassificationReport train_report;
  dimvec::ClassificationReport test_report;
  if (method == dimvec::DimMethod::kSvm) {
    dimvec::SvmOptions options;
    options.seed = global.seed;
    if (!args.c_grid.empty()) options.c_grid = parse_c_grid(args.c_grid);
    const dimvec::LinearClassifier clf = dimvec::train_svm(emb, lexicon, options);
    for (const auto& w : clf.warnings) std::cerr << "warning: " << w << '\n';
    report["C"] = clf.C;
    report["warnings"] = clf.warnings;
    train_report = dimvec::classify(emb, clf, lexicon, dimvec::Split::kTrain);
    test_report = dimvec::classify(emb, clf, lexicon, dimvec::Split::kTest);
  } else {
    const dimvec::Dimension dim = method == dimvec::DimMethod::kLarsen
                                      ? dimvec::extract_larsen(emb, lexicon)
                                      : dimvec::extract_bolukbasi(emb, lexicon);
    report["anchor_coverage"] = dim.anchor_coverage;
    train_report = dimvec::classify(emb, dim, lexicon, dimvec::Split::kTrain);
    test_report = dimvec::classify(emb, dim, lexicon, dimvec::Split::kTest);
  }
  report["train"] = classification_to_json(train_report);
  report["test"] = classification_to_json(test_report);

  const dimvec::CrossValidation cv =
      dimvec::crossvalidate_lexicon(emb, lexicon, args.folds, method, global.seed);
  report["cross_validation"] = {{"folds", cv.folds},
                                {"mean_train_accuracy", cv.mean_train_accuracy},
                                {"mean_heldout_accuracy", cv.mean_heldout_accuracy}};

  if (!args.report_path.empty()) dimvec::write_json(report, args.report_path);
  std::cout << lexicon.name << " " << args.method << ": train " << train_report.correct << "/"
            << train_report.total << " (" << format_score(train_report.accuracy) << "), test "
            << test_report.correct << "/" << test_report.total << " ("
            << format_score(test_report.accuracy) << "), cv heldout "
            << format_score(cv.mean_heldout_accuracy) << '\n';
  return 0;
}

struct DimProjectArgs {
  std::string model;
  std::string model_format = "native";
  std::string dim_path;
  std::string words_path;
  std::vector<std::string> words;
  std::string report_path;
};

int cmd_dim_project(const GlobalOptions& global, const DimProjectArgs& args) {
  const dimvec::EmbeddingModel model =
      dimvec::load_model(args.model, dimvec::model_format_from_string(args.model_format));
  const dimvec::UnitEmbedding emb(model);
  const dimvec::Dimension dim = dimension_from_json(dimvec::read_json(args.dim_path), args.dim_path);

  std::vector<std::string> words = args.words;
  if (!args.words_path.empty()) {
    std::ifstream in(args.words_path);
    if (!in) throw std::runtime_error("cannot read " + args.words_path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      words.push_back(line);
    }
  }
  if (words.empty()) throw std::runtime_error("no words to project: pass --word or --words");

  json rows = json::array();
  std::vector<std::string> warnings;
  for (const auto& word : words) {
    const auto id = emb.vocab().find(word);
    if (!id || !emb.has_unit(*id)) {
      warnings.push_back("word not in vocabulary: \"" + word + "\"");
      continue;
    }
    const double p = dimvec::project(emb, dim, word);
    rows.push_back({{"word", word}, {"projection", p}});
    std::cout << word << '\t' << format_score(p) << '\n';
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

  if (!args.report_path.empty()) {
    json report = report_envelope(global);
    report["inputs"] =
        json::array({dimvec::input_digest(args.model), dimvec::input_digest(args.dim_path)});
    report["dimension"] = dim.name;
    report["projections"] = std::move(rows);
    report["warnings"] = warnings;
    dimvec::write_json(report, args.report_path);
  }
  return 0;
}

struct DimSimilarityArgs {
  std::string dim_a;
  std::string dim_b;
  std::string report_path;
};

int cmd_dim_similarity(const GlobalOptions& global, const DimSimilarityArgs& args) {
  const dimvec::Dimension a = dimension_from_json(dimvec::read_json(args.dim_a), args.dim_a);
  const dimvec::Dimension b = dimension_from_json(dimvec::read_json(args.dim_b), args.dim_b);
  const double similarity = dimvec::dim_similarity(a, b);
  std::cout << a.name << " ~ " << b.name << ": " << format_score(similarity) << '\n';
  if (!args.report_path.empty()) {
    json report = report_envelope(global);
    report["inputs"] =
        json::array({dimvec::input_digest(args.dim_a), dimvec::input_digest(args.dim_b)});
    report["dim_a"] = a.name;
    report["dim_b"] = b.name;
    report["similarity"] = similarity;
    dimvec::write_json(report, args.report_path);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// ensemble + report

struct EnsembleArgs {
  std::string corpus;
  std::string doc_index;
  std::vector<std::string> lexicon_paths;
  std::string keywords_path;
  std::string out_dir;
  int32_t k_models = 25;
  double fraction = 0.9;
  int32_t min_count = 40;
  int64_t keyword_min_count = 40;
  std::string method = "larsen";
  bool save_models = false;
  dimvec::TrainingConfig flags;
};

json summary_to_json(const dimvec::EnsembleSummary& s) {
  return {{"lexicon", s.lexicon},
          {"word", s.word},
          {"role", s.role},
          {"split", s.split ? json(*s.split) : json(nullptr)},
          {"pole", s.pole ? json(*s.pole) : json(nullptr)},
          {"n_models_present", s.n_models_present},
          {"k", s.k},
          {"mean", s.mean},
          {"sd", s.sd},
          {"min", s.min},
          {"max", s.max},
          {"robust", s.robust},
          {"pole_at_mean", s.pole_at_mean}};
}

void write_ensemble_summary(const std::filesystem::path& out_dir, int32_t k,
                            const std::vector<dimvec::AnchorLexicon>& lexicons,
                            const std::vector<dimvec::ModelProjections>& models) {
  const auto summaries = dimvec::robust_classify(models, k);
  const auto accuracy = dimvec::robust_accuracy(lexicons, models, k);

  json j;
  j["version"] = kToolVersion;
  j["k"] = k;
  j["n_models_loaded"] = models.size();
  j["sd_definition"] = "population";
  j["summaries"] = json::array();
  for (const auto& s : summaries) j["summaries"].push_back(summary_to_json(s));
  j["robust_accuracy"] = json::array();
  for (const auto& ra : accuracy) {
    j["robust_accuracy"].push_back({{"lexicon", ra.lexicon},
                                    {"train_robust", ra.train_robust},
                                    {"train_total", ra.train_total},
                                    {"test_robust", ra.test_robust},
                                    {"test_total", ra.test_total}});
  }
  dimvec::write_json(j, out_dir / "ensemble_summary.json");
  dimvec::emit_figure_data(summaries, out_dir);
}

int cmd_ensemble(const GlobalOptions& global, const ConfigFile& config, EnsembleArgs args,
                 const CLI::App& sub) {
  reject_unknown_keys(config.ensemble,
                      {"k_models", "subsample_fraction", "min_count", "keyword_min_count", "method",
                       "save_models"},
                      "ensemble");
  if (!sub.count("--models") && config.ensemble.contains("k_models")) {
    args.k_models = config.ensemble.at("k_models").get<int32_t>();
  }
  if (!sub.count("--fraction") && config.ensemble.contains("subsample_fraction")) {
    args.fraction = config.ensemble.at("subsample_fraction").get<double>();
  }
  if (!sub.count("--min-count") && config.ensemble.contains("min_count")) {
    args.min_count = config.ensemble.at("min_count").get<int32_t>();
  }
  if (!sub.count("--keyword-min-count") && config.ensemble.contains("keyword_min_count")) {
    args.keyword_min_count = config.ensemble.at("keyword_min_count").get<int64_t>();
  }
  if (!sub.count("--method") && config.ensemble.contains("method")) {
    args.method = config.ensemble.at("method").get<std::string>();
  }
  if (!sub.count("--save-models") && config.ensemble.contains("save_models")) {
    args.save_models = config.ensemble.at("save_models").get<bool>();
  }

  dimvec::EnsembleConfig cfg;
  cfg.k_models = args.k_models;
  cfg.subsample_fraction = args.fraction;
  cfg.base_seed = global.seed;
  cfg.training = merge_training_config(config, sub, args.flags, global.seed);
  cfg.min_count = args.min_count;
  cfg.keyword_min_count = args.keyword_min_count;
  cfg.method = dimvec::dim_method_from_string(args.method);
  cfg.save_models = args.save_models;
  cfg.validate();

  const std::vector<dimvec::Sentence> corpus = dimvec::load_corpus(args.corpus);
  const std::vector<dimvec::DocSpan> doc_index = dimvec::load_doc_index(args.doc_index);

  std::vector<dimvec::AnchorLexicon> lexicons;
  for (const auto& path : args.lexicon_paths) lexicons.push_back(dimvec::load_lexicon(path));
  std::vector<dimvec::EnsembleKeyword> keywords;
  if (!args.keywords_path.empty()) keywords = dimvec::load_keywords(args.keywords_path);

  log_verbose(global, "running " + std::to_string(cfg.k_models) + " models");
  const dimvec::EnsembleRunResult run = dimvec::run_ensemble(
      cfg, corpus, doc_index, lexicons, keywords, args.out_dir, global.effective_threads());
  for (const auto& w : run.warnings) std::cerr << "warning: " << w << '\n';

  json manifest = report_envelope(global);
  manifest["k_models"] = cfg.k_models;
  manifest["subsample_fraction"] = cfg.subsample_fraction;
  manifest["base_seed"] = cfg.base_seed;
  manifest["min_count"] = cfg.min_count;
  manifest["keyword_min_count"] = cfg.keyword_min_count;
  manifest["method"] = dimvec::to_string(cfg.method);
  manifest["save_models"] = cfg.save_models;
  manifest["training"] = cfg.training;
  json inputs;
  inputs["corpus"] = dimvec::input_digest(args.corpus);
  inputs["doc_index"] = dimvec::input_digest(args.doc_index);
  inputs["lexicons"] = json::array();
  for (const auto& path : args.lexicon_paths) inputs["lexicons"].push_back(dimvec::input_digest(path));
  inputs["keywords"] =
      args.keywords_path.empty() ? json(nullptr) : dimvec::input_digest(args.keywords_path);
  manifest["inputs"] = std::move(inputs);
  manifest["completed_models"] = run.completed_models;
  manifest["warnings"] = run.warnings;
  dimvec::write_json(manifest, std::filesystem::path(args.out_dir) / "manifest.json");

  const auto models = dimvec::load_model_projections(args.out_dir);
  write_ensemble_summary(args.out_dir, cfg.k_models, lexicons, models);

  std::cout << "ensemble: " << run.completed_models.size() << "/" << cfg.k_models
            << " models completed, summary in " << args.out_dir << "/ensemble_summary.json\n";
  return 0;
}

struct ReportArgs {
  std::string ensemble_dir;
};

int cmd_report(const GlobalOptions& global, const ReportArgs& args) {
  const std::filesystem::path dir(args.ensemble_dir);
  const json manifest = dimvec::read_json(dir / "manifest.json");
  const int32_t k = manifest.at("k_models").get<int32_t>();

  std::vector<dimvec::AnchorLexicon> lexicons;
  for (const auto& lj : manifest.at("inputs").at("lexicons")) {
    lexicons.push_back(dimvec::load_lexicon(lj.at("path").get<std::string>()));
  }
  const auto models = dimvec::load_model_projections(dir);
  if (models.empty()) throw std::runtime_error("no per-model projections under " + dir.string());
  write_ensemble_summary(dir, k, lexicons, models);
  log_verbose(global, "re-aggregated " + std::to_string(models.size()) + " models");
  std::cout << "re-aggregated " << models.size() << "/" << k << " models into " << dir.string()
            << "/ensemble_summary.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  GlobalOptions global;

  CLI::App app{"dimvec: train word embeddings, evaluate them, and locate words on semantic dimensions"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);
  app.add_option("--config", global.config_path, "JSON config file (flags override it)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", global.seed, "Seed for every stochastic step");
  app.add_option("--threads", global.threads, "Worker threads (default: hardware concurrency)");
  app.add_flag("--deterministic", global.deterministic, "Force single-threaded, bit-reproducible runs");
  app.add_flag("--verbose", global.verbose, "Progress logging to stderr");
  app.add_flag("--error-json", global.error_json, "On failure, print a machine-readable error JSON");

  PreprocessArgs pre_args;
  auto* pre = app.add_subcommand("preprocess", "Clean raw documents into a tokenized corpus + vocabulary");
  pre->add_option("--input", pre_args.input, "Document directory (*.txt) or JSONL file")
      ->required()
      ->check(CLI::ExistingPath);
  pre->add_option("--format", pre_args.format, "auto|text-dir|jsonl")->default_str("auto");
  pre->add_option("--output-dir", pre_args.output_dir, "Output directory")->required();
  pre->add_option("--exclude", pre_args.exclude_path, "Exclusion terms, one per line")
      ->check(CLI::ExistingFile);
  pre->add_option("--min-count", pre_args.min_count, "Vocabulary frequency threshold");
  pre->add_option("--phrase-delta", pre_args.phrase_delta, "Phrase score discount");
  pre->add_option("--phrase-threshold", pre_args.phrase_threshold, "Phrase score cutoff");
  pre->add_option("--phrase-passes", pre_args.phrase_passes, "Bigram merge passes (0 = off)");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train an embedding model on a processed corpus");
  train->add_option("--corpus", train_args.corpus, "Processed corpus (one sentence per line)")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--vocab", train_args.vocab_path, "Vocabulary TSV (default: rebuild from corpus)")
      ->check(CLI::ExistingFile);
  train->add_option("--output", train_args.output, "Model output path")->required();
  train->add_option("--format", train_args.format, "Output format: native|text|binary");
  train->add_option("--min-count", train_args.min_count, "Vocabulary threshold when rebuilding");
  train->add_option("--report", train_args.report_path, "Write a training report JSON");
  add_training_flags(train, train_args.flags);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score a model on analogy and word-similarity benchmarks");
  eval->add_option("--model", eval_args.model, "Model file")->required()->check(CLI::ExistingFile);
  eval->add_option("--model-format", eval_args.model_format, "native|text|binary");
  eval->add_option("--analogies", eval_args.analogies, "Analogy questions (Google format)")
      ->check(CLI::ExistingFile);
  eval->add_option("--wordsim", eval_args.wordsim, "Word similarity CSV (word1,word2,score)")
      ->check(CLI::ExistingFile);
  eval->add_option("--oov", eval_args.oov, "OOV policy: skip|wrong");
  eval->add_option("--report", eval_args.report_path, "Write an evaluation report JSON");

  NeighborsArgs nn_args;
  auto* nn = app.add_subcommand("neighbors", "Nearest neighbors of a word (TSV to stdout)");
  nn->add_option("--model", nn_args.model, "Model file")->required()->check(CLI::ExistingFile);
  nn->add_option("--model-format", nn_args.model_format, "native|text|binary");
  nn->add_option("--word", nn_args.word, "Query word")->required();
  nn->add_option("--k", nn_args.k, "Number of neighbors");
  nn->add_option("--exclude", nn_args.exclude, "Words to exclude from candidates");

  auto* dim = app.add_subcommand("dim", "Semantic dimension operations");
  dim->require_subcommand(1);

  DimExtractArgs dx_args;
  auto* dx = dim->add_subcommand("extract", "Extract a dimension (or train an SVM) from a lexicon");
  dx->add_option("--model", dx_args.model, "Model file")->required()->check(CLI::ExistingFile);
  dx->add_option("--model-format", dx_args.model_format, "native|text|binary");
  dx->add_option("--lexicon", dx_args.lexicon, "Anchor lexicon TSV")->required()->check(CLI::ExistingFile);
  dx->add_option("--method", dx_args.method, "larsen|bolukbasi|svm");
  dx->add_option("--output", dx_args.output, "Dimension/classifier JSON output")->required();
  dx->add_option("--svm-c-grid", dx_args.c_grid, "Comma-separated C grid for --method svm");

  DimValidateArgs dv_args;
  auto* dv = dim->add_subcommand("validate", "Classify anchors and cross-validate a lexicon");
  dv->add_option("--model", dv_args.model, "Model file")->required()->check(CLI::ExistingFile);
  dv->add_option("--model-format", dv_args.model_format, "native|text|binary");
  dv->add_option("--lexicon", dv_args.lexicon, "Anchor lexicon TSV")->required()->check(CLI::ExistingFile);
  dv->add_option("--method", dv_args.method, "larsen|bolukbasi|svm");
  dv->add_option("--folds", dv_args.folds, "Cross-validation folds");
  dv->add_option("--report", dv_args.report_path, "Write a validation report JSON");
  dv->add_option("--svm-c-grid", dv_args.c_grid, "Comma-separated C grid for --method svm");

  DimProjectArgs dp_args;
  auto* dp = dim->add_subcommand("project", "Project words onto a stored dimension");
  dp->add_option("--model", dp_args.model, "Model file")->required()->check(CLI::ExistingFile);
  dp->add_option("--model-format", dp_args.model_format, "native|text|binary");
  dp->add_option("--dim", dp_args.dim_path, "Dimension JSON from `dim extract`")
      ->required()
      ->check(CLI::ExistingFile);
  dp->add_option("--words", dp_args.words_path, "Word list file, one per line")->check(CLI::ExistingFile);
  dp->add_option("--word", dp_args.words, "Words given inline (repeatable)");
  dp->add_option("--report", dp_args.report_path, "Write a projection report JSON");

  DimSimilarityArgs ds_args;
  auto* ds = dim->add_subcommand("similarity", "Cosine similarity of two stored dimensions");
  ds->add_option("--dim-a", ds_args.dim_a, "First dimension JSON")->required()->check(CLI::ExistingFile);
  ds->add_option("--dim-b", ds_args.dim_b, "Second dimension JSON")->required()->check(CLI::ExistingFile);
  ds->add_option("--report", ds_args.report_path, "Write a similarity report JSON");

  EnsembleArgs ens_args;
  auto* ens = app.add_subcommand("ensemble", "Robustness protocol: k models on corpus subsamples");
  ens->add_option("--corpus", ens_args.corpus, "Processed corpus")->required()->check(CLI::ExistingFile);
  ens->add_option("--doc-index", ens_args.doc_index, "Document index (corpus.docidx)")
      ->required()
      ->check(CLI::ExistingFile);
  ens->add_option("--lexicon", ens_args.lexicon_paths, "Anchor lexicon TSV (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  ens->add_option("--keywords", ens_args.keywords_path, "Keyword TSV (token[<TAB>role])")
      ->check(CLI::ExistingFile);
  ens->add_option("--out", ens_args.out_dir, "Output directory")->required();
  ens->add_option("--models", ens_args.k_models, "Number of models (k)");
  ens->add_option("--fraction", ens_args.fraction, "Document subsample fraction");
  ens->add_option("--min-count", ens_args.min_count, "Per-model vocabulary threshold");
  ens->add_option("--keyword-min-count", ens_args.keyword_min_count, "Keyword presence threshold");
  ens->add_option("--method", ens_args.method, "Dimension method: larsen|bolukbasi");
  ens->add_flag("--save-models", ens_args.save_models, "Also save each trained model");
  add_training_flags(ens, ens_args.flags);

  ReportArgs rep_args;
  auto* rep = app.add_subcommand("report", "Re-aggregate a finished ensemble directory");
  rep->add_option("--ensemble-dir", rep_args.ensemble_dir, "Directory written by `ensemble`")
      ->required()
      ->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return 2;
  }

  try {
    const ConfigFile config = load_config_file(global.config_path);
    if (pre->parsed()) return cmd_preprocess(global, config, pre_args, *pre);
    if (train->parsed()) return cmd_train(global, config, train_args, *train);
    if (eval->parsed()) return cmd_eval(global, config, eval_args, *eval);
    if (nn->parsed()) return cmd_neighbors(global, nn_args);
    if (dim->parsed()) {
      if (dx->parsed()) return cmd_dim_extract(global, dx_args);
      if (dv->parsed()) return cmd_dim_validate(global, dv_args);
      if (dp->parsed()) return cmd_dim_project(global, dp_args);
      if (ds->parsed()) return cmd_dim_similarity(global, ds_args);
    }
    if (ens->parsed()) return cmd_ensemble(global, config, ens_args, *ens);
    if (rep->parsed()) return cmd_report(global, rep_args);
    throw std::runtime_error("no subcommand dispatched");
  } catch (const std::exception& e) {
    if (global.error_json) {
      std::cout << json{{"error", e.what()}, {"exit_code", 1}}.dump() << '\n';
    }
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
