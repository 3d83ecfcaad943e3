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

#include "dimvec/ensemble.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dimvec/model_io.hpp"
#include "dimvec/rng.hpp"

namespace dimvec {

namespace {

using nlohmann::json;

std::string lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string sanitize_filename(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return out.empty() ? std::string("unnamed") : out;
}

void append_shortest(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

json projection_to_json(const WordProjection& wp) {
  json j;
  j["word"] = wp.word;
  j["role"] = wp.role;
  j["split"] = wp.split ? json(*wp.split) : json(nullptr);
  j["pole"] = wp.pole ? json(*wp.pole) : json(nullptr);
  j["present"] = wp.present;
  j["count"] = wp.count;
  j["projection"] = wp.projection ? json(*wp.projection) : json(nullptr);
  return j;
}

WordProjection projection_from_json(const json& j) {
  WordProjection wp;
  wp.word = j.at("word").get<std::string>();
  wp.role = j.at("role").get<std::string>();
  if (!j.at("split").is_null()) wp.split = j.at("split").get<std::string>();
  if (!j.at("pole").is_null()) wp.pole = j.at("pole").get<std::string>();
  wp.present = j.at("present").get<bool>();
  wp.count = j.at("count").get<int64_t>();
  if (!j.at("projection").is_null()) wp.projection = j.at("projection").get<double>();
  return wp;
}

// True pole matches the classification rule: projection > 0 is positive,
// anything else (including exactly 0) is negative.
bool classified_correctly(const WordProjection& wp) {
  if (!wp.present || !wp.projection || !wp.pole) return false;
  const bool predicted_positive = *wp.projection > 0.0;
  return predicted_positive == (*wp.pole == "positive");
}

}  // namespace

void EnsembleConfig::validate() const {
  if (k_models < 1) throw std::invalid_argument("k_models must be >= 1");
  if (!(subsample_fraction > 0.0) || subsample_fraction > 1.0) {
    throw std::invalid_argument("subsample_fraction must be in (0, 1]");
  }
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  if (keyword_min_count < 1) throw std::invalid_argument("keyword_min_count must be >= 1");
  if (method == DimMethod::kSvm) {
    throw std::invalid_argument("ensemble projections need an axis; use larsen or bolukbasi");
  }
  training.validate();
}

std::vector<size_t> subsample_documents(size_t n_docs, double fraction, uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw std::invalid_argument("subsample fraction must be in (0, 1]");
  }
  const size_t m = static_cast<size_t>(fraction * static_cast<double>(n_docs));
  if (m == 0) throw std::runtime_error("document subsample is empty");

  std::vector<size_t> indices(n_docs);
  for (size_t i = 0; i < n_docs; ++i) indices[i] = i;
  Rng rng(seed);
  for (size_t i = 0; i < m; ++i) {
    const size_t j = i + static_cast<size_t>(rng.next_below(n_docs - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(m);
  std::sort(indices.begin(), indices.end());
  return indices;
}

std::vector<Sentence> select_sentences(const std::vector<Sentence>& corpus,
                                       const std::vector<DocSpan>& doc_index,
                                       const std::vector<size_t>& selected) {
  std::vector<Sentence> out;
  for (const size_t d : selected) {
    if (d >= doc_index.size()) throw std::out_of_range("document index out of range");
    const DocSpan& span = doc_index[d];
    if (span.start_line < 0 || span.n_lines < 0 ||
        static_cast<size_t>(span.start_line + span.n_lines) > corpus.size()) {
      throw std::runtime_error("document index does not fit the corpus (document \"" + span.id +
                               "\")");
    }
    for (int64_t line = span.start_line; line < span.start_line + span.n_lines; ++line) {
      out.push_back(corpus[static_cast<size_t>(line)]);
    }
  }
  return out;
}

std::vector<EnsembleKeyword> load_keywords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());

  std::vector<EnsembleKeyword> keywords;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    EnsembleKeyword kw;
    kw.token = lower_ascii(tab == std::string::npos ? line : line.substr(0, tab));
    kw.role = tab == std::string::npos ? "" : line.substr(tab + 1);
    if (kw.token.empty() || kw.token.find(' ') != std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": malformed keyword token");
    }
    if (kw.role.find(',') != std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": keyword role must not contain commas");
    }
    for (const auto& existing : keywords) {
      if (existing.token == kw.token) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": duplicate keyword \"" + kw.token + "\"");
      }
    }
    keywords.push_back(std::move(kw));
  }
  return keywords;
}

EnsembleRunResult run_ensemble(const EnsembleConfig& cfg, const std::vector<Sentence>& corpus,
                               const std::vector<DocSpan>& doc_index,
                               const std::vector<AnchorLexicon>& lexicons,
                               const std::vector<EnsembleKeyword>& keywords,
                               const std::filesystem::path& out_dir, int32_t threads) {
  cfg.validate();
  if (lexicons.empty()) throw std::invalid_argument("ensemble needs at least one lexicon");
  for (const auto& lexicon : lexicons) lexicon.validate();
  std::filesystem::create_directories(out_dir);

  EnsembleRunResult result;
  for (int32_t i = 0; i < cfg.k_models; ++i) {
    const uint64_t seed = cfg.base_seed + static_cast<uint64_t>(i);
    const std::string tag = "model " + std::to_string(i);
    try {
      const auto selected = subsample_documents(doc_index.size(), cfg.subsample_fraction, seed);
      const auto sentences = select_sentences(corpus, doc_index, selected);
      const Vocabulary vocab = build_vocab(sentences, cfg.min_count);

      TrainingConfig tc = cfg.training;
      tc.seed = seed;
      EmbeddingModel model = init_model(vocab, tc);
      TrainOptions train_options;
      train_options.threads = threads;
      train(model, sentences, train_options);
      const UnitEmbedding emb(model);

      ModelProjections mp;
      mp.model_index = i;
      mp.seed = seed;
      mp.vocab_size = vocab.size();
      mp.n_documents = selected.size();

      for (const auto& lexicon : lexicons) {
        const Dimension dim = cfg.method == DimMethod::kLarsen ? extract_larsen(emb, lexicon)
                                                               : extract_bolukbasi(emb, lexicon);
        LexiconProjections lp;
        lp.name = lexicon.name;
        lp.pole_names = lexicon.pole_names;
        lp.method = to_string(dim.method);
        lp.anchor_coverage = dim.anchor_coverage;

        const auto project_word = [&](const std::string& word) -> std::optional<double> {
          const auto id = emb.vocab().find(word);
          if (!id || !emb.has_unit(*id)) return std::nullopt;
          return project(emb, dim, word);
        };

        for (const auto& entry : lexicon.entries) {
          auto [it, inserted] = lp.words.try_emplace(entry.word);
          if (!inserted) continue;  // multiplicity lives in the lexicon, not here
          WordProjection& wp = it->second;
          wp.word = entry.word;
          wp.role = "anchor";
          wp.split = to_string(entry.split);
          wp.pole = to_string(entry.pole);
          const auto id = vocab.find(entry.word);
          wp.count = id ? vocab.at(*id).count : 0;
          wp.projection = project_word(entry.word);
          wp.present = wp.projection.has_value();
        }
        for (const auto& kw : keywords) {
          auto [it, inserted] = lp.words.try_emplace(kw.token);
          WordProjection& wp = it->second;
          wp.word = kw.token;
          wp.role = kw.role.empty() ? "keyword" : kw.role;
          const auto id = vocab.find(kw.token);
          wp.count = id ? vocab.at(*id).count : 0;
          // Keywords obey the stricter presence rule: the word must occur at
          // least keyword_min_count times in this model's subsample.
          if (wp.count >= cfg.keyword_min_count) {
            wp.projection = project_word(kw.token);
            wp.present = wp.projection.has_value();
          } else {
            wp.projection = std::nullopt;
            wp.present = false;
            result.warnings.push_back(tag + ": keyword \"" + kw.token + "\" below minimum count (" +
                                      std::to_string(wp.count) + " < " +
                                      std::to_string(cfg.keyword_min_count) + ")");
          }
        }
        mp.lexicons.push_back(std::move(lp));
      }

      const auto model_dir = out_dir / ("model_" + std::to_string(i));
      std::filesystem::create_directories(model_dir);
      if (cfg.save_models) save_model(model, model_dir / "model.dv", ModelFormat::kNative);

      json j;
      j["model_index"] = mp.model_index;
      j["seed"] = mp.seed;
      j["vocab_size"] = mp.vocab_size;
      j["n_documents"] = mp.n_documents;
      j["lexicons"] = json::array();
      for (const auto& lp : mp.lexicons) {
        json lj;
        lj["name"] = lp.name;
        lj["pole_names"] = {lp.pole_names.first, lp.pole_names.second};
        lj["method"] = lp.method;
        lj["anchor_coverage"] = lp.anchor_coverage;
        lj["words"] = json::array();
        for (const auto& [word, wp] : lp.words) lj["words"].push_back(projection_to_json(wp));
        j["lexicons"].push_back(std::move(lj));
      }
      std::ofstream out(model_dir / "projections.json");
      if (!out) throw std::runtime_error("cannot write " + (model_dir / "projections.json").string());
      out << j.dump(2) << '\n';
      if (!out) throw std::runtime_error("write failed: " + (model_dir / "projections.json").string());

      result.completed_models.push_back(i);
    } catch (const std::exception& e) {
      result.warnings.push_back(tag + " excluded: " + e.what());
    }
  }
  return result;
}

std::vector<ModelProjections> load_model_projections(const std::filesystem::path& out_dir) {
  std::vector<ModelProjections> models;
  if (!std::filesystem::is_directory(out_dir)) {
    throw std::runtime_error("not a directory: " + out_dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(out_dir)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("model_", 0) != 0) continue;
    const std::string suffix = name.substr(6);
    int32_t index = 0;
    const auto res = std::from_chars(suffix.data(), suffix.data() + suffix.size(), index);
    if (res.ec != std::errc() || res.ptr != suffix.data() + suffix.size()) continue;
    const auto file = entry.path() / "projections.json";
    if (!std::filesystem::exists(file)) continue;

    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw std::runtime_error(file.string() + ": malformed JSON: " + e.what());
    }
    try {
      ModelProjections mp;
      mp.model_index = j.at("model_index").get<int32_t>();
      mp.seed = j.at("seed").get<uint64_t>();
      mp.vocab_size = j.at("vocab_size").get<int64_t>();
      mp.n_documents = j.at("n_documents").get<size_t>();
      for (const auto& lj : j.at("lexicons")) {
        LexiconProjections lp;
        lp.name = lj.at("name").get<std::string>();
        lp.pole_names = {lj.at("pole_names").at(0).get<std::string>(),
                         lj.at("pole_names").at(1).get<std::string>()};
        lp.method = lj.at("method").get<std::string>();
        lp.anchor_coverage = lj.at("anchor_coverage").get<double>();
        for (const auto& wj : lj.at("words")) {
          WordProjection wp = projection_from_json(wj);
          lp.words.emplace(wp.word, std::move(wp));
        }
        mp.lexicons.push_back(std::move(lp));
      }
      models.push_back(std::move(mp));
    } catch (const json::exception& e) {
      throw std::runtime_error(file.string() + ": unexpected projection schema: " + e.what());
    }
  }
  std::sort(models.begin(), models.end(),
            [](const ModelProjections& a, const ModelProjections& b) {
              return a.model_index < b.model_index;
            });
  return models;
}

std::vector<EnsembleSummary> robust_classify(const std::vector<ModelProjections>& models,
                                             int32_t k) {
  struct Accumulator {
    EnsembleSummary summary;
    std::pair<std::string, std::string> pole_names;
    std::vector<double> values;
  };
  std::map<std::pair<std::string, std::string>, Accumulator> acc;

  for (const auto& model : models) {
    for (const auto& lexicon : model.lexicons) {
      for (const auto& [word, wp] : lexicon.words) {
        auto& a = acc[{lexicon.name, word}];
        if (a.summary.word.empty()) {
          a.summary.lexicon = lexicon.name;
          a.summary.word = word;
          a.summary.role = wp.role;
          a.summary.split = wp.split;
          a.summary.pole = wp.pole;
          a.summary.k = k;
          a.pole_names = lexicon.pole_names;
        }
        if (wp.present && wp.projection) a.values.push_back(*wp.projection);
      }
    }
  }

  std::vector<EnsembleSummary> out;
  for (auto& [key, a] : acc) {
    if (a.values.empty()) continue;  // never present in any model
    EnsembleSummary& s = a.summary;
    s.n_models_present = static_cast<int32_t>(a.values.size());
    double sum = 0.0;
    s.min = a.values.front();
    s.max = a.values.front();
    for (const double v : a.values) {
      sum += v;
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
    s.mean = sum / static_cast<double>(a.values.size());
    double ss = 0.0;
    for (const double v : a.values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(a.values.size()));

    bool all_positive = true;
    bool all_negative = true;
    for (const double v : a.values) {
      all_positive = all_positive && v > 0.0;
      all_negative = all_negative && v < 0.0;
    }
    s.robust = s.n_models_present == k && (all_positive || all_negative);
    // Classification convention for the mean: > 0 positive pole, else negative.
    s.pole_at_mean = s.mean > 0.0 ? a.pole_names.first : a.pole_names.second;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<RobustAccuracy> robust_accuracy(const std::vector<AnchorLexicon>& lexicons,
                                            const std::vector<ModelProjections>& models,
                                            int32_t k) {
  std::vector<RobustAccuracy> out;
  for (const auto& lexicon : lexicons) {
    RobustAccuracy ra;
    ra.lexicon = lexicon.name;
    for (const auto& entry : lexicon.entries) {
      int32_t correct_models = 0;
      for (const auto& model : models) {
        for (const auto& lp : model.lexicons) {
          if (lp.name != lexicon.name) continue;
          const auto it = lp.words.find(entry.word);
          if (it != lp.words.end()) {
            // Score against this entry's own pole, not the stored row's
            // (a word can appear under both poles across pairs).
            WordProjection wp = it->second;
            wp.pole = to_string(entry.pole);
            if (classified_correctly(wp)) ++correct_models;
          }
          break;
        }
      }
      const bool robust = correct_models == k;
      if (entry.split == Split::kTrain) {
        ++ra.train_total;
        ra.train_robust += robust ? 1 : 0;
      } else {
        ++ra.test_total;
        ra.test_robust += robust ? 1 : 0;
      }
    }
    out.push_back(std::move(ra));
  }
  return out;
}

void emit_figure_data(const std::vector<EnsembleSummary>& summaries,
                      const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::map<std::string, std::vector<const EnsembleSummary*>> by_lexicon;
  for (const auto& s : summaries) by_lexicon[s.lexicon].push_back(&s);

  for (auto& [lexicon, rows] : by_lexicon) {
    std::sort(rows.begin(), rows.end(), [](const EnsembleSummary* a, const EnsembleSummary* b) {
      if (a->mean != b->mean) return a->mean < b->mean;
      return a->word < b->word;
    });
    const auto path = out_dir / ("figure_" + sanitize_filename(lexicon) + ".csv");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "word,role,mean,sd,min,max,robust\n";
    std::string line;
    for (const EnsembleSummary* s : rows) {
      line.clear();
      line += s->word;
      line += ',';
      line += s->role;
      line += ',';
      append_shortest(line, s->mean);
      line += ',';
      append_shortest(line, s->sd);
      line += ',';
      append_shortest(line, s->min);
      line += ',';
      append_shortest(line, s->max);
      line += ',';
      line += s->robust ? "true" : "false";
      line += '\n';
      out << line;
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }
}

}  // namespace dimvec
