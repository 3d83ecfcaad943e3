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

#include "dimvec/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dimvec {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return std::move(out).str();
}

bool is_ascii_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\v' || cp == U'\f';
}

bool is_token_space(char32_t cp) {
  return is_ascii_space(cp) || cp == 0x00A0;  // no-break space
}

// Punctuation and symbol code points removed by normalize(). ASCII covers
// everything printable that is not alphanumeric; the Unicode ranges cover the
// punctuation, symbol, and fullwidth blocks that show up in news text.
bool is_punct_or_symbol(char32_t cp) {
  if (cp < 0x80) {
    return cp > 0x20 && !(cp >= U'0' && cp <= U'9') && !(cp >= U'A' && cp <= U'Z') &&
           !(cp >= U'a' && cp <= U'z');
  }
  if (cp >= 0x00A1 && cp <= 0x00BF) return true;  // Latin-1 punctuation
  if (cp == 0x00D7 || cp == 0x00F7) return true;
  if (cp >= 0x2000 && cp <= 0x206F) return true;  // general punctuation
  if (cp >= 0x20A0 && cp <= 0x20CF) return true;  // currency symbols
  if (cp >= 0x2190 && cp <= 0x2BFF) return true;  // arrows, math, misc symbols
  if (cp >= 0x2E00 && cp <= 0x2E7F) return true;  // supplemental punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return true;  // CJK symbols/punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return true;  // CJK compatibility forms
  if (cp >= 0xFF01 && cp <= 0xFF0F) return true;  // fullwidth forms
  if (cp >= 0xFF1A && cp <= 0xFF20) return true;
  if (cp >= 0xFF3B && cp <= 0xFF40) return true;
  if (cp >= 0xFF5B && cp <= 0xFF65) return true;
  return false;
}

// Decodes one UTF-8 code point at s[i]; advances i. Invalid bytes decode as
// U+FFFD and advance by one.
char32_t decode_utf8(std::string_view s, size_t& i) {
  const auto byte = [&](size_t k) { return static_cast<unsigned char>(s[k]); };
  const unsigned char b0 = byte(i);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + static_cast<size_t>(len) > s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const unsigned char bk = byte(i + static_cast<size_t>(k));
    if ((bk & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (bk & 0x3F);
  }
  i += static_cast<size_t>(len);
  return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::vector<std::string> tokenize_document(const std::string& text) {
  std::vector<std::string> tokens;
  for (const auto& raw : split_sentences(text)) {
    Sentence sent = normalize(raw);
    tokens.insert(tokens.end(), std::make_move_iterator(sent.begin()),
                  std::make_move_iterator(sent.end()));
  }
  return tokens;
}

}  // namespace

std::vector<Document> load_documents(const fs::path& path, CorpusFormat format) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen_ids;
  const auto check_unique = [&](const std::string& id) {
    if (!seen_ids.insert(id).second) {
      throw std::runtime_error("duplicate document id: " + id);
    }
  };

  if (format == CorpusFormat::kTextDir) {
    if (!fs::is_directory(path)) {
      throw std::runtime_error("not a readable directory: " + path.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      Document doc{file.stem().string(), read_file(file)};
      check_unique(doc.id);
      docs.push_back(std::move(doc));
    }
    return docs;
  }

  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("malformed JSONL at line " + std::to_string(line_no) + ": " +
                               e.what());
    }
    if (!obj.is_object() || !obj.contains("text") || !obj["text"].is_string()) {
      throw std::runtime_error("JSONL record missing \"text\" field at line " +
                               std::to_string(line_no));
    }
    Document doc;
    doc.text = obj["text"].get<std::string>();
    if (obj.contains("id") && obj["id"].is_string()) {
      doc.id = obj["id"].get<std::string>();
    } else {
      doc.id = "doc" + std::to_string(line_no);
    }
    check_unique(doc.id);
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> filter_documents(std::vector<Document> docs,
                                       const std::unordered_set<std::string>& exclusion_terms,
                                       FilterStats* stats) {
  for (const auto& term : exclusion_terms) {
    for (char c : term) {
      if (c >= 'A' && c <= 'Z') {
        throw std::invalid_argument("exclusion terms must be lowercase: " + term);
      }
    }
  }

  FilterStats local;
  local.input_count = static_cast<int64_t>(docs.size());

  std::vector<Document> kept;
  kept.reserve(docs.size());
  for (auto& doc : docs) {
    bool drop = false;
    if (!exclusion_terms.empty()) {
      for (const auto& token : tokenize_document(doc.text)) {
        if (exclusion_terms.count(token) != 0) {
          drop = true;
          break;
        }
      }
    }
    if (drop) {
      ++local.dropped_count;
    } else {
      kept.push_back(std::move(doc));
    }
  }
  local.kept_count = static_cast<int64_t>(kept.size());
  local.dropped_fraction = local.input_count == 0
                               ? 0.0
                               : static_cast<double>(local.dropped_count) /
                                     static_cast<double>(local.input_count);
  if (stats != nullptr) *stats = local;
  return kept;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) sentences.push_back(std::move(current));
    current.clear();
  };

  size_t i = 0;
  const size_t n = text.size();
  // Skip leading whitespace.
  while (i < n && is_ascii_space(text[i])) ++i;
  while (i < n) {
    const char c = text[i];
    current.push_back(c);
    bool terminates = c == ';' || c == ':' || c == '!' || c == '.' || c == '?';
    if (c == '"') {
      // A quote ends a sentence only at a word boundary.
      terminates = i + 1 >= n || is_ascii_space(text[i + 1]);
    }
    ++i;
    if (terminates) {
      flush();
      while (i < n && is_ascii_space(text[i])) ++i;
    }
  }
  flush();
  return sentences;
}

Sentence normalize(std::string_view sentence) {
  Sentence tokens;
  std::string current;
  size_t i = 0;
  while (i < sentence.size()) {
    const char32_t cp = decode_utf8(sentence, i);
    if (is_token_space(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (is_punct_or_symbol(cp) || cp == 0xFFFD) continue;
    if (cp >= U'A' && cp <= U'Z') {
      current.push_back(static_cast<char>(cp - U'A' + U'a'));
    } else {
      encode_utf8(cp, current);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

void PhraseConfig::validate() const {
  if (delta < 0.0) throw std::invalid_argument("phrase delta must be >= 0");
  if (!(threshold > 0.0)) throw std::invalid_argument("phrase threshold must be > 0");
  if (max_passes < 1) throw std::invalid_argument("phrase max_passes must be >= 1");
}

double PhraseStats::score(const std::string& a, const std::string& b, double delta) const {
  const auto ua = unigram.find(a);
  const auto ub = unigram.find(b);
  if (ua == unigram.end() || ub == unigram.end()) return 0.0;
  const auto ab = bigram.find(a + " " + b);
  const double count_ab = ab == bigram.end() ? 0.0 : static_cast<double>(ab->second);
  return (count_ab - delta) * static_cast<double>(total_tokens) /
         (static_cast<double>(ua->second) * static_cast<double>(ub->second));
}

PhraseStats count_phrase_stats(const std::vector<Sentence>& sentences) {
  PhraseStats stats;
  for (const auto& sent : sentences) {
    for (size_t i = 0; i < sent.size(); ++i) {
      ++stats.unigram[sent[i]];
      ++stats.total_tokens;
      if (i + 1 < sent.size()) {
        ++stats.bigram[sent[i] + " " + sent[i + 1]];
      }
    }
  }
  return stats;
}

std::vector<Sentence> detect_phrases(const std::vector<Sentence>& sentences,
                                     const PhraseConfig& cfg) {
  cfg.validate();
  const PhraseStats stats = count_phrase_stats(sentences);

  std::vector<Sentence> out;
  out.reserve(sentences.size());
  for (const auto& sent : sentences) {
    Sentence rewritten;
    rewritten.reserve(sent.size());
    size_t i = 0;
    while (i < sent.size()) {
      if (i + 1 < sent.size() && stats.score(sent[i], sent[i + 1], cfg.delta) > cfg.threshold) {
        rewritten.push_back(sent[i] + "_" + sent[i + 1]);
        i += 2;
      } else {
        rewritten.push_back(sent[i]);
        ++i;
      }
    }
    out.push_back(std::move(rewritten));
  }
  return out;
}

Vocabulary Vocabulary::from_counts(const std::unordered_map<std::string, int64_t>& counts,
                                   int64_t total_tokens, int32_t min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  Vocabulary vocab;
  vocab.total_tokens_ = total_tokens;
  vocab.min_count_ = min_count;
  for (const auto& [token, count] : counts) {
    if (count >= min_count) vocab.entries_.push_back({token, count});
  }
  if (vocab.entries_.empty()) {
    throw std::runtime_error("vocabulary is empty after min-count filtering (min_count=" +
                             std::to_string(min_count) + ")");
  }
  std::sort(vocab.entries_.begin(), vocab.entries_.end(),
            [](const VocabEntry& a, const VocabEntry& b) {
              if (a.count != b.count) return a.count > b.count;
              return a.token < b.token;
            });
  vocab.index_.reserve(vocab.entries_.size());
  for (int32_t i = 0; i < vocab.size(); ++i) {
    vocab.index_.emplace(vocab.entries_[static_cast<size_t>(i)].token, i);
  }
  return vocab;
}

Vocabulary Vocabulary::from_ordered_entries(std::vector<VocabEntry> entries, int64_t total_tokens,
                                            int32_t min_count) {
  if (entries.empty()) throw std::runtime_error("vocabulary must be non-empty");
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  Vocabulary vocab;
  vocab.total_tokens_ = total_tokens;
  vocab.min_count_ = min_count;
  vocab.entries_ = std::move(entries);
  vocab.index_.reserve(vocab.entries_.size());
  for (int32_t i = 0; i < vocab.size(); ++i) {
    const auto [it, inserted] = vocab.index_.emplace(vocab.entries_[static_cast<size_t>(i)].token, i);
    if (!inserted) {
      throw std::runtime_error("duplicate token in vocabulary: " +
                               vocab.entries_[static_cast<size_t>(i)].token);
    }
  }
  return vocab;
}

std::optional<int32_t> Vocabulary::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::save_tsv(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary file: " + path.string());
  out << "# total_tokens=" << total_tokens_ << "\tmin_count=" << min_count_ << "\n";
  for (const auto& entry : entries_) {
    out << entry.token << "\t" << entry.count << "\n";
  }
  if (!out) throw std::runtime_error("write failure: " + path.string());
}

Vocabulary Vocabulary::load_tsv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path.string());
  Vocabulary vocab;
  vocab.min_count_ = 1;
  int64_t total_from_header = -1;
  std::string line;
  int64_t line_no = 0;
  int64_t sum_counts = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto tt = line.find("total_tokens=");
      if (tt != std::string::npos) total_from_header = std::stoll(line.substr(tt + 13));
      const auto mc = line.find("min_count=");
      if (mc != std::string::npos) vocab.min_count_ = std::stoi(line.substr(mc + 10));
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("malformed vocabulary row at line " + std::to_string(line_no));
    }
    VocabEntry entry;
    entry.token = line.substr(0, tab);
    try {
      entry.count = std::stoll(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw std::runtime_error("malformed count at line " + std::to_string(line_no));
    }
    if (vocab.index_.count(entry.token) != 0) {
      throw std::runtime_error("duplicate token in vocabulary: " + entry.token);
    }
    vocab.index_.emplace(entry.token, vocab.size());
    sum_counts += entry.count;
    vocab.entries_.push_back(std::move(entry));
  }
  if (vocab.entries_.empty()) throw std::runtime_error("empty vocabulary file: " + path.string());
  vocab.total_tokens_ = total_from_header >= 0 ? total_from_header : sum_counts;
  return vocab;
}

Vocabulary build_vocab(const std::vector<Sentence>& sentences, int32_t min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::unordered_map<std::string, int64_t> counts;
  int64_t total = 0;
  for (const auto& sent : sentences) {
    for (const auto& token : sent) {
      ++counts[token];
      ++total;
    }
  }
  return Vocabulary::from_counts(counts, total, min_count);
}

void save_corpus(const std::vector<Sentence>& sentences, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path.string());
  for (const auto& sent : sentences) {
    for (size_t i = 0; i < sent.size(); ++i) {
      if (i != 0) out << ' ';
      out << sent[i];
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failure: " + path.string());
}

std::vector<Sentence> load_corpus(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path.string());
  std::vector<Sentence> sentences;
  std::string line;
  while (std::getline(in, line)) {
    Sentence sent;
    size_t start = 0;
    while (start < line.size()) {
      size_t end = line.find(' ', start);
      if (end == std::string::npos) end = line.size();
      if (end > start) sent.emplace_back(line.substr(start, end - start));
      start = end + 1;
    }
    sentences.push_back(std::move(sent));
  }
  return sentences;
}

void save_doc_index(const std::vector<DocSpan>& spans, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write doc index: " + path.string());
  for (const auto& span : spans) {
    out << span.id << "\t" << span.start_line << "\t" << span.n_lines << "\n";
  }
  if (!out) throw std::runtime_error("write failure: " + path.string());
}

std::vector<DocSpan> load_doc_index(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open doc index: " + path.string());
  std::vector<DocSpan> spans;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw std::runtime_error("malformed doc index row at line " + std::to_string(line_no));
    }
    DocSpan span;
    span.id = line.substr(0, t1);
    span.start_line = std::stoll(line.substr(t1 + 1, t2 - t1 - 1));
    span.n_lines = std::stoll(line.substr(t2 + 1));
    spans.push_back(std::move(span));
  }
  return spans;
}

}  // namespace dimvec
