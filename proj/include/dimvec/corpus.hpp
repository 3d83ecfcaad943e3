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

#ifndef DIMVEC_CORPUS_HPP_
#define DIMVEC_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace dimvec {

/// A tokenized sentence: lowercase tokens, punctuation stripped, phrases
/// joined with '_'.
using Sentence = std::vector<std::string>;

struct Document {
  std::string id;
  std::string text;
};

enum class CorpusFormat { kTextDir, kJsonl };

/// Reads every document under `path`. For kTextDir each *.txt file is one
/// document (id = file stem, scanned in filename order); for kJsonl each line
/// is an object with "id" and "text" fields. Malformed lines and missing
/// "text" fields raise with the offending line number.
std::vector<Document> load_documents(const std::filesystem::path& path, CorpusFormat format);

struct FilterStats {
  int64_t input_count = 0;
  int64_t kept_count = 0;
  int64_t dropped_count = 0;
  double dropped_fraction = 0.0;
};

/// Drops documents whose tokenized text contains any exclusion term
/// (whole-token match). Exclusion terms must be lowercase.
std::vector<Document> filter_documents(std::vector<Document> docs,
                                       const std::unordered_set<std::string>& exclusion_terms,
                                       FilterStats* stats = nullptr);

/// Splits raw text into sentence strings. A sentence ends at ';', ':', '!',
/// '.', '?', or at '"' followed by whitespace/end-of-text. Trailing content
/// without a terminator becomes a final sentence.
std::vector<std::string> split_sentences(std::string_view text);

/// Lowercases, removes punctuation/symbol characters (digits kept), and
/// tokenizes on whitespace. May return an empty sentence.
Sentence normalize(std::string_view sentence);

struct PhraseConfig {
  double delta = 5.0;
  double threshold = 10.0;
  int max_passes = 1;

  void validate() const;
};

/// Unigram/bigram counts from one pass over the corpus.
struct PhraseStats {
  std::unordered_map<std::string, int64_t> unigram;
  std::unordered_map<std::string, int64_t> bigram;  // key: "a b"
  int64_t total_tokens = 0;

  /// (count(ab) - delta) * total / (count(a) * count(b)); 0-count pairs score <= 0.
  double score(const std::string& a, const std::string& b, double delta) const;
};

PhraseStats count_phrase_stats(const std::vector<Sentence>& sentences);

/// One bigram pass: greedily merges adjacent pairs scoring above
/// cfg.threshold into "a_b" tokens. Callers wanting trigrams and beyond run
/// additional passes (cfg.max_passes is honored by the CLI pipeline).
std::vector<Sentence> detect_phrases(const std::vector<Sentence>& sentences, const PhraseConfig& cfg);

struct VocabEntry {
  std::string token;
  int64_t count = 0;
};

/// Frequency-filtered vocabulary with dense indices. Indices are assigned by
/// descending count, ties broken by lexicographic token order.
class Vocabulary {
 public:
  Vocabulary() = default;

  static Vocabulary from_counts(const std::unordered_map<std::string, int64_t>& counts,
                                int64_t total_tokens, int32_t min_count);

  /// Builds a vocabulary that preserves the given entry order verbatim, for
  /// model files whose row order is the word order. Throws on duplicates.
  static Vocabulary from_ordered_entries(std::vector<VocabEntry> entries, int64_t total_tokens,
                                         int32_t min_count);

  int32_t size() const { return static_cast<int32_t>(entries_.size()); }
  const VocabEntry& at(int32_t index) const { return entries_[static_cast<size_t>(index)]; }
  const std::vector<VocabEntry>& entries() const { return entries_; }

  /// Index of `token`, or nullopt when absent.
  std::optional<int32_t> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  /// Raw corpus token occurrences before min-count filtering.
  int64_t total_tokens() const { return total_tokens_; }
  int32_t min_count() const { return min_count_; }

  /// TSV "token<TAB>count" sorted by index, preceded by a
  /// "# total_tokens=<n>\tmin_count=<m>" comment line.
  void save_tsv(const std::filesystem::path& path) const;
  static Vocabulary load_tsv(const std::filesystem::path& path);

 private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, int32_t, std::hash<std::string>, std::equal_to<>> index_;
  int64_t total_tokens_ = 0;
  int32_t min_count_ = 1;
};

/// Counts tokens across sentences and keeps those occurring at least
/// min_count times. Throws if the result is empty.
Vocabulary build_vocab(const std::vector<Sentence>& sentences, int32_t min_count);

/// Processed corpus on disk: one sentence per line, space-separated tokens.
void save_corpus(const std::vector<Sentence>& sentences, const std::filesystem::path& path);
std::vector<Sentence> load_corpus(const std::filesystem::path& path);

/// Document boundaries for a processed corpus, so ensembles can resample at
/// the document level. TSV rows: doc_id <TAB> start_line <TAB> n_lines.
struct DocSpan {
  std::string id;
  int64_t start_line = 0;
  int64_t n_lines = 0;
};

void save_doc_index(const std::vector<DocSpan>& spans, const std::filesystem::path& path);
std::vector<DocSpan> load_doc_index(const std::filesystem::path& path);

}  // namespace dimvec

#endif  // DIMVEC_CORPUS_HPP_
