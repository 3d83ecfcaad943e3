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

#include "dimvec/model_io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dimvec/json_support.hpp"

namespace dimvec {

namespace {

constexpr char kNativeMagic[] = "dimvecmodel 1";

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

void append_shortest(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

// Parses the "V N" header shared by the interchange formats.
std::pair<int64_t, int64_t> parse_header(const std::string& line, const std::filesystem::path& path) {
  std::istringstream ss(line);
  int64_t v = 0;
  int64_t n = 0;
  std::string extra;
  if (!(ss >> v >> n) || (ss >> extra) || v < 1 || n < 1) {
    fail(path, "malformed header line (expected \"<vocab_size> <dim>\"): \"" + line + "\"");
  }
  return {v, n};
}

EmbeddingModel assemble_interchange(std::vector<VocabEntry> entries, Matrix w, int64_t n) {
  EmbeddingModel model;
  const int64_t v = static_cast<int64_t>(entries.size());
  model.vocab = Vocabulary::from_ordered_entries(std::move(entries), v, 1);
  model.config.dim = static_cast<int32_t>(n);
  model.W = std::move(w);
  model.Wprime = Matrix(v, n);
  return model;
}

void save_text(const EmbeddingModel& model, const std::filesystem::path& path) {
  auto out = open_out(path);
  std::string buf;
  buf += std::to_string(model.vocab_size());
  buf += ' ';
  buf += std::to_string(model.dim());
  buf += '\n';
  for (int32_t i = 0; i < model.vocab_size(); ++i) {
    buf += model.vocab.at(i).token;
    for (const double x : model.W.row(i)) {
      buf += ' ';
      append_shortest(buf, x);
    }
    buf += '\n';
    out << buf;
    buf.clear();
  }
  if (!out) fail(path, "write failed");
}

EmbeddingModel load_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string header;
  if (!std::getline(in, header)) fail(path, "empty file");
  const auto [v, n] = parse_header(header, path);

  std::vector<VocabEntry> entries;
  entries.reserve(static_cast<size_t>(v));
  Matrix w(v, n);
  for (int64_t i = 0; i < v; ++i) {
    std::string token;
    if (!(in >> token)) fail(path, "truncated: expected " + std::to_string(v) + " words, got " +
                                       std::to_string(i));
    auto row = w.row(static_cast<int32_t>(i));
    for (int64_t d = 0; d < n; ++d) {
      if (!(in >> row[static_cast<size_t>(d)])) {
        fail(path, "truncated vector for word \"" + token + "\"");
      }
    }
    entries.push_back({std::move(token), 1});
  }
  return assemble_interchange(std::move(entries), std::move(w), n);
}

void save_binary(const EmbeddingModel& model, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << model.vocab_size() << ' ' << model.dim() << '\n';
  std::vector<float> row32(static_cast<size_t>(model.dim()));
  for (int32_t i = 0; i < model.vocab_size(); ++i) {
    const auto& token = model.vocab.at(i).token;
    out.write(token.data(), static_cast<std::streamsize>(token.size()));
    out.put(' ');
    const auto row = model.W.row(i);
    for (size_t d = 0; d < row32.size(); ++d) row32[d] = static_cast<float>(row[d]);
    out.write(reinterpret_cast<const char*>(row32.data()),
              static_cast<std::streamsize>(row32.size() * sizeof(float)));
  }
  if (!out) fail(path, "write failed");
}

EmbeddingModel load_binary(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string header;
  if (!std::getline(in, header)) fail(path, "empty file");
  const auto [v, n] = parse_header(header, path);

  std::vector<VocabEntry> entries;
  entries.reserve(static_cast<size_t>(v));
  Matrix w(v, n);
  std::vector<float> row32(static_cast<size_t>(n));
  for (int64_t i = 0; i < v; ++i) {
    int c = in.get();
    while (c == '\n' || c == '\r' || c == ' ') c = in.get();
    std::string token;
    while (c != ' ' && c != std::ifstream::traits_type::eof()) {
      token.push_back(static_cast<char>(c));
      c = in.get();
    }
    if (token.empty()) {
      fail(path, "truncated: expected " + std::to_string(v) + " records, got " + std::to_string(i));
    }
    if (c == std::ifstream::traits_type::eof()) fail(path, "truncated record for \"" + token + "\"");
    in.read(reinterpret_cast<char*>(row32.data()),
            static_cast<std::streamsize>(row32.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(row32.size() * sizeof(float))) {
      fail(path, "truncated vector for word \"" + token + "\"");
    }
    auto row = w.row(static_cast<int32_t>(i));
    for (int64_t d = 0; d < n; ++d) row[static_cast<size_t>(d)] = row32[static_cast<size_t>(d)];
    entries.push_back({std::move(token), 1});
  }
  return assemble_interchange(std::move(entries), std::move(w), n);
}

void write_matrix(std::ofstream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
}

void read_matrix(std::ifstream& in, Matrix& m, const std::filesystem::path& path, const char* name) {
  const auto bytes = static_cast<std::streamsize>(m.data.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(m.data.data()), bytes);
  if (in.gcount() != bytes) fail(path, std::string("truncated ") + name + " payload");
}

void save_native(const EmbeddingModel& model, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kNativeMagic << '\n';
  nlohmann::json header = {{"vocab_size", model.vocab_size()},
                           {"dim", model.dim()},
                           {"total_tokens", model.vocab.total_tokens()},
                           {"min_count", model.vocab.min_count()},
                           {"config", model.config}};
  out << header.dump() << '\n';
  for (int32_t i = 0; i < model.vocab_size(); ++i) {
    out << model.vocab.at(i).token << '\t' << model.vocab.at(i).count << '\n';
  }
  write_matrix(out, model.W);
  write_matrix(out, model.Wprime);
  if (!out) fail(path, "write failed");
}

EmbeddingModel load_native(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != kNativeMagic) {
    fail(path, "not a native model file (bad magic)");
  }
  if (!std::getline(in, line)) fail(path, "missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(path, std::string("malformed header: ") + e.what());
  }

  EmbeddingModel model;
  int64_t v = 0;
  int64_t n = 0;
  int64_t total_tokens = 0;
  int32_t min_count = 1;
  try {
    v = header.at("vocab_size").get<int64_t>();
    n = header.at("dim").get<int64_t>();
    total_tokens = header.at("total_tokens").get<int64_t>();
    min_count = header.at("min_count").get<int32_t>();
    model.config = training_config_from_json(header.at("config"));
  } catch (const nlohmann::json::exception& e) {
    fail(path, std::string("malformed header: ") + e.what());
  }
  if (v < 1 || n < 1) fail(path, "malformed header: non-positive dimensions");
  if (n != model.config.dim) fail(path, "header dim disagrees with config dim");

  std::vector<VocabEntry> entries;
  entries.reserve(static_cast<size_t>(v));
  for (int64_t i = 0; i < v; ++i) {
    if (!std::getline(in, line)) fail(path, "truncated vocabulary");
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) fail(path, "malformed vocabulary row: \"" + line + "\"");
    int64_t count = 0;
    const char* first = line.data() + tab + 1;
    const char* last = line.data() + line.size();
    const auto res = std::from_chars(first, last, count);
    if (res.ec != std::errc() || res.ptr != last) {
      fail(path, "malformed vocabulary count in row: \"" + line + "\"");
    }
    entries.push_back({line.substr(0, tab), count});
  }
  model.vocab = Vocabulary::from_ordered_entries(std::move(entries), total_tokens, min_count);
  model.W = Matrix(v, n);
  model.Wprime = Matrix(v, n);
  read_matrix(in, model.W, path, "W");
  read_matrix(in, model.Wprime, path, "Wprime");
  return model;
}

}  // namespace

std::string to_string(ModelFormat format) {
  switch (format) {
    case ModelFormat::kText: return "text";
    case ModelFormat::kBinary: return "binary";
    case ModelFormat::kNative: return "native";
  }
  throw std::logic_error("unreachable");
}

ModelFormat model_format_from_string(const std::string& s) {
  if (s == "text") return ModelFormat::kText;
  if (s == "binary") return ModelFormat::kBinary;
  if (s == "native") return ModelFormat::kNative;
  throw std::invalid_argument("unknown model format: " + s);
}

void save_model(const EmbeddingModel& model, const std::filesystem::path& path, ModelFormat format) {
  switch (format) {
    case ModelFormat::kText: save_text(model, path); return;
    case ModelFormat::kBinary: save_binary(model, path); return;
    case ModelFormat::kNative: save_native(model, path); return;
  }
}

EmbeddingModel load_model(const std::filesystem::path& path, ModelFormat format) {
  switch (format) {
    case ModelFormat::kText: return load_text(path);
    case ModelFormat::kBinary: return load_binary(path);
    case ModelFormat::kNative: return load_native(path);
  }
  throw std::logic_error("unreachable");
}

}  // namespace dimvec
