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

#include "dimvec/report.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace dimvec {

uint64_t fnv1a64(const void* data, size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

uint64_t fnv1a64_file(const std::filesystem::path& path) {
  // ifstream on a directory opens but never reads, which would silently
  // yield the empty-input hash; reject it so callers cannot mistake that
  // constant for a content digest.
  if (std::filesystem::is_directory(path)) {
    throw std::runtime_error("cannot digest a directory as a file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  uint64_t hash = 0xcbf29ce484222325ULL;
  std::vector<char> buffer(1 << 16);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    const auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buffer[static_cast<size_t>(i)]);
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

namespace {

// Digest of a directory's immediate regular files: each file's name and
// content digest folded in sorted path order, mirroring the one-level view
// the document loaders take. Equal digests imply identical file sets.
uint64_t fnv1a64_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::string view;
  for (const auto& file : files) {
    view += file.filename().generic_string();
    view += '\0';
    view += to_hex(fnv1a64_file(file));
    view += '\n';
  }
  return fnv1a64(view.data(), view.size());
}

}  // namespace

std::string to_hex(uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[value & 0xF];
    value >>= 4;
  }
  return out;
}

nlohmann::json input_digest(const std::filesystem::path& path) {
  const uint64_t hash =
      std::filesystem::is_directory(path) ? fnv1a64_dir(path) : fnv1a64_file(path);
  return {{"path", path.string()}, {"fnv1a64", to_hex(hash)}};
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": malformed JSON: " + e.what());
  }
  return j;
}

}  // namespace dimvec
