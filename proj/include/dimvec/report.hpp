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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace dimvec {

inline constexpr const char* kToolVersion = "1.0.0";

/// FNV-1a 64-bit digest of a byte range.
uint64_t fnv1a64(const void* data, size_t size);

/// FNV-1a 64-bit digest of a file's bytes. Throws when unreadable or when
/// given a directory.
uint64_t fnv1a64_file(const std::filesystem::path& path);

std::string to_hex(uint64_t value);

/// {"path": <as given>, "fnv1a64": "<hex>"} — stamped into reports so two
/// runs can be compared by input content. A directory digests as its
/// immediate regular files (names and contents) in sorted order.
nlohmann::json input_digest(const std::filesystem::path& path);

/// Writes pretty-printed JSON with a trailing newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace dimvec
