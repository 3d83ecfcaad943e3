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

#include <filesystem>
#include <string>

#include "dimvec/embedding.hpp"

namespace dimvec {

// Model storage.
//
//  - text:   interchange format. "V N" header line, then one line per word:
//            the token followed by N space-separated values. Values are
//            printed with enough digits to round-trip exactly.
//  - binary: interchange format. Same "V N" header line, then per record the
//            token bytes, a single 0x20, and N little-endian float32 values.
//            Readers tolerate a newline or space before the next token;
//            writers emit none.
//  - native: full checkpoint. Versioned container holding the vocabulary
//            with counts, both weight matrices as raw float64, and the
//            training configuration. Round-trips bit-exactly.
//
// The interchange formats carry only input vectors, so models loaded from
// them have zeroed output weights, unit word counts, and a default
// configuration (with dim taken from the header). They support evaluation
// and dimension extraction but not resumed training.

enum class ModelFormat { kText, kBinary, kNative };

std::string to_string(ModelFormat format);
ModelFormat model_format_from_string(const std::string& s);

void save_model(const EmbeddingModel& model, const std::filesystem::path& path,
                ModelFormat format);

EmbeddingModel load_model(const std::filesystem::path& path, ModelFormat format);

}  // namespace dimvec
