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

#include <json.hpp>

#include "dimvec/embedding.hpp"

namespace dimvec {

// ADL hooks so nlohmann::json converts TrainingConfig directly. Unknown keys
// in the input are rejected, so configs with typos fail loudly.
void to_json(nlohmann::json& j, const TrainingConfig& cfg);
void from_json(const nlohmann::json& j, TrainingConfig& cfg);

/// Parses cfg from j, starting from `base` for any keys j omits.
TrainingConfig training_config_from_json(const nlohmann::json& j, const TrainingConfig& base = {});

}  // namespace dimvec
