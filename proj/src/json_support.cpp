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

#include "dimvec/json_support.hpp"

#include <set>
#include <stdexcept>
#include <string>

namespace dimvec {

void to_json(nlohmann::json& j, const TrainingConfig& cfg) {
  j = nlohmann::json{{"dim", cfg.dim},
                     {"window", cfg.window},
                     {"architecture", to_string(cfg.architecture)},
                     {"loss", to_string(cfg.loss)},
                     {"negative", cfg.negative},
                     {"epochs", cfg.epochs},
                     {"lr_start", cfg.lr_start},
                     {"lr_end", cfg.lr_end},
                     {"subsample_t", cfg.subsample_t},
                     {"seed", cfg.seed},
                     {"unigram_exponent", cfg.unigram_exponent}};
}

TrainingConfig training_config_from_json(const nlohmann::json& j, const TrainingConfig& base) {
  static const std::set<std::string> known = {
      "dim",    "window", "architecture", "loss", "negative",         "epochs",
      "lr_start", "lr_end", "subsample_t",  "seed", "unigram_exponent"};
  if (!j.is_object()) throw std::invalid_argument("training config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) throw std::invalid_argument("unknown training config key: " + key);
  }
  TrainingConfig cfg = base;
  if (j.contains("dim")) cfg.dim = j.at("dim").get<int32_t>();
  if (j.contains("window")) cfg.window = j.at("window").get<int32_t>();
  if (j.contains("architecture")) {
    cfg.architecture = architecture_from_string(j.at("architecture").get<std::string>());
  }
  if (j.contains("loss")) cfg.loss = loss_from_string(j.at("loss").get<std::string>());
  if (j.contains("negative")) cfg.negative = j.at("negative").get<int32_t>();
  if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int32_t>();
  if (j.contains("lr_start")) cfg.lr_start = j.at("lr_start").get<double>();
  if (j.contains("lr_end")) cfg.lr_end = j.at("lr_end").get<double>();
  if (j.contains("subsample_t")) cfg.subsample_t = j.at("subsample_t").get<double>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
  if (j.contains("unigram_exponent")) {
    cfg.unigram_exponent = j.at("unigram_exponent").get<double>();
  }
  return cfg;
}

void from_json(const nlohmann::json& j, TrainingConfig& cfg) {
  cfg = training_config_from_json(j, TrainingConfig{});
}

}  // namespace dimvec
