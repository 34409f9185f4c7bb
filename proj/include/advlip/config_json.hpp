// advlip/config_json.hpp

// Copyright 2026 The advlip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ADVLIP_CONFIG_JSON_HPP_
#define ADVLIP_CONFIG_JSON_HPP_

#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include "json.hpp"

#include "advlip/error.hpp"
#include "advlip/model.hpp"
#include "advlip/synth.hpp"
#include "advlip/training.hpp"

namespace advlip {

using Json = nlohmann::json;

/// Reads fields out of a JSON object, keeping defaults for absent keys.
/// Wrong types raise ConfigError naming the field; Finish() rejects keys
/// nobody asked for, which catches misspelled options.
class JsonFields {
 public:
  JsonFields(const Json& object, std::string context);

  template <typename V>
  void Get(const char* key, V& value) {
    const Json* v = Lookup(key);
    if (v == nullptr) return;
    try {
      value = v->get<V>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(Qualified(key), std::string("wrong type: ") + e.what());
    }
  }

  /// JSON null clears the value.
  template <typename V>
  void GetOptional(const char* key, std::optional<V>& value) {
    const Json* v = Lookup(key);
    if (v == nullptr) return;
    if (v->is_null()) {
      value.reset();
      return;
    }
    V inner{};
    Get(key, inner);
    value = inner;
  }

  const Json* Lookup(const char* key);
  std::string Qualified(const char* key) const;
  void Finish() const;

 private:
  const Json& object_;
  std::string context_;
  std::set<std::string> seen_;
};

// Conversions validate the result and reject unknown keys. Absent keys
// keep their defaults, so partial config files are fine.
Json ToJson(const ModelConfig& config);
ModelConfig ModelConfigFromJson(const Json& j);
Json ToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(const Json& j, TrainConfig base = {});
Json ToJson(const SynthConfig& config);
SynthConfig SynthConfigFromJson(const Json& j);

/// Parses a JSON file; syntax errors become ConfigError.
Json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const std::filesystem::path& path, const Json& j);

}  // namespace advlip

#endif  // ADVLIP_CONFIG_JSON_HPP_
