// src/config_json.cpp

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

#include "advlip/config_json.hpp"

#include <fstream>

namespace advlip {

JsonFields::JsonFields(const Json& object, std::string context)
    : object_(object), context_(std::move(context)) {
  if (!object_.is_object()) throw ConfigError(context_, "expected a JSON object");
}

const Json* JsonFields::Lookup(const char* key) {
  seen_.insert(key);
  const auto it = object_.find(key);
  return it == object_.end() ? nullptr : &*it;
}

std::string JsonFields::Qualified(const char* key) const {
  return context_.empty() ? std::string(key) : context_ + "." + key;
}

void JsonFields::Finish() const {
  for (const auto& [key, value] : object_.items()) {
    if (!seen_.count(key)) throw ConfigError(Qualified(key.c_str()), "unknown field");
  }
}

Json ToJson(const ModelConfig& c) {
  return Json{{"input_height", c.input_height},
              {"input_width", c.input_width},
              {"trunk_widths", c.trunk_widths},
              {"dropout_ratio", c.dropout_ratio},
              {"lstm_units", c.lstm_units},
              {"word_classes", c.word_classes},
              {"adv_attach_index", c.adv_attach_index},
              {"adv_widths", c.adv_widths},
              {"adv_domains", c.adv_domains},
              {"init_stddev", c.init_stddev},
              {"lstm_forget_bias", c.lstm_forget_bias}};
}

ModelConfig ModelConfigFromJson(const Json& j) {
  ModelConfig c;
  JsonFields f(j, "model");
  f.Get("input_height", c.input_height);
  f.Get("input_width", c.input_width);
  f.Get("trunk_widths", c.trunk_widths);
  f.Get("dropout_ratio", c.dropout_ratio);
  f.Get("lstm_units", c.lstm_units);
  f.Get("word_classes", c.word_classes);
  f.Get("adv_attach_index", c.adv_attach_index);
  f.Get("adv_widths", c.adv_widths);
  f.Get("adv_domains", c.adv_domains);
  f.Get("init_stddev", c.init_stddev);
  f.Get("lstm_forget_bias", c.lstm_forget_bias);
  f.Finish();
  c.Validate();
  return c;
}

Json ToJson(const TrainConfig& c) {
  return Json{{"mode", TrainModeName(c.mode)},
              {"learning_rate", c.learning_rate},
              {"momentum", c.momentum},
              {"batch_source", c.batch_source},
              {"batch_target", c.batch_target},
              {"adv_step", c.adv_step},
              {"adv_epoch_interval", c.adv_epoch_interval},
              {"adv_max", c.adv_max},
              {"patience", c.patience},
              {"max_epochs", c.max_epochs},
              {"seed", c.seed},
              {"target_pool_limit",
               c.target_pool_limit ? Json(*c.target_pool_limit) : Json(nullptr)}};
}

TrainConfig TrainConfigFromJson(const Json& j, TrainConfig c) {
  JsonFields f(j, "train");
  std::string mode(TrainModeName(c.mode));
  f.Get("mode", mode);
  c.mode = ParseTrainMode(mode);
  f.Get("learning_rate", c.learning_rate);
  f.Get("momentum", c.momentum);
  f.Get("batch_source", c.batch_source);
  f.Get("batch_target", c.batch_target);
  f.Get("adv_step", c.adv_step);
  f.Get("adv_epoch_interval", c.adv_epoch_interval);
  f.Get("adv_max", c.adv_max);
  f.Get("patience", c.patience);
  f.Get("max_epochs", c.max_epochs);
  f.Get("seed", c.seed);
  f.GetOptional("target_pool_limit", c.target_pool_limit);
  f.Finish();
  c.Validate();
  return c;
}

namespace {

Json ToJson(const DomainShift& s) {
  return Json{{"gain", s.gain},           {"offset", s.offset},       {"dx", s.dx},
              {"dy", s.dy},               {"noise_std", s.noise_std},
              {"pattern_amplitude", s.pattern_amplitude}};
}

DomainShift DomainShiftFromJson(const Json& j) {
  DomainShift s;
  JsonFields f(j, "domain_shifts");
  f.Get("gain", s.gain);
  f.Get("offset", s.offset);
  f.Get("dx", s.dx);
  f.Get("dy", s.dy);
  f.Get("noise_std", s.noise_std);
  f.Get("pattern_amplitude", s.pattern_amplitude);
  f.Finish();
  return s;
}

}  // namespace

Json ToJson(const SynthConfig& c) {
  Json shifts = Json::array();
  for (const auto& s : c.domain_shifts) shifts.push_back(ToJson(s));
  return Json{{"n_domains", c.n_domains},
              {"n_classes", c.n_classes},
              {"seqs_per_class", c.seqs_per_class},
              {"t_min", c.t_min},
              {"t_max", c.t_max},
              {"height", c.height},
              {"width", c.width},
              {"eval_per_class", c.eval_per_class},
              {"shift_level", ShiftLevelName(c.shift_level)},
              {"domain_shifts", shifts},
              {"path_radius", c.path_radius},
              {"blob_sigma", c.blob_sigma},
              {"angle_jitter_deg", c.angle_jitter_deg},
              {"radius_jitter", c.radius_jitter},
              {"position_jitter", c.position_jitter},
              {"phase_jitter", c.phase_jitter},
              {"pattern_count", c.pattern_count},
              {"pattern_smoothness", c.pattern_smoothness},
              {"seed", c.seed}};
}

SynthConfig SynthConfigFromJson(const Json& j) {
  SynthConfig c;
  JsonFields f(j, "synth");
  f.Get("n_domains", c.n_domains);
  f.Get("n_classes", c.n_classes);
  f.Get("seqs_per_class", c.seqs_per_class);
  f.Get("t_min", c.t_min);
  f.Get("t_max", c.t_max);
  f.Get("height", c.height);
  f.Get("width", c.width);
  f.Get("eval_per_class", c.eval_per_class);
  std::string level(ShiftLevelName(c.shift_level));
  f.Get("shift_level", level);
  c.shift_level = ParseShiftLevel(level);
  if (const Json* shifts = f.Lookup("domain_shifts")) {
    if (!shifts->is_array()) throw ConfigError("synth.domain_shifts", "expected an array");
    for (const Json& s : *shifts) c.domain_shifts.push_back(DomainShiftFromJson(s));
  }
  f.Get("path_radius", c.path_radius);
  f.Get("blob_sigma", c.blob_sigma);
  f.Get("angle_jitter_deg", c.angle_jitter_deg);
  f.Get("radius_jitter", c.radius_jitter);
  f.Get("position_jitter", c.position_jitter);
  f.Get("phase_jitter", c.phase_jitter);
  f.Get("pattern_count", c.pattern_count);
  f.Get("pattern_smoothness", c.pattern_smoothness);
  f.Get("seed", c.seed);
  f.Finish();
  c.Validate();
  return c;
}

Json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

void WriteJsonFile(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataError::Kind::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError(DataError::Kind::kIo, "failed writing " + path.string());
}

}  // namespace advlip
