// src/checkpoint.cpp

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

#include <fstream>

#include "advlip/binary_io.hpp"
#include "advlip/config_json.hpp"
#include "advlip/error.hpp"
#include "advlip/model.hpp"

namespace advlip {

namespace {

constexpr char kCheckpointMagic[] = "ADVCKPT1";
constexpr std::uint32_t kMaxNameLength = 1u << 12;
constexpr std::uint32_t kMaxConfigLength = 1u << 20;

}  // namespace

void WriteCheckpoint(std::ostream& os, const Model<float>& model) {
  os.write(kCheckpointMagic, 8);
  // nlohmann's dump() sorts object keys, which makes the text canonical.
  const std::string config = ToJson(model.config()).dump();
  binary::WriteLe<std::uint32_t>(os, static_cast<std::uint32_t>(config.size()));
  os.write(config.data(), static_cast<std::streamsize>(config.size()));
  const auto& params = model.parameters();
  binary::WriteLe<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i : params.SortedOrder()) {
    const std::string& name = params.name(i);
    binary::WriteLe<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    WriteTensor(os, params[i]);
  }
}

Model<float> ReadCheckpoint(std::istream& is) {
  binary::ExpectMagic(is, kCheckpointMagic);
  const auto config_len = binary::ReadLe<std::uint32_t>(is, "checkpoint config length");
  if (config_len > kMaxConfigLength) {
    throw DataError(DataError::Kind::kMalformed, "checkpoint config length is implausible");
  }
  std::string config_text(config_len, '\0');
  if (!is.read(config_text.data(), config_len)) {
    throw DataError(DataError::Kind::kTruncated, "checkpoint ends inside the config block");
  }
  ModelConfig config;
  try {
    config = ModelConfigFromJson(Json::parse(config_text));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataError::Kind::kMalformed, std::string("checkpoint config: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(DataError::Kind::kMalformed, std::string("checkpoint config: ") + e.what());
  }
  const auto count = binary::ReadLe<std::uint32_t>(is, "checkpoint tensor count");
  ParameterSet<float> params;
  std::string previous;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = binary::ReadLe<std::uint32_t>(is, "checkpoint tensor name length");
    if (name_len == 0 || name_len > kMaxNameLength) {
      throw DataError(DataError::Kind::kMalformed, "checkpoint tensor name length is implausible");
    }
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) {
      throw DataError(DataError::Kind::kTruncated, "checkpoint ends inside a tensor name");
    }
    if (k > 0 && !(previous < name)) {
      throw DataError(DataError::Kind::kMalformed, "checkpoint tensors are not in sorted order");
    }
    previous = name;
    params.Add(name, ReadTensor(is));
  }
  return Model<float>::FromParameters(config, std::move(params));
}

void SaveCheckpoint(const Model<float>& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataError::Kind::kIo, "cannot write " + path.string());
  WriteCheckpoint(out, model);
  out.flush();
  if (!out) throw DataError(DataError::Kind::kIo, "failed writing " + path.string());
}

Model<float> LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataError::Kind::kIo, "cannot open " + path.string());
  return ReadCheckpoint(in);
}

}  // namespace advlip
