// src/data.cpp

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

#include "advlip/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "advlip/binary_io.hpp"
#include "advlip/config_json.hpp"
#include "advlip/error.hpp"

namespace advlip {

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ConfigError("split", "expected train, val or test, got '" + std::string(name) + "'");
}

std::vector<int> Dataset::Speakers() const {
  std::set<int> ids;
  for (const auto& s : sequences) ids.insert(s.speaker_id);
  return {ids.begin(), ids.end()};
}

std::vector<const FrameSequence*> Dataset::Select(int speaker_id, Split split) const {
  std::vector<const FrameSequence*> out;
  for (const auto& s : sequences) {
    if (s.speaker_id == speaker_id && s.split == split) out.push_back(&s);
  }
  return out;
}

std::vector<const FrameSequence*> Dataset::Select(int speaker_id) const {
  std::vector<const FrameSequence*> out;
  for (const auto& s : sequences) {
    if (s.speaker_id == speaker_id) out.push_back(&s);
  }
  return out;
}

void Dataset::Validate() const {
  if (height == 0 || width == 0) throw DataError(DataError::Kind::kMalformed, "frame size is zero");
  if (num_classes < 2) throw DataError(DataError::Kind::kMalformed, "need at least two classes");
  std::set<std::string> ids;
  for (const auto& s : sequences) {
    if (!ids.insert(s.id).second) {
      throw DataError(DataError::Kind::kMalformed, "duplicate sequence id " + s.id);
    }
    if (s.frames.rank() != 3 || s.frames.dim(1) != height || s.frames.dim(2) != width ||
        s.length() == 0) {
      throw DataError(DataError::Kind::kMalformed,
                      "sequence " + s.id + " has shape " + ShapeToString(s.frames.shape()));
    }
    if (s.word_label && (*s.word_label < 0 || *s.word_label >= static_cast<int>(num_classes))) {
      throw DataError(DataError::Kind::kMalformed, "sequence " + s.id + " has label out of range");
    }
  }
}

// ---------------------------------------------------------------- split

SplitCounts SplitSpeaker(std::vector<FrameSequence*> sequences, std::size_t per_word, Rng& rng) {
  if (per_word == 0) throw ConfigError("per_word", "must be positive");
  std::map<int, std::vector<FrameSequence*>> by_word;
  for (FrameSequence* s : sequences) {
    if (!s->word_label) {
      throw DataError(DataError::Kind::kMalformed, "cannot split unlabeled sequence " + s->id);
    }
    by_word[*s->word_label].push_back(s);
  }
  SplitCounts counts;
  for (auto& [word, group] : by_word) {
    if (group.size() < 2 * per_word + 1) {
      throw DataError(DataError::Kind::kInsufficient,
                      "word " + std::to_string(word) + " has " + std::to_string(group.size()) +
                          " sequences, need at least " + std::to_string(2 * per_word + 1));
    }
    rng.Shuffle(group.begin(), group.end());
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (i < per_word) {
        group[i]->split = Split::kVal;
        ++counts.val;
      } else if (i < 2 * per_word) {
        group[i]->split = Split::kTest;
        ++counts.test;
      } else {
        group[i]->split = Split::kTrain;
        ++counts.train;
      }
    }
  }
  return counts;
}

// ---------------------------------------------------------------- normalization

Tensor ContrastNormalize(const Tensor& frames) {
  Tensor out(frames.shape());
  const std::size_t steps = frames.dim(0);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto in = frames.row(t);
    const auto [lo, hi] = std::minmax_element(in.begin(), in.end());
    const float min = *lo, range = *hi - *lo;
    auto dst = out.row(t);
    if (!(range > 0.0f)) continue;  // flat frame stays zero
    for (std::size_t i = 0; i < in.size(); ++i) dst[i] = (in[i] - min) / range;
  }
  return out;
}

Normalizer Normalizer::Fit(const std::vector<const FrameSequence*>& train) {
  if (train.empty()) throw DataError(DataError::Kind::kInsufficient, "no training frames to fit");
  Normalizer n;
  n.speaker_id = train.front()->speaker_id;
  const Shape frame_shape(train.front()->frames.shape().begin() + 1,
                          train.front()->frames.shape().end());
  std::size_t pixels = 1;
  for (std::size_t d : frame_shape) pixels *= d;
  std::vector<double> sum(pixels, 0.0), sum_sq(pixels, 0.0);
  std::size_t count = 0;
  for (const FrameSequence* s : train) {
    if (s->split != Split::kTrain) {
      throw DataError(DataError::Kind::kMalformed,
                      "normalizer fit received " + std::string(SplitName(s->split)) +
                          " sequence " + s->id);
    }
    if (s->speaker_id != n.speaker_id) {
      throw DataError(DataError::Kind::kMalformed, "normalizer fit mixes speakers");
    }
    if (s->frames.size() != s->length() * pixels) {
      throw ShapeError("normalizer fit: inconsistent frame shapes");
    }
    const Tensor contrast = ContrastNormalize(s->frames);
    for (std::size_t t = 0; t < s->length(); ++t) {
      const auto f = contrast.row(t);
      for (std::size_t i = 0; i < pixels; ++i) {
        sum[i] += f[i];
        sum_sq[i] += static_cast<double>(f[i]) * f[i];
      }
    }
    count += s->length();
  }
  n.mean = Tensor(frame_shape);
  n.std = Tensor(frame_shape);
  for (std::size_t i = 0; i < pixels; ++i) {
    const double mean = sum[i] / static_cast<double>(count);
    const double var = std::max(0.0, sum_sq[i] / static_cast<double>(count) - mean * mean);
    n.mean[i] = static_cast<float>(mean);
    n.std[i] = std::max(static_cast<float>(std::sqrt(var)), kStdFloor);
  }
  return n;
}

Tensor Normalizer::Apply(const Tensor& frames) const {
  if (frames.empty() || frames.size() != frames.dim(0) * mean.size()) {
    throw ShapeError("normalizer: frames " + ShapeToString(frames.shape()) +
                     " do not match pixel statistics " + ShapeToString(mean.shape()));
  }
  Tensor out = ContrastNormalize(frames);
  const std::size_t pixels = mean.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t p = i % pixels;
    out[i] = (out[i] - mean[p]) / std[p];
  }
  return out;
}

std::map<int, Normalizer> NormalizePerSpeaker(Dataset& dataset) {
  if (dataset.normalization != NormalizationState::kRaw) {
    throw ConfigError("normalization", "dataset is already normalized");
  }
  std::map<int, Normalizer> fitted;
  for (int speaker : dataset.Speakers()) {
    fitted.emplace(speaker, Normalizer::Fit(dataset.Select(speaker, Split::kTrain)));
  }
  for (auto& s : dataset.sequences) s.frames = fitted.at(s.speaker_id).Apply(s.frames);
  dataset.normalization = NormalizationState::kPerSpeaker;
  return fitted;
}

// ---------------------------------------------------------------- target view

TargetPool::TargetPool(std::vector<const FrameSequence*> sequences) {
  for (const FrameSequence* s : sequences) {
    if (speaker_id_ < 0) speaker_id_ = s->speaker_id;
    if (s->speaker_id != speaker_id_) {
      throw DataError(DataError::Kind::kMalformed, "target pool mixes speakers");
    }
    frames_.push_back(&s->frames);
    labels_.push_back(s->word_label);
  }
}

TargetPool TargetPool::Limited(std::size_t limit, Rng& rng) const {
  std::vector<std::size_t> order(size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.Shuffle(order.begin(), order.end());
  order.resize(std::min(limit, order.size()));
  TargetPool out;
  out.speaker_id_ = speaker_id_;
  out.label_reads_ = label_reads_;
  for (std::size_t i : order) {
    out.frames_.push_back(frames_[i]);
    out.labels_.push_back(labels_[i]);
  }
  return out;
}

std::optional<int> TargetPool::word_label(std::size_t i) const {
  ++*label_reads_;
  return labels_.at(i);
}

// ---------------------------------------------------------------- container

namespace {

constexpr char kFramesMagic[] = "LIPSEQD1";
constexpr std::size_t kMagicBytes = 8;

std::string NormalizationName(NormalizationState s) {
  return s == NormalizationState::kRaw ? "raw" : "per_speaker";
}

[[noreturn]] void Malformed(const std::string& what) {
  throw DataError(DataError::Kind::kMalformed, "manifest: " + what);
}

std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataError::Kind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void WriteDataset(const Dataset& dataset, const std::filesystem::path& dir) {
  dataset.Validate();
  std::filesystem::create_directories(dir);
  const std::size_t frame_floats = dataset.height * dataset.width;

  std::ofstream blob(dir / "frames.bin", std::ios::binary);
  if (!blob) throw DataError(DataError::Kind::kIo, "cannot write " + (dir / "frames.bin").string());
  blob.write(kFramesMagic, kMagicBytes);
  std::uint64_t offset = kMagicBytes;

  Json entries = Json::array();
  for (const auto& s : dataset.sequences) {
    entries.push_back({{"id", s.id},
                       {"speaker_id", s.speaker_id},
                       {"word_label", s.word_label ? Json(*s.word_label) : Json(nullptr)},
                       {"split", SplitName(s.split)},
                       {"T", s.length()},
                       {"offset", offset}});
    for (float v : s.frames.values()) binary::WriteF32(blob, v);
    offset += static_cast<std::uint64_t>(s.length()) * frame_floats * sizeof(float);
  }
  blob.flush();
  if (!blob) throw DataError(DataError::Kind::kIo, "failed writing frames.bin");

  Json manifest{{"format", "advlip-dataset"},
                {"version", 1},
                {"height", dataset.height},
                {"width", dataset.width},
                {"num_classes", dataset.num_classes},
                {"normalization",
                 {{"state", NormalizationName(dataset.normalization)},
                  {"contrast", "per_frame_min_max"},
                  {"z", "per_pixel"},
                  {"std_floor", 1e-6}}},
                {"frames_file", "frames.bin"},
                {"frames_bytes", offset},
                {"sequences", std::move(entries)}};
  WriteJsonFile(dir / "manifest.json", manifest);
}

Dataset ReadDataset(const std::filesystem::path& dir) {
  Json manifest;
  {
    const std::string text = ReadFileBytes(dir / "manifest.json");
    try {
      manifest = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      Malformed(std::string("invalid JSON: ") + e.what());
    }
  }
  Dataset ds;
  std::uint64_t frames_bytes = 0;
  std::string frames_file;
  struct Entry {
    std::uint64_t offset;
    std::size_t steps;
  };
  std::vector<Entry> entries;
  try {
    if (manifest.at("format") != "advlip-dataset") Malformed("unknown format tag");
    ds.height = manifest.at("height").get<std::size_t>();
    ds.width = manifest.at("width").get<std::size_t>();
    ds.num_classes = manifest.at("num_classes").get<std::size_t>();
    const std::string state = manifest.at("normalization").at("state").get<std::string>();
    if (state == "raw") {
      ds.normalization = NormalizationState::kRaw;
    } else if (state == "per_speaker") {
      ds.normalization = NormalizationState::kPerSpeaker;
    } else {
      Malformed("unknown normalization state " + state);
    }
    frames_file = manifest.at("frames_file").get<std::string>();
    frames_bytes = manifest.at("frames_bytes").get<std::uint64_t>();
    for (const Json& e : manifest.at("sequences")) {
      FrameSequence s;
      s.id = e.at("id").get<std::string>();
      s.speaker_id = e.at("speaker_id").get<int>();
      if (!e.at("word_label").is_null()) s.word_label = e.at("word_label").get<int>();
      try {
        s.split = ParseSplit(e.at("split").get<std::string>());
      } catch (const ConfigError& err) {
        Malformed(err.what());
      }
      entries.push_back({e.at("offset").get<std::uint64_t>(), e.at("T").get<std::size_t>()});
      ds.sequences.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    Malformed(e.what());
  }
  if (frames_file.find('/') != std::string::npos || frames_file.empty()) {
    Malformed("frames_file must be a plain file name");
  }

  const std::string blob = ReadFileBytes(dir / frames_file);
  if (blob.size() < kMagicBytes || blob.compare(0, kMagicBytes, kFramesMagic, kMagicBytes) != 0) {
    throw DataError(DataError::Kind::kBadMagic, frames_file + ": bad magic");
  }
  if (blob.size() < frames_bytes) {
    throw DataError(DataError::Kind::kTruncated,
                    frames_file + " is truncated: " + std::to_string(blob.size()) + " of " +
                        std::to_string(frames_bytes) + " bytes");
  }
  if (blob.size() != frames_bytes) {
    throw DataError(DataError::Kind::kIntegrity,
                    frames_file + " size " + std::to_string(blob.size()) +
                        " disagrees with manifest (" + std::to_string(frames_bytes) + ")");
  }
  const std::uint64_t frame_bytes = static_cast<std::uint64_t>(ds.height) * ds.width * sizeof(float);
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Entry& e = entries[k];
    FrameSequence& s = ds.sequences[k];
    if (e.steps == 0) throw DataError(DataError::Kind::kIntegrity, s.id + ": zero frames");
    const std::uint64_t len = frame_bytes * e.steps;
    if (e.offset < kMagicBytes || e.offset > frames_bytes || len > frames_bytes - e.offset) {
      throw DataError(DataError::Kind::kIntegrity,
                      s.id + ": block [" + std::to_string(e.offset) + ", +" + std::to_string(len) +
                          ") lies outside " + frames_file);
    }
    s.frames = Tensor({e.steps, ds.height, ds.width});
    for (std::size_t i = 0; i < s.frames.size(); ++i) {
      s.frames[i] = binary::DecodeF32(bytes + e.offset + 4 * i);
    }
  }
  ds.Validate();
  return ds;
}

std::uint64_t Fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ull;
  }
  return state;
}

std::string HashDataset(const std::filesystem::path& dir) {
  std::uint64_t h = Fnv1a64(ReadFileBytes(dir / "manifest.json"));
  h = Fnv1a64(ReadFileBytes(dir / "frames.bin"), h);
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

}  // namespace advlip
