// advlip/data.hpp

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

#ifndef ADVLIP_DATA_HPP_
#define ADVLIP_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advlip/rng.hpp"
#include "advlip/tensor.hpp"

namespace advlip {

enum class Split { kTrain, kVal, kTest };

std::string_view SplitName(Split split);
/// Accepts "train", "val", "test"; throws ConfigError otherwise.
Split ParseSplit(std::string_view name);

/// One word utterance.
struct FrameSequence {
  std::string id;
  Tensor frames;  // [T x H x W]
  std::optional<int> word_label;
  int speaker_id = 0;
  Split split = Split::kTrain;

  std::size_t length() const { return frames.empty() ? 0 : frames.dim(0); }
  bool operator==(const FrameSequence&) const = default;
};

/// Which normalization the stored frames went through.
enum class NormalizationState { kRaw, kPerSpeaker };

struct Dataset {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t num_classes = 0;
  NormalizationState normalization = NormalizationState::kRaw;
  std::vector<FrameSequence> sequences;

  /// Sorted, unique.
  std::vector<int> Speakers() const;
  std::vector<const FrameSequence*> Select(int speaker_id, Split split) const;
  std::vector<const FrameSequence*> Select(int speaker_id) const;
  /// Shape and label checks; throws DataError.
  void Validate() const;

  bool operator==(const Dataset&) const = default;
};

// ---------------------------------------------------------------- split

struct SplitCounts {
  std::size_t train = 0, val = 0, test = 0;
};

/// Assigns the split of each sequence: `per_word` uniformly drawn sequences
/// of every word go to val, `per_word` more to test, the rest to train.
/// Every word needs at least 2 * per_word + 1 sequences.
SplitCounts SplitSpeaker(std::vector<FrameSequence*> sequences, std::size_t per_word, Rng& rng);

// ---------------------------------------------------------------- normalization

/// Lower bound on the per-pixel standard deviation.
inline constexpr float kStdFloor = 1e-6f;

/// Rescales each frame of [T x ...] to [0, 1] by its own min and max.
/// A constant frame becomes all zeros.
Tensor ContrastNormalize(const Tensor& frames);

/// Per-pixel z-normalization fitted on the contrast-normalized training
/// frames of one speaker.
struct Normalizer {
  int speaker_id = 0;
  Tensor mean;  // [H x W]
  Tensor std;   // [H x W], >= kStdFloor

  /// Throws DataError if `train` is empty, mixes speakers, or contains
  /// anything but training-split sequences.
  static Normalizer Fit(const std::vector<const FrameSequence*>& train);

  /// Contrast normalization followed by the per-pixel z transform.
  Tensor Apply(const Tensor& frames) const;
};

/// Fits one normalizer per speaker on its training split and rewrites every
/// sequence of that speaker in place.
std::map<int, Normalizer> NormalizePerSpeaker(Dataset& dataset);

// ---------------------------------------------------------------- target view

/// Label-stripped view of target-speaker sequences. Frames are freely
/// readable; the stored labels sit behind an accessor that counts reads so
/// tests can prove the trainer never looks at them.
class TargetPool {
 public:
  TargetPool() = default;
  explicit TargetPool(std::vector<const FrameSequence*> sequences);

  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const Tensor& frames(std::size_t i) const { return *frames_[i]; }
  int speaker_id() const { return speaker_id_; }

  /// First `limit` entries in a seeded random order.
  TargetPool Limited(std::size_t limit, Rng& rng) const;

  /// Counted; views derived through Limited() share the counter.
  std::optional<int> word_label(std::size_t i) const;
  std::size_t label_reads() const { return *label_reads_; }

 private:
  std::vector<const Tensor*> frames_;
  std::vector<std::optional<int>> labels_;
  int speaker_id_ = -1;
  std::shared_ptr<std::size_t> label_reads_ = std::make_shared<std::size_t>(0);
};

// ---------------------------------------------------------------- container

/// Directory with manifest.json and frames.bin ("LIPSEQD1" followed by
/// little-endian float32 frame blocks).
void WriteDataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset ReadDataset(const std::filesystem::path& dir);

/// FNV-1a 64 over manifest.json followed by frames.bin, as hex.
std::string HashDataset(const std::filesystem::path& dir);
std::uint64_t Fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ull);

}  // namespace advlip

#endif  // ADVLIP_DATA_HPP_
