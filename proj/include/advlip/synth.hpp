// advlip/synth.hpp

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

#ifndef ADVLIP_SYNTH_HPP_
#define ADVLIP_SYNTH_HPP_

#include <cstdint>
#include <string_view>
#include <vector>

#include "advlip/data.hpp"

namespace advlip {

/// How one domain distorts the shared class trajectories.
struct DomainShift {
  double gain = 1.0;    // intensity scale
  double offset = 0.0;  // intensity offset
  double dx = 0.0;      // fixed translation in pixels
  double dy = 0.0;
  double noise_std = 0.0;  // i.i.d. pixel noise
  // Per-frame random mixture of the domain's smooth background patterns.
  double pattern_amplitude = 0.0;

  bool operator==(const DomainShift&) const = default;
};

enum class ShiftLevel { kNone, kLow, kMedium, kHigh };

std::string_view ShiftLevelName(ShiftLevel level);
ShiftLevel ParseShiftLevel(std::string_view name);

/// Synthetic corpus: every class is a blob moving along its own straight
/// path through the frame centre; every domain applies its own intensity
/// transform, translation, pixel noise and structured background patterns.
struct SynthConfig {
  std::size_t n_domains = 2;
  std::size_t n_classes = 5;
  std::size_t seqs_per_class = 60;  // per domain
  std::size_t t_min = 6;
  std::size_t t_max = 12;
  std::size_t height = 20;
  std::size_t width = 20;
  // Validation and test sequences per class and domain.
  std::size_t eval_per_class = 5;
  ShiftLevel shift_level = ShiftLevel::kHigh;
  // Explicit per-domain shifts; when empty they follow from shift_level.
  std::vector<DomainShift> domain_shifts;

  double path_radius = 5.0;
  double blob_sigma = 2.0;
  double angle_jitter_deg = 0.0;
  double radius_jitter = 0.1;
  double position_jitter = 0.7;
  double phase_jitter = 0.15;
  std::size_t pattern_count = 3;
  double pattern_smoothness = 2.5;

  std::uint64_t seed = 1;

  /// Throws ConfigError naming the offending field.
  void Validate() const;
  /// domain_shifts if given, otherwise the level's shifts.
  std::vector<DomainShift> ResolvedShifts() const;
  bool operator==(const SynthConfig&) const = default;
};

/// Shift of domain `domain` out of `n_domains` at a given level. kNone gives
/// every domain the same parameters.
DomainShift ShiftForLevel(ShiftLevel level, std::size_t domain, std::size_t n_domains);

/// Raw (unnormalized) frames with labels, speaker ids and splits assigned.
Dataset GenerateSynthetic(const SynthConfig& config);

}  // namespace advlip

#endif  // ADVLIP_SYNTH_HPP_
