// src/synth.cpp

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

#include "advlip/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "advlip/error.hpp"

namespace advlip {

std::string_view ShiftLevelName(ShiftLevel level) {
  switch (level) {
    case ShiftLevel::kNone: return "none";
    case ShiftLevel::kLow: return "low";
    case ShiftLevel::kMedium: return "medium";
    case ShiftLevel::kHigh: return "high";
  }
  return "?";
}

ShiftLevel ParseShiftLevel(std::string_view name) {
  if (name == "none") return ShiftLevel::kNone;
  if (name == "low") return ShiftLevel::kLow;
  if (name == "medium") return ShiftLevel::kMedium;
  if (name == "high") return ShiftLevel::kHigh;
  throw ConfigError("shift_level", "expected none, low, medium or high, got '" +
                                       std::string(name) + "'");
}

DomainShift ShiftForLevel(ShiftLevel level, std::size_t domain, std::size_t n_domains) {
  double m = 0.0;
  switch (level) {
    case ShiftLevel::kNone: m = 0.0; break;
    case ShiftLevel::kLow: m = 1.0 / 3.0; break;
    case ShiftLevel::kMedium: m = 2.0 / 3.0; break;
    case ShiftLevel::kHigh: m = 1.0; break;
  }
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(domain) /
                       static_cast<double>(n_domains);
  const double sign = domain % 2 == 0 ? 1.0 : -1.0;
  DomainShift s;
  s.gain = 1.0 + 0.3 * m * sign;
  s.offset = 0.2 * m * sign;
  s.dx = 0.25 * m * std::cos(angle);
  s.dy = 0.25 * m * std::sin(angle);
  s.noise_std = 0.1;
  s.pattern_amplitude = 5.0 * m;
  return s;
}

void SynthConfig::Validate() const {
  if (n_domains < 2) throw ConfigError("n_domains", "need at least two domains");
  if (n_classes < 2) throw ConfigError("n_classes", "need at least two classes");
  if (t_min < 2) throw ConfigError("t_min", "sequences need at least two frames");
  if (t_max < t_min) throw ConfigError("t_max", "must be >= t_min");
  if (height == 0) throw ConfigError("height", "must be positive");
  if (width == 0) throw ConfigError("width", "must be positive");
  if (eval_per_class == 0) throw ConfigError("eval_per_class", "must be positive");
  if (seqs_per_class < 2 * eval_per_class + 1) {
    throw ConfigError("seqs_per_class", "must be at least 2 * eval_per_class + 1");
  }
  if (!domain_shifts.empty() && domain_shifts.size() != n_domains) {
    throw ConfigError("domain_shifts", "need one entry per domain");
  }
  for (const auto& s : domain_shifts) {
    if (!(s.noise_std >= 0.0)) throw ConfigError("domain_shifts.noise_std", "must be >= 0");
    if (!(s.pattern_amplitude >= 0.0)) {
      throw ConfigError("domain_shifts.pattern_amplitude", "must be >= 0");
    }
    if (!std::isfinite(s.gain) || !std::isfinite(s.offset) || !std::isfinite(s.dx) ||
        !std::isfinite(s.dy)) {
      throw ConfigError("domain_shifts", "values must be finite");
    }
  }
  if (!(path_radius >= 0.0)) throw ConfigError("path_radius", "must be >= 0");
  if (!(blob_sigma > 0.0)) throw ConfigError("blob_sigma", "must be positive");
  if (!(radius_jitter >= 0.0)) throw ConfigError("radius_jitter", "must be >= 0");
  if (!(angle_jitter_deg >= 0.0)) throw ConfigError("angle_jitter_deg", "must be >= 0");
  if (!(position_jitter >= 0.0)) throw ConfigError("position_jitter", "must be >= 0");
  if (!(phase_jitter >= 0.0)) throw ConfigError("phase_jitter", "must be >= 0");
  if (!(pattern_smoothness > 0.0)) throw ConfigError("pattern_smoothness", "must be positive");
}

std::vector<DomainShift> SynthConfig::ResolvedShifts() const {
  if (!domain_shifts.empty()) return domain_shifts;
  std::vector<DomainShift> out;
  for (std::size_t d = 0; d < n_domains; ++d) out.push_back(ShiftForLevel(shift_level, d, n_domains));
  return out;
}

namespace {

// Gaussian blur with wrap-around boundaries, separable.
std::vector<double> BlurWrap(const std::vector<double>& img, std::size_t h, std::size_t w,
                             double sigma) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    total += kernel[k + radius];
  }
  for (double& k : kernel) k /= total;
  auto wrap = [](long i, std::size_t n) {
    const long m = static_cast<long>(n);
    return static_cast<std::size_t>(((i % m) + m) % m);
  };
  std::vector<double> tmp(h * w, 0.0), out(h * w, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * img[y * w + wrap(static_cast<long>(x) + k, w)];
      }
      tmp[y * w + x] = acc;
    }
  }
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * tmp[wrap(static_cast<long>(y) + k, h) * w + x];
      }
      out[y * w + x] = acc;
    }
  }
  return out;
}

// Smooth random fields scaled to unit peak magnitude.
std::vector<std::vector<double>> MakePatterns(const SynthConfig& c, Rng& rng) {
  std::vector<std::vector<double>> patterns;
  for (std::size_t k = 0; k < c.pattern_count; ++k) {
    std::vector<double> noise(c.height * c.width);
    for (double& v : noise) v = rng.Normal();
    auto smooth = BlurWrap(noise, c.height, c.width, c.pattern_smoothness);
    double peak = 0.0;
    for (double v : smooth) peak = std::max(peak, std::abs(v));
    if (peak > 0.0) {
      for (double& v : smooth) v /= peak;
    }
    patterns.push_back(std::move(smooth));
  }
  return patterns;
}

}  // namespace

Dataset GenerateSynthetic(const SynthConfig& c) {
  c.Validate();
  const auto shifts = c.ResolvedShifts();
  Dataset ds;
  ds.height = c.height;
  ds.width = c.width;
  ds.num_classes = c.n_classes;
  const double pi = std::numbers::pi;
  const std::size_t pixels = c.height * c.width;

  for (std::size_t d = 0; d < c.n_domains; ++d) {
    const DomainShift& shift = shifts[d];
    Rng pattern_rng(c.seed, RngStream::kSynth, 1000 + d);
    const auto patterns = MakePatterns(c, pattern_rng);
    Rng rng(c.seed, RngStream::kSynth, d);
    std::vector<double> frame(pixels);
    const std::size_t first = ds.sequences.size();

    for (std::size_t k = 0; k < c.n_classes; ++k) {
      const double base_angle = 2.0 * pi * static_cast<double>(k) / static_cast<double>(c.n_classes);
      for (std::size_t s = 0; s < c.seqs_per_class; ++s) {
        const std::size_t steps = c.t_min + rng.UniformIndex(c.t_max - c.t_min + 1);
        const double angle = base_angle + c.angle_jitter_deg * pi / 180.0 * rng.Normal();
        const double radius = c.path_radius * (1.0 + c.radius_jitter * rng.Normal());
        const double phase = c.phase_jitter * (2.0 * rng.Uniform() - 1.0);
        const double jx = c.position_jitter * rng.Normal();
        const double jy = c.position_jitter * rng.Normal();
        const double sigma = c.blob_sigma * (1.0 + 0.1 * rng.Normal());

        FrameSequence seq;
        seq.id = "d" + std::to_string(d) + "_c" + std::to_string(k) + "_" + std::to_string(s);
        seq.speaker_id = static_cast<int>(d);
        seq.word_label = static_cast<int>(k);
        seq.frames = Tensor({steps, c.height, c.width});
        for (std::size_t t = 0; t < steps; ++t) {
          const double u = static_cast<double>(t) / static_cast<double>(steps - 1) * 2.0 - 1.0 + phase;
          const double cx = c.width / 2.0 - 0.5 + u * radius * std::cos(angle) + jx + shift.dx;
          const double cy = c.height / 2.0 - 0.5 + u * radius * std::sin(angle) + jy + shift.dy;
          for (std::size_t y = 0; y < c.height; ++y) {
            for (std::size_t x = 0; x < c.width; ++x) {
              const double ddx = static_cast<double>(x) - cx, ddy = static_cast<double>(y) - cy;
              frame[y * c.width + x] = std::exp(-(ddx * ddx + ddy * ddy) / (2.0 * sigma * sigma));
            }
          }
          if (shift.pattern_amplitude > 0.0) {
            for (const auto& p : patterns) {
              const double a = shift.pattern_amplitude * rng.Normal();
              for (std::size_t i = 0; i < pixels; ++i) frame[i] += a * p[i];
            }
          }
          auto dst = seq.frames.row(t);
          for (std::size_t i = 0; i < pixels; ++i) {
            double v = shift.offset + shift.gain * frame[i];
            if (shift.noise_std > 0.0) v += shift.noise_std * rng.Normal();
            dst[i] = static_cast<float>(v);
          }
        }
        ds.sequences.push_back(std::move(seq));
      }
    }

    std::vector<FrameSequence*> own;
    for (std::size_t i = first; i < ds.sequences.size(); ++i) own.push_back(&ds.sequences[i]);
    Rng split_rng(c.seed, RngStream::kSynth, 2000 + d);
    SplitSpeaker(own, c.eval_per_class, split_rng);
  }
  return ds;
}

}  // namespace advlip
