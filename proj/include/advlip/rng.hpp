// advlip/rng.hpp

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

#ifndef ADVLIP_RNG_HPP_
#define ADVLIP_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <iterator>
#include <random>
#include <string_view>
#include <utility>

namespace advlip {

/// Purpose of a random stream. Streams with the same seed but different
/// purposes are statistically independent.
enum class RngStream : std::uint8_t { kInit = 1, kDropout = 2, kShuffle = 3, kSynth = 4 };

std::string_view RngStreamName(RngStream stream);

/// splitmix64 finalizer over the pair; used to derive child seeds.
std::uint64_t MixSeed(std::uint64_t a, std::uint64_t b);

/// Seeded generator. The integer and uniform sequences depend only on
/// (seed, stream, substream) and the call sequence; they do not go through
/// the standard library distributions, whose output is implementation-defined.
/// Single-owner: do not share one instance across threads.
class Rng {
 public:
  Rng(std::uint64_t seed, RngStream stream, std::uint64_t substream = 0);

  std::uint64_t NextU64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double Uniform();
  /// Standard normal (Marsaglia polar method).
  double Normal();
  /// Uniform integer on [0, n); unbiased.
  std::size_t UniformIndex(std::size_t n);
  bool Bernoulli(double p) { return Uniform() < p; }

  template <typename RandomIt>
  void Shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::size_t>(std::distance(first, last));
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = UniformIndex(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

  std::uint64_t seed() const { return seed_; }
  RngStream stream() const { return stream_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  RngStream stream_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace advlip

#endif  // ADVLIP_RNG_HPP_
