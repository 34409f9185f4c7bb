// tests/test_data.cpp

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

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"

#include "advlip/data.hpp"
#include "advlip/error.hpp"
#include "advlip/synth.hpp"
#include "json.hpp"

using namespace advlip;
namespace fs = std::filesystem;

namespace {

std::vector<FrameSequence> Labelled(std::size_t words, std::size_t per_word) {
  std::vector<FrameSequence> out;
  for (std::size_t w = 0; w < words; ++w) {
    for (std::size_t i = 0; i < per_word; ++i) {
      FrameSequence s;
      s.id = std::to_string(w) + "_" + std::to_string(i);
      s.frames = Tensor({1, 1, 1});
      s.word_label = static_cast<int>(w);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<FrameSequence*> Pointers(std::vector<FrameSequence>& v) {
  std::vector<FrameSequence*> out;
  for (auto& s : v) out.push_back(&s);
  return out;
}

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("advlip_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void Spit(const fs::path& path, const std::string& bytes) {
  std::ofstream(path, std::ios::binary) << bytes;
}

DataError::Kind ReadKind(const fs::path& dir) {
  try {
    ReadDataset(dir);
  } catch (const DataError& e) {
    return e.kind();
  }
  FAIL("expected DataError");
  return DataError::Kind::kIo;
}

// Frozen nearest-centroid classifier on the time-averaged first and second
// half of each sequence.
struct Centroids {
  std::map<int, std::vector<double>> means;

  static std::vector<double> Features(const FrameSequence& s) {
    const std::size_t t = s.length(), hw = s.frames.size() / t;
    std::vector<double> f(2 * hw, 0.0);
    for (std::size_t k = 0; k < t; ++k) {
      const std::size_t half = 2 * k < t ? 0 : hw;
      for (std::size_t p = 0; p < hw; ++p) f[half + p] += s.frames[k * hw + p];
    }
    return f;
  }

  static Centroids Fit(const std::vector<const FrameSequence*>& train) {
    Centroids c;
    std::map<int, std::size_t> counts;
    for (const auto* s : train) {
      auto f = Features(*s);
      auto& m = c.means[*s->word_label];
      if (m.empty()) m.assign(f.size(), 0.0);
      for (std::size_t i = 0; i < f.size(); ++i) m[i] += f[i];
      ++counts[*s->word_label];
    }
    for (auto& [k, m] : c.means) {
      for (double& v : m) v /= static_cast<double>(counts[k]);
    }
    return c;
  }

  double Accuracy(const std::vector<const FrameSequence*>& seqs) const {
    std::size_t right = 0;
    for (const auto* s : seqs) {
      const auto f = Features(*s);
      int best = -1;
      double best_d = 0.0;
      for (const auto& [k, m] : means) {
        double d = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) d += (f[i] - m[i]) * (f[i] - m[i]);
        if (best < 0 || d < best_d) best = k, best_d = d;
      }
      right += best == *s->word_label;
    }
    return static_cast<double>(right) / static_cast<double>(seqs.size());
  }
};

double CrossDomainAccuracy(ShiftLevel level, std::uint64_t seed) {
  SynthConfig c;
  c.shift_level = level;
  c.seed = seed;
  Dataset ds = GenerateSynthetic(c);
  NormalizePerSpeaker(ds);
  return Centroids::Fit(ds.Select(0, Split::kTrain)).Accuracy(ds.Select(1));
}

}  // namespace

TEST_CASE("split names round trip") {
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) CHECK(ParseSplit(SplitName(s)) == s);
  CHECK_THROWS_AS(ParseSplit("dev"), ConfigError);
}

TEST_CASE("GRID-shaped split counts") {
  auto seqs = Labelled(51, 6000 / 51);
  // 6000 sequences over 51 words: 33 words with 118 samples, 18 with 117.
  seqs.clear();
  for (std::size_t w = 0; w < 51; ++w) {
    auto more = Labelled(1, w < 33 ? 118 : 117);
    for (auto& s : more) {
      s.word_label = static_cast<int>(w);
      seqs.push_back(std::move(s));
    }
  }
  REQUIRE(seqs.size() == 6000);
  Rng rng(11, RngStream::kShuffle);
  const SplitCounts counts = SplitSpeaker(Pointers(seqs), 5, rng);
  CHECK(counts.val == 255);
  CHECK(counts.test == 255);
  CHECK(counts.train == 5490);
  std::map<int, std::map<Split, std::size_t>> per_word;
  for (const auto& s : seqs) ++per_word[*s.word_label][s.split];
  for (const auto& [w, m] : per_word) {
    CHECK(m.at(Split::kVal) == 5);
    CHECK(m.at(Split::kTest) == 5);
  }
}

TEST_CASE("split boundary and insufficient words") {
  auto seqs = Labelled(2, 11);
  Rng rng(1, RngStream::kShuffle);
  const auto counts = SplitSpeaker(Pointers(seqs), 5, rng);
  CHECK(counts.train == 2);
  auto few = Labelled(3, 10);
  try {
    SplitSpeaker(Pointers(few), 5, rng);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.kind() == DataError::Kind::kInsufficient);
  }
}

TEST_CASE("split is deterministic per seed") {
  auto a = Labelled(4, 20), b = Labelled(4, 20), c = Labelled(4, 20);
  Rng ra(5, RngStream::kShuffle), rb(5, RngStream::kShuffle), rc(6, RngStream::kShuffle);
  SplitSpeaker(Pointers(a), 5, ra);
  SplitSpeaker(Pointers(b), 5, rb);
  SplitSpeaker(Pointers(c), 5, rc);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("contrast normalization") {
  Tensor frames({2, 1, 3});
  frames[0] = 2.0f, frames[1] = 4.0f, frames[2] = 3.0f;
  frames[3] = frames[4] = frames[5] = 7.0f;
  const Tensor out = ContrastNormalize(frames);
  CHECK(out[0] == 0.0f);
  CHECK(out[1] == 1.0f);
  CHECK(out[2] == 0.5f);
  for (std::size_t i = 3; i < 6; ++i) CHECK(out[i] == 0.0f);
}

TEST_CASE("normalizer statistics on the training split") {
  SynthConfig c;
  Dataset ds = GenerateSynthetic(c);
  const auto train = ds.Select(0, Split::kTrain);
  const Normalizer n = Normalizer::Fit(train);
  const std::size_t hw = c.height * c.width;
  std::vector<double> sum(hw, 0.0), sq(hw, 0.0);
  std::size_t frames = 0;
  for (const auto* s : train) {
    const Tensor z = n.Apply(s->frames);
    for (std::size_t t = 0; t < s->length(); ++t) {
      for (std::size_t p = 0; p < hw; ++p) {
        const double v = z[t * hw + p];
        sum[p] += v;
        sq[p] += v * v;
      }
    }
    frames += s->length();
  }
  for (std::size_t p = 0; p < hw; ++p) {
    const double mean = sum[p] / frames;
    CHECK(std::abs(mean) < 1e-5);
    CHECK(std::sqrt(sq[p] / frames - mean * mean) == doctest::Approx(1.0).epsilon(1e-4));
  }
  for (std::size_t p = 0; p < hw; ++p) CHECK(n.std[p] >= kStdFloor);

  // Cross-speaker application is allowed and changes the frames.
  const auto* other = ds.Select(1, Split::kTrain).front();
  const Normalizer own = Normalizer::Fit(ds.Select(1, Split::kTrain));
  CHECK_FALSE(n.Apply(other->frames) == own.Apply(other->frames));
}

TEST_CASE("normalizer is fitted on training frames only") {
  Dataset ds = GenerateSynthetic(SynthConfig{});
  auto all = ds.Select(0);
  CHECK_THROWS_AS(Normalizer::Fit(all), DataError);
  CHECK_THROWS_AS(Normalizer::Fit({}), DataError);
  auto mixed = ds.Select(0, Split::kTrain);
  mixed.push_back(ds.Select(1, Split::kTrain).front());
  CHECK_THROWS_AS(Normalizer::Fit(mixed), DataError);

  // Statistics that include held-out frames differ from the fitted ones.
  const Normalizer n = Normalizer::Fit(ds.Select(0, Split::kTrain));
  const std::size_t hw = ds.height * ds.width;
  std::vector<double> sum(hw, 0.0);
  std::size_t frames = 0;
  for (const auto* s : all) {
    const Tensor cn = ContrastNormalize(s->frames);
    for (std::size_t i = 0; i < cn.size(); ++i) sum[i % hw] += cn[i];
    frames += s->length();
  }
  double max_diff = 0.0;
  for (std::size_t p = 0; p < hw; ++p) max_diff = std::max(max_diff, std::abs(sum[p] / frames - n.mean[p]));
  CHECK(max_diff > 1e-4);
}

TEST_CASE("per-speaker normalization runs once") {
  Dataset ds = GenerateSynthetic(SynthConfig{});
  const auto normalizers = NormalizePerSpeaker(ds);
  CHECK(normalizers.size() == 2);
  CHECK(ds.normalization == NormalizationState::kPerSpeaker);
  CHECK_THROWS_AS(NormalizePerSpeaker(ds), ConfigError);
}

TEST_CASE("target pool counts label reads across limited views") {
  Dataset ds = GenerateSynthetic(SynthConfig{});
  const TargetPool pool(ds.Select(1, Split::kTrain));
  CHECK(pool.speaker_id() == 1);
  Rng rng(3, RngStream::kShuffle);
  const TargetPool small = pool.Limited(50, rng);
  CHECK(small.size() == 50);
  CHECK(pool.label_reads() == 0);
  CHECK(small.frames(0).dim(1) == 20);
  CHECK(small.label_reads() == 0);
  CHECK(small.word_label(0).has_value());
  CHECK(pool.label_reads() == 1);
  CHECK(pool.Limited(1000, rng).size() == pool.size());
}

TEST_CASE("dataset container round trip and hash") {
  SynthConfig c;
  c.seqs_per_class = 12;
  c.eval_per_class = 2;
  Dataset ds = GenerateSynthetic(c);
  ds.sequences.back().word_label.reset();
  const fs::path dir = TempDir("roundtrip");
  WriteDataset(ds, dir);
  CHECK(ReadDataset(dir) == ds);
  const std::string h = HashDataset(dir);
  CHECK(h.size() == 16);
  const fs::path again = TempDir("roundtrip2");
  WriteDataset(ReadDataset(dir), again);
  CHECK(HashDataset(again) == h);
  CHECK(Slurp(dir / "frames.bin") == Slurp(again / "frames.bin"));
  fs::remove_all(dir);
  fs::remove_all(again);
}

TEST_CASE("fnv-1a reference values") {
  CHECK(Fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(Fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(Fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("dataset container errors are distinct") {
  SynthConfig c;
  c.seqs_per_class = 12;
  c.eval_per_class = 2;
  const Dataset ds = GenerateSynthetic(c);
  const fs::path dir = TempDir("errors");
  WriteDataset(ds, dir);
  const std::string frames = Slurp(dir / "frames.bin");
  const std::string manifest = Slurp(dir / "manifest.json");

  std::string bad = frames;
  bad[0] = 'X';
  Spit(dir / "frames.bin", bad);
  CHECK(ReadKind(dir) == DataError::Kind::kBadMagic);

  Spit(dir / "frames.bin", frames.substr(0, frames.size() - 10));
  CHECK(ReadKind(dir) == DataError::Kind::kTruncated);

  Spit(dir / "frames.bin", frames + "extra");
  CHECK(ReadKind(dir) == DataError::Kind::kIntegrity);

  Spit(dir / "frames.bin", frames);
  auto j = nlohmann::json::parse(manifest);
  j["sequences"][3]["offset"] = frames.size();
  Spit(dir / "manifest.json", j.dump());
  CHECK(ReadKind(dir) == DataError::Kind::kIntegrity);

  Spit(dir / "manifest.json", "{not json");
  CHECK(ReadKind(dir) == DataError::Kind::kMalformed);
  fs::remove_all(dir);
  CHECK(ReadKind(dir) == DataError::Kind::kIo);
}

TEST_CASE("synthetic corpus shape, determinism and speed") {
  SynthConfig c;
  const auto start = std::chrono::steady_clock::now();
  const Dataset a = GenerateSynthetic(c);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(seconds < 5.0);
  CHECK(a.sequences.size() == 600);
  CHECK(a.Speakers() == std::vector<int>{0, 1});
  for (const auto& s : a.sequences) {
    CHECK(s.length() >= 6);
    CHECK(s.length() <= 12);
  }
  CHECK(a.Select(0, Split::kVal).size() == 25);
  CHECK(a.Select(1, Split::kTest).size() == 25);
  CHECK(GenerateSynthetic(c) == a);

  const fs::path d1 = TempDir("det1"), d2 = TempDir("det2");
  WriteDataset(a, d1);
  WriteDataset(GenerateSynthetic(c), d2);
  CHECK(Slurp(d1 / "frames.bin") == Slurp(d2 / "frames.bin"));
  CHECK(HashDataset(d1) == HashDataset(d2));
  fs::remove_all(d1);
  fs::remove_all(d2);

  c.seed = 2;
  CHECK_FALSE(GenerateSynthetic(c) == a);
}

TEST_CASE("synth config validation") {
  SynthConfig c;
  c.n_domains = 1;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = SynthConfig{};
  c.t_min = 1;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = SynthConfig{};
  c.n_classes = 1;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  CHECK(ParseShiftLevel(ShiftLevelName(ShiftLevel::kMedium)) == ShiftLevel::kMedium);
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(ShiftForLevel(ShiftLevel::kNone, d, 3) == ShiftForLevel(ShiftLevel::kNone, 0, 3));
  }
}

TEST_CASE("zero-shift control transfers without a gap") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SynthConfig c;
    c.shift_level = ShiftLevel::kNone;
    c.seed = seed;
    Dataset ds = GenerateSynthetic(c);
    NormalizePerSpeaker(ds);
    const Centroids cls = Centroids::Fit(ds.Select(0, Split::kTrain));
    const double own = cls.Accuracy(ds.Select(0, Split::kTest));
    const double cross = cls.Accuracy(ds.Select(1));
    INFO("seed " << seed << " own " << own << " cross " << cross);
    CHECK(cross >= own - 0.1);
  }
}

TEST_CASE("cross-domain accuracy falls as the shift grows") {
  double sum_low = 0.0, sum_mid = 0.0, sum_high = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double low = CrossDomainAccuracy(ShiftLevel::kLow, seed);
    const double mid = CrossDomainAccuracy(ShiftLevel::kMedium, seed);
    const double high = CrossDomainAccuracy(ShiftLevel::kHigh, seed);
    INFO("seed " << seed << ": " << low << " " << mid << " " << high);
    CHECK(low >= mid);
    CHECK(mid >= high);
    sum_low += low, sum_mid += mid, sum_high += high;
  }
  CHECK(sum_low > sum_mid);
  CHECK(sum_mid > sum_high);
}
