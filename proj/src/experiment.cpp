// src/experiment.cpp

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

#include "advlip/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <mutex>

#include "advlip/error.hpp"

namespace advlip {

std::vector<GridCell> EnumerateGrid(const std::vector<int>& speakers, std::size_t n_source) {
  const std::size_t n = speakers.size();
  if (n_source == 0) throw ConfigError("n_source", "must be positive");
  if (n < n_source + 1) {
    throw ConfigError("n_source", std::to_string(n_source) + " sources need at least " +
                                      std::to_string(n_source + 1) + " speakers, have " +
                                      std::to_string(n));
  }
  std::vector<GridCell> cells;
  for (std::size_t i = 0; i < n; ++i) {
    GridCell cell;
    for (std::size_t k = 0; k < n_source; ++k) cell.sources.push_back(speakers[(i + k) % n]);
    cell.target = speakers[(i + n_source) % n];
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::uint64_t CellSeed(std::uint64_t base_seed, int target_id) {
  return MixSeed(base_seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(target_id)));
}

namespace {

std::vector<const FrameSequence*> Gather(const Dataset& ds, const std::vector<int>& speakers,
                                         Split split) {
  std::vector<const FrameSequence*> out;
  for (int s : speakers) {
    const auto part = ds.Select(s, split);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace

CellTraining TrainCell(const Dataset& dataset, const GridCell& cell, TrainMode mode,
                       const ExperimentOptions& options, std::uint64_t seed,
                       const TrainHooks& hooks) {
  if (dataset.normalization != NormalizationState::kPerSpeaker) {
    throw ConfigError("dataset", "experiments expect per-speaker normalized frames");
  }
  for (int s : cell.sources) {
    if (s == cell.target) throw ConfigError("sources", "target speaker is also a source");
  }
  const auto speakers = dataset.Speakers();
  auto known = [&](int s) { return std::binary_search(speakers.begin(), speakers.end(), s); };
  if (cell.sources.empty()) throw ConfigError("sources", "no source speaker given");
  for (int s : cell.sources) {
    if (!known(s)) throw ConfigError("sources", "speaker " + std::to_string(s) + " not in dataset");
  }
  const bool has_target = cell.target >= 0;
  if (!has_target && mode == TrainMode::kAdversarial) {
    throw ConfigError("target", "adversarial training needs a target speaker");
  }
  if (has_target && !known(cell.target)) {
    throw ConfigError("target", "speaker " + std::to_string(cell.target) + " not in dataset");
  }

  ModelConfig mc = options.model;
  mc.input_height = dataset.height;
  mc.input_width = dataset.width;
  mc.word_classes = dataset.num_classes;
  mc.adv_domains = cell.sources.size() + 1;
  TrainConfig tc = options.train;
  tc.mode = mode;
  tc.seed = seed;
  tc.target_pool_limit = options.target_pool_limit;

  TrainInputs inputs;
  inputs.source_train = Gather(dataset, cell.sources, Split::kTrain);
  inputs.source_val = Gather(dataset, cell.sources, Split::kVal);
  if (has_target) inputs.target_val = dataset.Select(cell.target, Split::kVal);
  for (std::size_t i = 0; i < cell.sources.size(); ++i) {
    inputs.domain_index[cell.sources[i]] = static_cast<int>(i);
  }
  if (has_target) inputs.domain_index[cell.target] = static_cast<int>(cell.sources.size());
  const TargetPool pool(has_target ? dataset.Select(cell.target, Split::kTrain)
                                   : std::vector<const FrameSequence*>{});
  if (mode == TrainMode::kAdversarial) inputs.target_pool = &pool;

  Rng init_rng(seed, RngStream::kInit);
  // Braced init evaluates left to right: reads are counted after training.
  return CellTraining{mc, tc, Train(Model<float>::Build(mc, init_rng), inputs, tc, hooks),
                      pool.label_reads()};
}

CellResult RunCell(const Dataset& dataset, const GridCell& cell, TrainMode mode,
                   const ExperimentOptions& options) {
  CellResult r;
  r.cell = cell;
  r.mode = mode;
  r.seed = CellSeed(options.base_seed, cell.target);
  auto trained = TrainCell(dataset, cell, mode, options, r.seed);
  r.target_test = Evaluate(trained.result.best, dataset.Select(cell.target, Split::kTest));
  r.source_test = Evaluate(trained.result.best, Gather(dataset, cell.sources, Split::kTest));
  r.best_epoch = trained.result.best_epoch;
  r.epochs_run = trained.result.log.size();
  r.log = std::move(trained.result.log);
  return r;
}

ExperimentGrid RunExperimentGrid(const Dataset& dataset, const ExperimentOptions& options,
                                 const std::function<void(const CellResult&)>& on_cell) {
  if (options.modes.empty()) throw ConfigError("modes", "no training mode requested");
  ExperimentGrid grid;
  grid.cells = EnumerateGrid(dataset.Speakers(), options.n_source);

  struct Job {
    GridCell cell;
    TrainMode mode;
  };
  std::vector<Job> jobs;
  for (const auto& cell : grid.cells) {
    for (TrainMode mode : options.modes) jobs.push_back({cell, mode});
  }
  std::vector<std::optional<CellResult>> done(jobs.size());
  std::mutex report_mutex;
  auto run = [&](std::size_t j) {
    done[j] = RunCell(dataset, jobs[j].cell, jobs[j].mode, options);
    if (on_cell) {
      std::lock_guard<std::mutex> lock(report_mutex);
      on_cell(*done[j]);
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  if (workers == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run(j);
  } else {
    // Each job only writes its own slot, so the merged result does not
    // depend on scheduling.
    std::size_t next = 0;
    while (next < jobs.size()) {
      std::vector<std::future<void>> wave;
      for (std::size_t w = 0; w < workers && next < jobs.size(); ++w, ++next) {
        wave.push_back(std::async(std::launch::async, run, next));
      }
      for (auto& f : wave) f.get();
    }
  }
  for (auto& r : done) grid.results.push_back(std::move(*r));
  std::stable_sort(grid.results.begin(), grid.results.end(), [](const CellResult& a, const CellResult& b) {
    if (a.cell.target != b.cell.target) return a.cell.target < b.cell.target;
    return a.mode < b.mode;
  });

  std::map<TrainMode, std::map<int, const CellResult*>> by_mode;
  for (const auto& r : grid.results) by_mode[r.mode][r.cell.target] = &r;
  for (const auto& [mode, rows] : by_mode) {
    ModeSummary s;
    s.mode = mode;
    for (const auto& [target, r] : rows) {
      s.mean_target_acc += r->target_test.accuracy;
      s.mean_source_acc += r->source_test.accuracy;
    }
    s.mean_target_acc /= static_cast<double>(rows.size());
    s.mean_source_acc /= static_cast<double>(rows.size());
    grid.summaries.push_back(s);
  }
  if (by_mode.count(TrainMode::kBaseline) && by_mode.count(TrainMode::kAdversarial)) {
    Comparison c;
    std::vector<double> base, adv;
    for (const auto& [target, r] : by_mode[TrainMode::kBaseline]) {
      base.push_back(r->target_test.accuracy);
      adv.push_back(by_mode[TrainMode::kAdversarial].at(target)->target_test.accuracy);
    }
    for (const auto& s : grid.summaries) {
      (s.mode == TrainMode::kBaseline ? c.baseline_mean : c.adversarial_mean) = s.mean_target_acc;
    }
    c.relative_improvement = c.baseline_mean > 0.0
                                 ? RelativeImprovement(c.baseline_mean, c.adversarial_mean)
                                 : 0.0;
    if (base.size() >= 2) c.t_test = PairedTTestOneTailed(base, adv);
    grid.comparison = c;
  }
  return grid;
}

namespace {

std::string JoinIds(const std::vector<int>& ids, char sep) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(ids[i]);
  }
  return out;
}

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

}  // namespace

std::string FormatGridCsv(const ExperimentGrid& grid) {
  std::string out = "target,sources,mode,seed,target_test_acc,source_test_acc,best_epoch,epochs_run\n";
  for (const auto& r : grid.results) {
    out += std::to_string(r.cell.target) + "," + JoinIds(r.cell.sources, ' ') + "," +
           std::string(TrainModeName(r.mode)) + "," + std::to_string(r.seed) + "," +
           Fmt("%.9g", r.target_test.accuracy) + "," + Fmt("%.9g", r.source_test.accuracy) + "," +
           std::to_string(r.best_epoch) + "," + std::to_string(r.epochs_run) + "\n";
  }
  return out;
}

std::string FormatGridTable(const ExperimentGrid& grid) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %-8s %-12s %10s %10s %6s\n", "sources", "target", "mode",
                "tgt_test", "src_test", "best");
  out += line;
  for (const auto& r : grid.results) {
    std::snprintf(line, sizeof(line), "%-16s %-8d %-12s %9.1f%% %9.1f%% %6zu\n",
                  JoinIds(r.cell.sources, ',').c_str(), r.cell.target,
                  std::string(TrainModeName(r.mode)).c_str(), 100.0 * r.target_test.accuracy,
                  100.0 * r.source_test.accuracy, r.best_epoch);
    out += line;
  }
  for (const auto& s : grid.summaries) {
    std::snprintf(line, sizeof(line), "mean %-12s target %.1f%%  source %.1f%%\n",
                  std::string(TrainModeName(s.mode)).c_str(), 100.0 * s.mean_target_acc,
                  100.0 * s.mean_source_acc);
    out += line;
  }
  if (grid.comparison) {
    const auto& c = *grid.comparison;
    std::snprintf(line, sizeof(line), "relative improvement %+.1f%%", c.relative_improvement);
    out += line;
    if (c.t_test) {
      std::snprintf(line, sizeof(line), ", paired one-tailed t = %.4f, p = %.3g (n = %zu)",
                    c.t_test->t, c.t_test->p, c.t_test->n);
      out += line;
    }
    out += "\n";
  }
  return out;
}

Json EvalReportToJson(const EvalReport& r) {
  Json per_class = Json::array();
  for (double a : r.per_class_accuracy) per_class.push_back(std::isnan(a) ? Json(nullptr) : Json(a));
  Json j{{"accuracy", r.accuracy},
         {"n", r.n},
         {"per_class_accuracy", per_class},
         {"confusion", r.confusion}};
  if (r.speaker_id) j["speaker_id"] = *r.speaker_id;
  if (r.split) j["split"] = SplitName(*r.split);
  return j;
}

Json GridToJson(const ExperimentGrid& grid) {
  const auto report_json = EvalReportToJson;
  Json rows = Json::array();
  for (const auto& r : grid.results) {
    rows.push_back({{"sources", r.cell.sources},
                    {"target", r.cell.target},
                    {"mode", TrainModeName(r.mode)},
                    {"seed", r.seed},
                    {"best_epoch", r.best_epoch},
                    {"epochs_run", r.epochs_run},
                    {"target_test", report_json(r.target_test)},
                    {"source_test", report_json(r.source_test)}});
  }
  Json summaries = Json::array();
  for (const auto& s : grid.summaries) {
    summaries.push_back({{"mode", TrainModeName(s.mode)},
                         {"mean_target_acc", s.mean_target_acc},
                         {"mean_source_acc", s.mean_source_acc}});
  }
  Json j{{"results", rows}, {"summaries", summaries}};
  if (grid.comparison) {
    const auto& c = *grid.comparison;
    Json cj{{"baseline_mean", c.baseline_mean},
            {"adversarial_mean", c.adversarial_mean},
            {"relative_improvement", c.relative_improvement}};
    if (c.t_test) {
      cj["t"] = std::isfinite(c.t_test->t) ? Json(c.t_test->t) : Json(nullptr);
      cj["p"] = c.t_test->p;
      cj["n"] = c.t_test->n;
    }
    j["comparison"] = cj;
  }
  return j;
}

}  // namespace advlip
