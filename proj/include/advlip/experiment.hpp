// advlip/experiment.hpp

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

#ifndef ADVLIP_EXPERIMENT_HPP_
#define ADVLIP_EXPERIMENT_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "advlip/config_json.hpp"
#include "advlip/data.hpp"
#include "advlip/eval.hpp"
#include "advlip/training.hpp"

namespace advlip {

/// Source speakers and the target speaker of one grid cell.
struct GridCell {
  std::vector<int> sources;
  int target = 0;
  bool operator==(const GridCell&) const = default;
};

/// Cyclic consecutive windows over `speakers` (in the given order): cell i
/// uses speakers i .. i+n_source-1 as sources and speaker i+n_source as the
/// target, all indices modulo the speaker count.
std::vector<GridCell> EnumerateGrid(const std::vector<int>& speakers, std::size_t n_source);

/// Per-cell seed; identical for every mode so that runs pair up.
std::uint64_t CellSeed(std::uint64_t base_seed, int target_id);

struct ExperimentOptions {
  ModelConfig model;  // adv_domains is set to n_source + 1 per cell
  TrainConfig train;  // mode, seed and pool limit are set per run
  std::size_t n_source = 1;
  std::vector<TrainMode> modes{TrainMode::kBaseline, TrainMode::kAdversarial};
  std::optional<std::size_t> target_pool_limit;
  std::uint64_t base_seed = 0;
  std::size_t workers = 1;
};

struct CellResult {
  GridCell cell;
  TrainMode mode = TrainMode::kBaseline;
  std::uint64_t seed = 0;
  EvalReport target_test;
  EvalReport source_test;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::vector<EpochMetrics> log;
};

struct ModeSummary {
  TrainMode mode = TrainMode::kBaseline;
  double mean_target_acc = 0.0;
  double mean_source_acc = 0.0;
};

struct Comparison {
  double baseline_mean = 0.0;
  double adversarial_mean = 0.0;
  double relative_improvement = 0.0;  // percent
  std::optional<TTestResult> t_test;  // needs at least two cells
};

struct ExperimentGrid {
  std::vector<GridCell> cells;
  // Sorted by (target id, mode).
  std::vector<CellResult> results;
  std::vector<ModeSummary> summaries;
  std::optional<Comparison> comparison;
};

struct CellTraining {
  ModelConfig model;  // as resolved for the cell
  TrainConfig train;
  TrainResult result;
  std::size_t target_label_reads = 0;
};

/// Trains one cell with an explicit seed, without evaluating it. A negative
/// target id means no target speaker (baseline only).
CellTraining TrainCell(const Dataset& dataset, const GridCell& cell, TrainMode mode,
                       const ExperimentOptions& options, std::uint64_t seed,
                       const TrainHooks& hooks = {});

/// Trains and evaluates one cell. `dataset` must already be normalized.
CellResult RunCell(const Dataset& dataset, const GridCell& cell, TrainMode mode,
                   const ExperimentOptions& options);

/// Runs every cell in every requested mode and pairs baseline against
/// adversarial results by target speaker.
ExperimentGrid RunExperimentGrid(const Dataset& dataset, const ExperimentOptions& options,
                                 const std::function<void(const CellResult&)>& on_cell = {});

/// One row per (cell, mode).
std::string FormatGridCsv(const ExperimentGrid& grid);
/// Aligned per-target table followed by the summary and significance lines.
std::string FormatGridTable(const ExperimentGrid& grid);
Json EvalReportToJson(const EvalReport& report);
/// Everything, including confusion matrices.
Json GridToJson(const ExperimentGrid& grid);

}  // namespace advlip

#endif  // ADVLIP_EXPERIMENT_HPP_
