// src/cli.cpp

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

#include "advlip/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "advlip/config_json.hpp"
#include "advlip/data.hpp"
#include "advlip/error.hpp"
#include "advlip/eval.hpp"
#include "advlip/experiment.hpp"
#include "advlip/gradcheck_suite.hpp"
#include "advlip/synth.hpp"
#include "advlip/training.hpp"

namespace advlip {
namespace {

namespace fs = std::filesystem;

constexpr const char* kManifestFile = "run_manifest.json";
constexpr const char* kCheckpointFile = "model.ckpt";
constexpr const char* kMetricsFile = "metrics.csv";

std::string Format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

// --seed, then the config file, then ADVLIP_SEED, then 0.
std::uint64_t ResolveSeed(const std::optional<std::uint64_t>& flag, const Json& train_json,
                          std::uint64_t from_config) {
  if (flag) return *flag;
  if (train_json.is_object() && train_json.contains("seed")) return from_config;
  if (const char* env = std::getenv("ADVLIP_SEED")) {
    try {
      std::size_t used = 0;
      const std::uint64_t v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("ADVLIP_SEED", std::string("not an unsigned integer: ") + env);
  }
  return 0;
}

Dataset LoadNormalized(const fs::path& dir) {
  Dataset ds = ReadDataset(dir);
  if (ds.normalization == NormalizationState::kRaw) NormalizePerSpeaker(ds);
  return ds;
}

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  Json train_json = Json::object();
};

// {"model": {...}, "train": {...}}; both optional.
RunConfig ReadRunConfig(const std::string& path) {
  RunConfig rc;
  if (path.empty()) return rc;
  const Json j = ReadJsonFile(path);
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  JsonFields fields(j, "config");
  if (const Json* m = fields.Lookup("model")) rc.model = ModelConfigFromJson(*m);
  if (const Json* t = fields.Lookup("train")) {
    rc.train = TrainConfigFromJson(*t);
    rc.train_json = *t;
  }
  fields.Finish();
  return rc;
}

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(DataError::Kind::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError(DataError::Kind::kIo, "cannot write " + path.string());
}

// ---------------------------------------------------------------- gen-synth

struct GenSynthArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
  std::string shift_level;
};

int GenSynth(const GenSynthArgs& a, std::ostream& out) {
  SynthConfig c;
  if (!a.config.empty()) c = SynthConfigFromJson(ReadJsonFile(a.config));
  if (a.seed) c.seed = *a.seed;
  if (!a.shift_level.empty()) c.shift_level = ParseShiftLevel(a.shift_level);
  c.Validate();
  const Dataset ds = GenerateSynthetic(c);
  WriteDataset(ds, a.out);
  std::size_t train = 0, val = 0, test = 0;
  for (const auto& s : ds.sequences) {
    (s.split == Split::kTrain ? train : s.split == Split::kVal ? val : test) += 1;
  }
  out << "wrote " << ds.sequences.size() << " sequences (" << c.n_domains << " domains x "
      << c.n_classes << " classes x " << c.seqs_per_class << ") to " << a.out << "\n"
      << "split train " << train << " val " << val << " test " << test << "\n"
      << "hash " << HashDataset(a.out) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data, config, out, mode, from_manifest;
  std::vector<int> sources;
  std::optional<int> target;
  std::optional<std::size_t> target_pool, epochs, patience;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
};

struct TrainPlan {
  std::string data;
  std::vector<int> sources;
  std::optional<int> target;
  TrainMode mode = TrainMode::kAdversarial;
  ModelConfig model;
  TrainConfig train;
};

TrainPlan PlanFromFlags(const TrainArgs& a) {
  if (a.data.empty()) throw ConfigError("--data", "required");
  if (a.sources.empty()) throw ConfigError("--sources", "required");
  RunConfig rc = ReadRunConfig(a.config);
  TrainPlan p;
  p.data = a.data;
  p.sources = a.sources;
  p.target = a.target;
  p.model = rc.model;
  p.train = rc.train;
  if (!a.mode.empty()) p.train.mode = ParseTrainMode(a.mode);
  p.mode = p.train.mode;
  if (p.mode == TrainMode::kAdversarial && !p.target) {
    throw ConfigError("--target", "required in adversarial mode");
  }
  if (a.target_pool) p.train.target_pool_limit = *a.target_pool;
  if (a.lr) p.train.learning_rate = *a.lr;
  if (a.epochs) p.train.max_epochs = *a.epochs;
  if (a.patience) p.train.patience = *a.patience;
  p.train.seed = ResolveSeed(a.seed, rc.train_json, rc.train.seed);
  p.train.Validate();
  return p;
}

TrainPlan PlanFromManifest(const TrainArgs& a) {
  const Json m = ReadJsonFile(a.from_manifest);
  try {
    if (m.at("command").get<std::string>() != "train") {
      throw ConfigError("command", "manifest is not from a train run");
    }
    TrainPlan p;
    p.data = a.data.empty() ? m.at("dataset").at("path").get<std::string>() : a.data;
    p.sources = m.at("sources").get<std::vector<int>>();
    if (!m.at("target").is_null()) p.target = m.at("target").get<int>();
    p.model = ModelConfigFromJson(m.at("model"));
    p.train = TrainConfigFromJson(m.at("train"));
    p.mode = p.train.mode;
    const std::string hash = m.at("dataset").at("hash").get<std::string>();
    if (HashDataset(p.data) != hash) {
      throw DataError(DataError::Kind::kIntegrity,
                      "dataset " + p.data + " does not match the manifest hash " + hash);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest", e.what());
  }
}

int TrainCommand(const TrainArgs& a, std::ostream& out) {
  if (a.out.empty()) throw ConfigError("--out", "required");
  const TrainPlan p = a.from_manifest.empty() ? PlanFromFlags(a) : PlanFromManifest(a);
  const Dataset ds = LoadNormalized(p.data);
  const fs::path dir = a.out;
  EnsureDir(dir);

  GridCell cell{p.sources, p.target.value_or(-1)};
  ExperimentOptions o;
  o.model = p.model;
  o.train = p.train;
  o.target_pool_limit = p.train.target_pool_limit;

  // Resolve the model against the dataset before writing the manifest.
  ModelConfig resolved = p.model;
  resolved.input_height = ds.height;
  resolved.input_width = ds.width;
  resolved.word_classes = ds.num_classes;
  resolved.adv_domains = p.sources.size() + 1;
  resolved.Validate();

  Json manifest{{"tool", "advlip"},
                {"version", kToolVersion},
                {"command", "train"},
                {"seed", p.train.seed},
                {"dataset", {{"path", p.data}, {"hash", HashDataset(p.data)}}},
                {"sources", p.sources},
                {"target", p.target ? Json(*p.target) : Json(nullptr)},
                {"mode", TrainModeName(p.mode)},
                {"target_pool_limit",
                 p.train.target_pool_limit ? Json(*p.train.target_pool_limit) : Json(nullptr)},
                {"model", ToJson(resolved)},
                {"train", ToJson(p.train)},
                {"artifacts", {{"checkpoint", kCheckpointFile}, {"metrics", kMetricsFile}}}};
  WriteJsonFile(dir / kManifestFile, manifest);

  TrainHooks hooks;
  hooks.on_epoch = [&out](const EpochMetrics& e) {
    out << "epoch " << e.epoch << " lambda " << Format("%.2f", e.lambda) << " word_loss "
        << Format("%.4f", e.word_loss) << " speaker_loss " << Format("%.4f", e.speaker_loss)
        << " src_val " << Format("%.3f", e.src_val_acc) << " tgt_val "
        << Format("%.3f", e.tgt_val_acc) << "\n";
  };
  const CellTraining t = TrainCell(ds, cell, p.mode, o, p.train.seed, hooks);
  SaveCheckpoint(t.result.best, dir / kCheckpointFile);
  WriteMetricsCsv(dir / kMetricsFile, t.result.log);
  out << "best epoch " << t.result.best_epoch << " src_val " << Format("%.4f", t.result.best_val_acc)
      << " after " << t.result.log.size() << " epochs"
      << (t.result.early_stopped ? " (early stop)" : "") << "\n"
      << "wrote " << (dir / kCheckpointFile).string() << " and " << (dir / kMetricsFile).string()
      << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint, data, split = "test", json;
  int speaker = 0;
};

int EvalCommand(const EvalArgs& a, std::ostream& out) {
  const Model<float> model = LoadCheckpoint(a.checkpoint);
  const Dataset ds = LoadNormalized(a.data);
  const Split split = ParseSplit(a.split);
  const auto seqs = ds.Select(a.speaker, split);
  if (seqs.empty()) {
    throw ConfigError("--speaker", "no " + a.split + " sequences for speaker " + std::to_string(a.speaker));
  }
  if (model.config().input_height != ds.height || model.config().input_width != ds.width) {
    throw DataError(DataError::Kind::kIntegrity, "checkpoint frame size does not match the dataset");
  }
  const EvalReport r = Evaluate(model, seqs);
  std::size_t right = 0;
  for (std::size_t i = 0; i < r.n; ++i) right += r.labels[i] == r.predictions[i];
  out << "speaker " << a.speaker << " split " << a.split << " accuracy " << Format("%.4f", r.accuracy)
      << " (" << right << "/" << r.n << ")\n";
  for (std::size_t k = 0; k < r.per_class_accuracy.size(); ++k) {
    out << "  class " << k << " " << Format("%.4f", r.per_class_accuracy[k]) << "\n";
  }
  if (!a.json.empty()) WriteJsonFile(a.json, EvalReportToJson(r));
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradCheckArgs {
  std::size_t seeds = 10;
  double tolerance = 1e-4;
  std::string tiny_config;
  bool inject_sign_bug = false;
};

int GradCheckCommand(const GradCheckArgs& a, std::ostream& out) {
  GradCheckOptions o;
  o.seeds = a.seeds;
  o.tolerance = a.tolerance;
  o.inject_sign_bug = a.inject_sign_bug;
  if (!a.tiny_config.empty()) o.model = ModelConfigFromJson(ReadJsonFile(a.tiny_config));
  bool ok = true;
  char line[128];
  std::snprintf(line, sizeof line, "%-18s %6s %14s  %s\n", "check", "cases", "max_rel_err", "result");
  out << line;
  for (const auto& r : RunGradientChecks(o)) {
    std::snprintf(line, sizeof line, "%-18s %6zu %14.3e  %s\n", r.check.c_str(), r.cases,
                  r.max_rel_error, r.passed ? "pass" : "FAIL");
    out << line;
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- experiment

struct ExperimentArgs {
  std::string data, config, out, modes = "baseline,adversarial";
  std::size_t n_sources = 1, workers = 1;
  std::optional<std::size_t> target_pool;
  std::optional<std::uint64_t> seed;
  bool json = false;
};

std::vector<TrainMode> ParseModes(const std::string& list) {
  std::vector<TrainMode> modes;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) modes.push_back(ParseTrainMode(item));
  }
  if (modes.empty()) throw ConfigError("--modes", "no mode given");
  return modes;
}

int ExperimentCommand(const ExperimentArgs& a, std::ostream& out) {
  RunConfig rc = ReadRunConfig(a.config);
  ExperimentOptions o;
  o.model = rc.model;
  o.train = rc.train;
  o.n_source = a.n_sources;
  o.modes = ParseModes(a.modes);
  o.target_pool_limit = a.target_pool ? a.target_pool : rc.train.target_pool_limit;
  o.base_seed = ResolveSeed(a.seed, rc.train_json, rc.train.seed);
  o.workers = a.workers;
  if (o.workers == 0) throw ConfigError("--workers", "must be positive");
  o.train.Validate();

  const Dataset ds = LoadNormalized(a.data);
  const fs::path dir = a.out;
  EnsureDir(dir);
  const auto cells = EnumerateGrid(ds.Speakers(), o.n_source);
  Json modes = Json::array();
  for (TrainMode m : o.modes) modes.push_back(TrainModeName(m));
  WriteJsonFile(dir / kManifestFile,
                Json{{"tool", "advlip"},
                     {"version", kToolVersion},
                     {"command", "experiment"},
                     {"seed", o.base_seed},
                     {"dataset", {{"path", a.data}, {"hash", HashDataset(a.data)}}},
                     {"n_sources", o.n_source},
                     {"cells", cells.size()},
                     {"modes", modes},
                     {"target_pool_limit",
                      o.target_pool_limit ? Json(*o.target_pool_limit) : Json(nullptr)},
                     {"workers", o.workers},
                     {"model", ToJson(o.model)},
                     {"train", ToJson(o.train)},
                     {"artifacts", {{"grid", "grid.csv"}, {"summary", "summary.txt"}}}});

  const ExperimentGrid grid = RunExperimentGrid(ds, o, [&out](const CellResult& r) {
    out << "target " << r.cell.target << " " << TrainModeName(r.mode) << " target_test "
        << Format("%.4f", r.target_test.accuracy) << " best_epoch " << r.best_epoch << "\n";
  });
  const std::string table = FormatGridTable(grid);
  WriteText(dir / "grid.csv", FormatGridCsv(grid));
  WriteText(dir / "summary.txt", table);
  if (a.json) WriteJsonFile(dir / "grid.json", GridToJson(grid));
  out << table;
  return kExitOk;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adversarial speaker adaptation for lipreading"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  GenSynthArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "Write a synthetic multi-domain corpus");
  gen_cmd->add_option("--config", gen.config, "Synthetic corpus config (JSON)");
  gen_cmd->add_option("--out", gen.out, "Output dataset directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--shift-level", gen.shift_level, "none, low, medium or high");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train one source/target configuration");
  train_cmd->add_option("--data", train.data, "Dataset directory");
  train_cmd->add_option("--config", train.config, "Run config (JSON with model/train)");
  train_cmd->add_option("--sources", train.sources, "Source speaker ids")->delimiter(',');
  train_cmd->add_option("--target", train.target, "Target speaker id");
  train_cmd->add_option("--mode", train.mode, "baseline or adversarial");
  train_cmd->add_option("--target-pool", train.target_pool, "Limit the target pool");
  train_cmd->add_option("--seed", train.seed, "Run seed");
  train_cmd->add_option("--lr", train.lr, "Learning rate");
  train_cmd->add_option("--epochs", train.epochs, "Maximum epochs");
  train_cmd->add_option("--patience", train.patience, "Early-stopping patience");
  train_cmd->add_option("--out", train.out, "Output directory");
  train_cmd->add_option("--from-manifest", train.from_manifest, "Repeat a recorded run");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on one speaker");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
  eval_cmd->add_option("--speaker", ev.speaker, "Speaker id")->required();
  eval_cmd->add_option("--split", ev.split, "train, val or test");
  eval_cmd->add_option("--json", ev.json, "Write the full report here");

  GradCheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Compare analytic and numeric gradients");
  gc_cmd->add_option("--seeds", gc.seeds, "Random cases per check");
  gc_cmd->add_option("--tolerance", gc.tolerance, "Maximum relative error");
  gc_cmd->add_option("--tiny-config", gc.tiny_config, "Model config for the full-model check");
  gc_cmd->add_flag("--inject-sign-bug", gc.inject_sign_bug)->group("");

  ExperimentArgs ex;
  auto* ex_cmd = app.add_subcommand("experiment", "Run the source/target grid");
  ex_cmd->add_option("--data", ex.data, "Dataset directory")->required();
  ex_cmd->add_option("--config", ex.config, "Run config (JSON with model/train)");
  ex_cmd->add_option("--n-sources", ex.n_sources, "Source speakers per cell");
  ex_cmd->add_option("--modes", ex.modes, "Comma-separated modes");
  ex_cmd->add_option("--target-pool", ex.target_pool, "Limit the target pool");
  ex_cmd->add_option("--seed", ex.seed, "Base seed");
  ex_cmd->add_option("--workers", ex.workers, "Parallel cells");
  ex_cmd->add_option("--out", ex.out, "Output directory")->required();
  ex_cmd->add_flag("--json", ex.json, "Also write grid.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return GenSynth(gen, out);
    if (*train_cmd) return TrainCommand(train, out);
    if (*eval_cmd) return EvalCommand(ev, out);
    if (*gc_cmd) return GradCheckCommand(gc, out);
    if (*ex_cmd) return ExperimentCommand(ex, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace advlip
