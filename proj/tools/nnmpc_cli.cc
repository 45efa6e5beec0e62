// nnmpc: data generation, NNARX training, controller synthesis and
// closed-loop runs for the water heater benchmark.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "nnmpc/controller.h"
#include "nnmpc/errors.h"
#include "nnmpc/harness/config.h"
#include "nnmpc/harness/csv.h"
#include "nnmpc/harness/metrics.h"
#include "nnmpc/harness/pipeline.h"
#include "nnmpc/model_io.h"

namespace fs = std::filesystem;
using namespace nnmpc;
using namespace nnmpc::harness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitSynthesis = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string data;
  std::string model;
  std::string controller;
  std::string mode = "nominal";
  std::vector<std::string> logs;
  bool verbose = false;
};

ExperimentConfig Config(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? DefaultConfig() : LoadConfig(o.config);
  if (o.seed) cfg.seed = *o.seed;
  cfg.Validate();
  return cfg;
}

std::string OutPath(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  return (fs::path(o.out) / name).string();
}

std::string DataDir(const Options& o) {
  return o.data.empty() ? (fs::path(o.out) / "data").string() : o.data;
}

std::string ModelPath(const Options& o) {
  return o.model.empty() ? (fs::path(o.out) / "model.json").string() : o.model;
}

std::string ControllerPath(const Options& o) {
  return o.controller.empty() ? (fs::path(o.out) / "controller.json").string()
                              : o.controller;
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FileError(fmt::format("cannot write '{}'", path));
  out << text;
}

int GenerateDataCmd(const Options& o) {
  const ExperimentConfig cfg = Config(o);
  const ExperimentData data = GenerateData(cfg);
  SaveData(data, DataDir(o), cfg.sample_time);
  std::cout << DescribeData(data);
  std::cout << "written to " << DataDir(o) << "\n";
  return kExitOk;
}

int TrainCmd(const Options& o) {
  const ExperimentConfig cfg = Config(o);
  const ExperimentData data = LoadData(DataDir(o));
  const std::string log_path = OutPath(o, "training_log.csv");
  TrainingOutcome t;
  try {
    t = TrainModel(cfg, data, o.verbose);
  } catch (const TrainingFailure& e) {
    std::cerr << fmt::format("training failed at epoch {}: {}\n", e.epoch(), e.what());
    return kExitSynthesis;
  }
  WriteTrainingLog(log_path, t.result);
  SaveModel(t.model, ModelPath(o));
  std::cout << fmt::format("best epoch: {}\n", t.result.best_epoch);
  std::cout << fmt::format("validation MSE (scaled): {:.6e}\n", t.result.best_val_mse);
  std::cout << fmt::format("test FIT: {:.2f} %\n", t.test_fit);
  std::cout << fmt::format("deltaiss margin: {:.6f}\n", t.margin);
  std::cout << fmt::format("training time: {:.1f} s\n", t.seconds);
  std::cout << "model: " << ModelPath(o) << "\nlog: " << log_path << "\n";
  return kExitOk;
}

int SynthesizeCmd(const Options& o) {
  const ExperimentConfig cfg = Config(o);
  const NnarxModel model = LoadModel(ModelPath(o));
  const SynthesisOutcome s = Synthesize(cfg, model);
  SaveController(s, ControllerPath(o));
  const std::string report = DescribeSynthesis(s, model);
  WriteText(OutPath(o, "synthesis_report.txt"), report);
  WriteMatrixCsv(OutPath(o, "equilibria.csv"),
                 {"y_ref", "u_eq", "residual", "rho_a_delta", "rho_loop"},
                 s.equilibria);
  std::cout << report << "controller: " << ControllerPath(o) << "\n";
  return kExitOk;
}

int RunCmd(const Options& o) {
  const ExperimentConfig cfg = Config(o);
  const ControllerMode mode = ParseControllerMode(o.mode);
  const NnarxModel model = LoadModel(ModelPath(o));
  const SynthesisOutcome s = LoadController(ControllerPath(o));
  const RunOutcome run = RunScenario(cfg, model, s, mode, o.verbose);
  const std::string name(ControllerModeName(mode));
  const std::string log_path = OutPath(o, fmt::format("run_{}.csv", name));
  WriteRunLog(log_path, run.log, cfg.sample_time, mode == ControllerMode::kDeb);
  const std::string summary = FormatMetricSummary(run.metrics);
  WriteText(OutPath(o, fmt::format("metrics_{}.txt", name)), summary);
  std::cout << summary << FormatTiming(run.metrics) << "log: " << log_path << "\n";
  return run.metrics.infeasible_steps > 0 ? kExitInfeasible : kExitOk;
}

int CompareCmd(const Options& o) {
  const ExperimentConfig cfg = Config(o);
  const CsvTable t = CompareLogs(o.logs, cfg);
  WriteCsv(OutPath(o, "compare.csv"), t);
  std::size_t w = 0;
  for (const auto& r : t.rows) w = std::max(w, r.front().size());
  std::cout << fmt::format("{:<{}}", t.header.front(), w);
  for (std::size_t i = 1; i < t.header.size(); ++i) {
    std::cout << fmt::format("  {:>14}", t.header[i]);
  }
  std::cout << "\n";
  for (const auto& r : t.rows) {
    std::cout << fmt::format("{:<{}}", r.front(), w);
    for (std::size_t i = 1; i < r.size(); ++i) {
      std::cout << fmt::format("  {:>14}", r[i]);
    }
    std::cout << "\n";
  }
  return kExitOk;
}

int CheckLogCmd(const Options& o) {
  const ExperimentConfig cfg = Config(o);
  int status = kExitOk;
  for (const std::string& path : o.logs) {
    const LogCheck c = CheckRunLog(ReadRunLog(path), cfg.data.input_lower,
                                   cfg.data.input_upper);
    for (const std::string& m : c.messages) std::cout << path << ": " << m << "\n";
    std::cout << fmt::format("{}: {} (receding horizon {}, input identity {}, bounds {})\n",
                             path, c.ok ? "ok" : "FAILED", c.receding_horizon_errors,
                             c.input_identity_errors, c.input_bound_errors);
    if (!c.ok) status = kExitError;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offset-free NNARX MPC toolkit"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App* c) {
    c->add_option("--config", o.config, "YAML experiment config")->check(CLI::ExistingFile);
    c->add_option("--seed", o.seed, "Override the experiment seed");
    c->add_option("--out", o.out, "Output directory")->capture_default_str();
    c->add_flag("-v,--verbose", o.verbose, "Progress on stderr");
  };
  auto artifacts = [&o](CLI::App* c) {
    c->add_option("--model", o.model, "Model file (default OUT/model.json)");
    c->add_option("--controller", o.controller,
                  "Controller file (default OUT/controller.json)");
  };

  CLI::App* gen = app.add_subcommand("generate-data", "Simulate MPRS excitation data");
  common(gen);
  gen->add_option("--data", o.data, "Dataset directory (default OUT/data)");
  CLI::App* train = app.add_subcommand("train", "Train the NNARX model");
  common(train);
  train->add_option("--data", o.data, "Dataset directory (default OUT/data)");
  train->add_option("--model", o.model, "Model file (default OUT/model.json)");
  CLI::App* synth = app.add_subcommand("synthesize", "Design mu, w and the tube");
  common(synth);
  artifacts(synth);
  CLI::App* run = app.add_subcommand("run", "Closed-loop scenario against the plant");
  common(run);
  artifacts(run);
  run->add_option("--mode", o.mode, "nominal, tube or deb")
      ->check(CLI::IsMember({"nominal", "tube", "deb"}))
      ->capture_default_str();
  CLI::App* cmp = app.add_subcommand("compare", "Metric table across run logs");
  common(cmp);
  cmp->add_option("logs", o.logs, "Run log CSVs")->required()->check(CLI::ExistingFile);
  CLI::App* chk = app.add_subcommand("check-log", "Validate run log invariants");
  common(chk);
  chk->add_option("logs", o.logs, "Run log CSVs")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return GenerateDataCmd(o);
    if (*train) return TrainCmd(o);
    if (*synth) return SynthesizeCmd(o);
    if (*run) return RunCmd(o);
    if (*cmp) return CompareCmd(o);
    if (*chk) return CheckLogCmd(o);
  } catch (const SynthesisFailure& e) {
    std::cerr << "synthesis failed: " << e.what() << "\n";
    return kExitSynthesis;
  } catch (const TrainingFailure& e) {
    std::cerr << fmt::format("training failed at epoch {}: {}\n", e.epoch(), e.what());
    return kExitSynthesis;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
