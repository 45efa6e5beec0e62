#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnmpc/box.h"
#include "nnmpc/controller.h"
#include "nnmpc/harness/config.h"
#include "nnmpc/harness/csv.h"
#include "nnmpc/harness/metrics.h"
#include "nnmpc/model_io.h"
#include "nnmpc/trainer.h"

namespace nnmpc::harness {

// Physical-unit plant response from the data-generation initial state.
Eigen::MatrixXd SimulatePlantResponse(const ExperimentConfig& cfg,
                                      const Eigen::MatrixXd& inputs);

struct ExperimentData {
  IoTrajectory train;
  std::vector<IoTrajectory> validation;
  std::vector<IoTrajectory> test;
};

ExperimentData GenerateData(const ExperimentConfig& cfg);
void SaveData(const ExperimentData& data, const std::string& dir,
              double sample_time);
ExperimentData LoadData(const std::string& dir);
std::string DescribeData(const ExperimentData& data);

struct TrainingOutcome {
  NnarxModel model;
  TrainResult result;
  double test_fit = 0.0;
  double margin = 0.0;
  double seconds = 0.0;
};

TrainingOutcome TrainModel(const ExperimentConfig& cfg,
                           const ExperimentData& data, bool verbose = false);
void WriteTrainingLog(const std::string& path, const TrainResult& result);

struct SynthesisOutcome {
  double design_output = 0.0;  // K
  double mu_check = 0.0;
  double mu_hat = 0.0;
  Eigen::MatrixXd mu;  // scaled units
  double dc_gain = 0.0;
  double spectral_radius = 0.0;
  double w_max_scaled = 0.0;
  double w_max_physical = 0.0;
  bool w_estimated = false;
  Box omega;
  OcpConfig ocp;
  int mhe_horizon = 10;
  double mhe_prior = 1.0;
  // Per scenario setpoint: output, equilibrium input, residual, radius of
  // A_delta and of the integral loop under the chosen mu.
  Eigen::MatrixXd equilibria;
};

// Scaled state/input boxes for the model: trained output range widened by
// the configured margin on every y slot, and the input bounds on u slots.
Box InputBox(const ExperimentConfig& cfg, const NnarxModel& model);
Box StateBox(const ExperimentConfig& cfg, const NnarxModel& model);

SynthesisOutcome Synthesize(const ExperimentConfig& cfg,
                            const NnarxModel& model);
void SaveController(const SynthesisOutcome& s, const std::string& path);
SynthesisOutcome LoadController(const std::string& path);
std::string DescribeSynthesis(const SynthesisOutcome& s,
                              const NnarxModel& model);

struct RunOutcome {
  std::vector<ControlRecord> log;
  RunMetrics metrics;
};

RunOutcome RunScenario(const ExperimentConfig& cfg, const NnarxModel& model,
                       const SynthesisOutcome& synthesis, ControllerMode mode,
                       bool verbose = false);

MetricOptions MetricOptionsFor(const ExperimentConfig& cfg,
                               const SynthesisOutcome* synthesis,
                               ControllerMode mode);

// Aligned metric table for several logs: one column per log.
CsvTable CompareLogs(const std::vector<std::string>& paths,
                     const ExperimentConfig& cfg);

}  // namespace nnmpc::harness
