#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nnmpc/nlp.h"
#include "nnmpc/ocp.h"
#include "nnmpc/plant.h"
#include "nnmpc/trainer.h"

namespace nnmpc::harness {

struct DataSpec {
  int levels = 8;
  int min_dwell = 5;
  int max_dwell = 50;
  double input_lower = 0.05;
  double input_upper = 0.18;
  int train_length = 2500;
  int validation_count = 30;
  int test_count = 1;
  int eval_length = 1000;
  // Gas flow whose steady state initializes every data trajectory.
  double initial_input = 0.115;
};

struct TrainingSpec {
  ArchSpec arch;
  int subsequence_length = 400;
  int subsequence_count = 120;
  TrainConfig train;
};

struct ControllerSpec {
  int horizon = 50;
  double r_e = 10.0;
  double r_u = 0.1;
  double q_xi = 1.0;
  double q_theta = 1e-5;
  double terminal_tolerance = 1e-6;
  WarmStartPolicy warm_start = WarmStartPolicy::kShift;
  NlpOptions solver;
  // Output at which mu is designed; negative picks the first reference.
  double design_output = 321.0;
  // mu_hat = mu_hat_factor * mu_check unless mu_hat is given (> 0).
  double mu_hat = -1.0;
  double mu_hat_factor = 0.35;
  // Kelvin; negative means estimate from data.
  double w_max = -1.0;
  int bound_trajectories = 30;
  int bound_length = 1000;
  // Output constraint: trained range widened by this fraction per side.
  double output_margin = 0.1;
  int mhe_horizon = 10;
  double mhe_prior = 1.0;
};

struct ReferencePoint {
  double t = 0.0;
  double value = 0.0;
};

struct DisturbancePoint {
  double t = 0.0;
  double inlet_temp = 298.0;
  double flow = 1.0;
};

struct ScenarioSpec {
  double duration = 60000.0;
  std::vector<ReferencePoint> reference;
  std::vector<DisturbancePoint> disturbance;
  // Start of the window used for the tube containment check.
  double transition_time = 18000.0;
  double settling_band = 0.1;
  int steady_state_samples = 10;

  double ReferenceAt(double t) const;
  PlantDisturbance DisturbanceAt(double t, const PlantParams& params) const;
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  PlantParams plant;
  double sample_time = 120.0;
  int substeps = 120;
  DataSpec data;
  TrainingSpec training;
  ControllerSpec controller;
  ScenarioSpec scenario;

  void Validate() const;
};

ExperimentConfig DefaultConfig();
ExperimentConfig LoadConfig(const std::string& path);
ExperimentConfig ParseConfig(const std::string& yaml_text);

}  // namespace nnmpc::harness
