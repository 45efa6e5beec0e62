#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nnmpc/nnarx.h"

namespace nnmpc {

struct MprsSpec {
  int levels = 6;
  int min_dwell = 5;
  int max_dwell = 40;
  int length = 0;
  Eigen::VectorXd lower;  // per input channel
  Eigen::VectorXd upper;
};

// Piecewise-constant multilevel excitation, one sample per row.
Eigen::MatrixXd GenerateMprs(const MprsSpec& spec, std::uint64_t seed);

// Input/output samples aligned by row: y row k is measured before u row k acts.
struct IoTrajectory {
  Eigen::MatrixXd u;
  Eigen::MatrixXd y;

  int length() const { return static_cast<int>(u.rows()); }
};

struct Dataset {
  std::vector<IoTrajectory> sequences;
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;
};

// Cuts num_train windows of subseq_len samples at seeded random offsets out
// of train_source; validation and test trajectories are taken whole.
Dataset MakeDataset(const IoTrajectory& train_source, int subseq_len,
                    int num_train, std::vector<IoTrajectory> validation,
                    std::vector<IoTrajectory> test, std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 2e-3;
  int max_epochs = 1500;
  double reg_weight = 1.0;
  double margin_offset = 0.02;
  int patience = 400;
  std::uint64_t seed = 1;
  int washout = 10;
  int batch_size = 20;
  double clip_norm = 5.0;

  void Validate() const;
};

struct ArchSpec {
  int lookback = 5;
  std::vector<int> hidden = {30};
  Activation activation = Activation::kTanh;
};

ModelParams InitializeParams(const ArchSpec& arch, int input_dim,
                             int output_dim, std::uint64_t seed);

struct LossResult {
  double loss = 0.0;
  double mse = 0.0;
  double margin = 0.0;
  Eigen::VectorXd gradient;  // ModelParams::Flatten order
};

// Free-run simulation MSE plus reg_weight * max(0, margin + margin_offset).
// Each sequence starts from the true state at sample N; predictions of
// samples N+1.. are scored after the first `washout` of them.
LossResult LossAndGradient(const ModelParams& params,
                           std::span<const IoTrajectory> batch,
                           double reg_weight, double margin_offset,
                           int washout, bool need_gradient = true);

// Shortest sequence accepted by LossAndGradient.
int MinSequenceLength(int lookback, int washout);

struct EpochRecord {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double margin = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> log;
  int best_epoch = -1;
  double best_val_mse = 0.0;
};

TrainResult Train(const Dataset& dataset, const ArchSpec& arch,
                  const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& progress = {});

struct OpenLoopResult {
  Eigen::MatrixXd predicted;  // samples N+1 .. T-1
  Eigen::MatrixXd actual;
};

OpenLoopResult OpenLoopPrediction(const ModelParams& params,
                                  const IoTrajectory& trajectory);

// 100 (1 - sum ||y - y_true|| / sum ||y_true - mean||), rows are samples.
double FitIndex(const Eigen::MatrixXd& predicted,
                const Eigen::MatrixXd& actual);

}  // namespace nnmpc
