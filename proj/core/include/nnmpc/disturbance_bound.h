#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "nnmpc/model_io.h"
#include "nnmpc/trainer.h"

namespace nnmpc {

// Maps a physical input sequence to the measured physical outputs, row by
// row (y row k measured before u row k is applied).
using IoResponse = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

struct DisturbanceBound {
  double scaled = 0.0;    // model units
  double physical = 0.0;  // plant units
  int worst_trajectory = -1;
  int worst_step = -1;
};

// Largest |y_k - y_model_k| over random excitation trajectories; the model
// starts from the plant's first N samples and then runs open loop. Trajectory
// i uses seed + i.
DisturbanceBound EstimateDisturbanceBound(const IoResponse& plant,
                                          const NnarxModel& model,
                                          int num_trajectories,
                                          const MprsSpec& excitation,
                                          std::uint64_t seed);

}  // namespace nnmpc
