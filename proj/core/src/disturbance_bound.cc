#include "nnmpc/disturbance_bound.h"

#include <cmath>

#include <fmt/format.h>

#include "nnmpc/errors.h"

namespace nnmpc {

using Eigen::MatrixXd;

DisturbanceBound EstimateDisturbanceBound(const IoResponse& plant,
                                          const NnarxModel& model,
                                          int num_trajectories,
                                          const MprsSpec& excitation,
                                          std::uint64_t seed) {
  if (num_trajectories < 1) {
    throw InvalidArgument("need at least one trajectory to bound the mismatch");
  }
  const ModelParams& params = model.params;
  if (excitation.length < params.lookback + 2) {
    throw InvalidArgument(fmt::format(
        "trajectory length {} is too short for lookback {}", excitation.length,
        params.lookback));
  }
  DisturbanceBound bound;
  for (int i = 0; i < num_trajectories; ++i) {
    const MatrixXd u = GenerateMprs(excitation, seed + i);
    const MatrixXd y = plant(u);
    if (y.rows() != u.rows() || y.cols() != params.output_dim) {
      throw InvalidArgument("plant response has the wrong shape");
    }
    IoTrajectory scaled{model.input_scaler.ToScaledRows(u),
                        model.output_scaler.ToScaledRows(y)};
    const OpenLoopResult ol = OpenLoopPrediction(params, scaled);
    for (Eigen::Index k = 0; k < ol.predicted.rows(); ++k) {
      for (Eigen::Index c = 0; c < ol.predicted.cols(); ++c) {
        const double err = std::abs(ol.predicted(k, c) - ol.actual(k, c));
        if (err > bound.scaled) {
          bound.scaled = err;
          bound.physical = err * std::abs(model.output_scaler.scale[c]);
          bound.worst_trajectory = i;
          bound.worst_step = static_cast<int>(k) + params.lookback + 1;
        }
      }
    }
  }
  return bound;
}

}  // namespace nnmpc
