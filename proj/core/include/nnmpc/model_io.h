#pragma once

#include <string>

#include <Eigen/Dense>

#include "nnmpc/nnarx.h"

namespace nnmpc {

// Affine map physical = offset + scale * scaled, applied channel-wise.
struct ChannelScaler {
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;

  // Maps [lo, hi] onto [-1, 1]; degenerate channels get scale 1.
  static ChannelScaler FromRange(const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi);
  static ChannelScaler Identity(int dim);

  Eigen::VectorXd ToScaled(const Eigen::VectorXd& physical) const;
  Eigen::VectorXd ToPhysical(const Eigen::VectorXd& scaled) const;
  // Rows are samples.
  Eigen::MatrixXd ToScaledRows(const Eigen::MatrixXd& physical) const;
  Eigen::MatrixXd ToPhysicalRows(const Eigen::MatrixXd& scaled) const;
};

// A trained network together with the normalization it was trained under.
struct NnarxModel {
  ModelParams params;
  ChannelScaler input_scaler;
  ChannelScaler output_scaler;
};

std::string SerializeModel(const NnarxModel& model);
NnarxModel ParseModel(const std::string& text);

void SaveModel(const NnarxModel& model, const std::string& path);
NnarxModel LoadModel(const std::string& path);

}  // namespace nnmpc
