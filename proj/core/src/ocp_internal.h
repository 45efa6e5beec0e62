#pragma once

#include <vector>

#include <Eigen/Dense>

#include "nnmpc/box.h"
#include "nnmpc/nlp.h"
#include "nnmpc/nnarx.h"
#include "nnmpc/offset_free.h"

namespace nnmpc::internal {

// Single-shooting transcription shared by the offset-free and DEB
// controllers. Without `augmented` the xi/theta blocks are dropped and the
// decision inputs are applied directly.
struct ShootingSpec {
  int horizon = 1;
  bool augmented = true;
  bool free_initial_state = false;
  Eigen::VectorXd x0;
  Eigen::VectorXd xi0;
  Eigen::VectorXd theta0;
  Box initial_box;
  Eigen::VectorXd x_target;
  Eigen::VectorXd u_target;
  Eigen::VectorXd y_target;
  Eigen::MatrixXd mu;
  double r_e_state = 0.0;
  double r_u_state = 0.0;
  double r_e = 0.0;
  double r_u = 0.0;
  double q_xi = 0.0;
  double q_theta = 0.0;
  Box input_box;
  Eigen::VectorXd y_lower;
  Eigen::VectorXd y_upper;
  double terminal_tolerance = 1e-6;
};

struct ShootingResult {
  NlpResult nlp;
  std::vector<Eigen::VectorXd> v;
  std::vector<Eigen::VectorXd> u;
  std::vector<Eigen::VectorXd> y;
  std::vector<AugmentedState> chi;
  Eigen::VectorXd initial_state;
  double terminal_residual = 0.0;
  double solve_time_ms = 0.0;
};

ShootingResult SolveShooting(const ModelParams& params,
                             const ShootingSpec& spec,
                             const NlpWarmStart& start,
                             const NlpOptions& options);

}  // namespace nnmpc::internal
