#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnmpc/box.h"
#include "nnmpc/nlp.h"
#include "nnmpc/nnarx.h"
#include "nnmpc/offset_free.h"

namespace nnmpc {

enum class WarmStartPolicy { kShift, kTarget };

std::string WarmStartPolicyName(WarmStartPolicy policy);
WarmStartPolicy ParseWarmStartPolicy(const std::string& name);

// Horizon, weights and constraint sets. Everything is in the model's scaled
// units. The state weight is R = diag(R_e, R_u) repeated over the N blocks.
struct OcpConfig {
  int horizon = 50;
  double r_e = 10.0;
  double r_u = 0.1;
  double q_xi = 1.0;
  double q_theta = 1e-5;
  Box input_box;  // U, dimension m
  Box state_box;  // X, dimension n
  double terminal_tolerance = 1e-6;
  NlpOptions solver;
  WarmStartPolicy warm_start = WarmStartPolicy::kShift;

  void Validate(int state_dim, int input_dim) const;
};

struct OcpSolution {
  std::vector<Eigen::VectorXd> v;   // N_p moves
  std::vector<Eigen::VectorXd> u;   // N_p applied inputs xi + v - theta
  std::vector<Eigen::VectorXd> y;   // N_p + 1 predicted outputs C x_i
  std::vector<AugmentedState> chi;  // N_p + 1 predicted augmented states
  Eigen::VectorXd initial_state;    // x_{0|k}
  double objective = 0.0;
  double terminal_residual = 0.0;
  double violation = 0.0;
  SolverStatus status = SolverStatus::kMaxIterations;
  int iterations = 0;
  double solve_time_ms = 0.0;
  NlpWarmStart raw;  // decision vector and multipliers, for warm starting
};

// Decision layout: [x_{0|k} (tube only); u_0; ...; u_{N_p-1}]. The moves
// are recovered as v_i = u_i - xi_i + theta_i.
NlpWarmStart TargetWarmStart(const AugmentedTarget& target,
                             const OcpConfig& cfg, bool tube,
                             const Eigen::VectorXd& x0);
NlpWarmStart ShiftWarmStart(const OcpSolution& previous,
                            const AugmentedTarget& target,
                            const OcpConfig& cfg, bool tube);

OcpSolution SolveNominalOcp(const ModelParams& params,
                            const AugmentedState& chi,
                            const AugmentedTarget& target,
                            const Eigen::MatrixXd& mu, const OcpConfig& cfg,
                            const NlpWarmStart* warm_start = nullptr);

// Throws ConfigurationError when X minus Omega is empty.
OcpSolution SolveTubeOcp(const ModelParams& params, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& xi,
                         const Eigen::VectorXd& theta,
                         const AugmentedTarget& target,
                         const Eigen::MatrixXd& mu, const Box& omega,
                         const OcpConfig& cfg,
                         const NlpWarmStart* warm_start = nullptr);

}  // namespace nnmpc
