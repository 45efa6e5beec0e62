#pragma once

#include <functional>
#include <string_view>

#include <Eigen/Dense>

namespace nnmpc {

// Residual form of the problem
//   min ||r(z)||^2  s.t.  h(z) = 0,  g(z) <= 0,  lower <= z <= upper.
struct NlpEvaluation {
  Eigen::VectorXd cost;
  Eigen::MatrixXd cost_jac;
  Eigen::VectorXd eq;
  Eigen::MatrixXd eq_jac;
  Eigen::VectorXd ineq;
  Eigen::MatrixXd ineq_jac;
};

struct NlpProblem {
  int num_vars = 0;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  // Fills every field; Jacobians only when need_jacobian is set.
  std::function<void(const Eigen::VectorXd& z, bool need_jacobian,
                     NlpEvaluation& out)>
      evaluate;
};

struct NlpOptions {
  double feasibility_tol = 1e-6;
  // Above this violation after the last round the result is infeasible.
  double infeasible_tol = 1e-4;
  double stationarity_tol = 1e-9;
  int max_outer = 40;
  int max_inner = 80;
  double initial_penalty = 10.0;
  double penalty_growth = 2.0;
  double max_penalty = 1e12;
};

enum class SolverStatus { kOptimal, kMaxIterations, kInfeasible };

std::string_view SolverStatusName(SolverStatus status);

struct NlpWarmStart {
  Eigen::VectorXd z;
  Eigen::VectorXd eq_multipliers;
  Eigen::VectorXd ineq_multipliers;
};

// At a solution J_r' r + J_h' eq_multipliers + J_g' ineq_multipliers = 0,
// the stationarity condition of (1/2) ||r||^2.
struct NlpResult {
  Eigen::VectorXd z;
  Eigen::VectorXd eq_multipliers;
  Eigen::VectorXd ineq_multipliers;
  SolverStatus status = SolverStatus::kMaxIterations;
  double objective = 0.0;
  double violation = 0.0;  // max(|h|_inf, max(g, 0))
  int iterations = 0;
  int outer_iterations = 0;
};

// Augmented Lagrangian outer loop (penalty doubled every round) around a
// projected Gauss-Newton / Levenberg-Marquardt inner solver with an active
// set on the bounds. Throws NumericalFailure on NaN.
NlpResult SolveNlp(const NlpProblem& problem, const NlpWarmStart& start,
                   const NlpOptions& options = {});

}  // namespace nnmpc
