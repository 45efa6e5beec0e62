#pragma once

#include <Eigen/Dense>

#include "nnmpc/box.h"
#include "nnmpc/nnarx.h"

namespace nnmpc {

struct Equilibrium {
  Eigen::VectorXd state;
  Eigen::VectorXd input;
  Eigen::VectorXd output;
  double residual = 0.0;       // ||f(x, u) - x||_inf
  bool extrapolated = false;   // output outside the trained range
  int iterations = 0;
};

struct EquilibriumOptions {
  Box input_box;     // admissible inputs; dimension 0 disables the check
  Box output_range;  // trained output range; dimension 0 disables the flag
  double tolerance = 1e-10;
  int max_iterations = 100;
};

// Newton on the reduced unknown u: eta(ConstantRegime(y, u), u) = y.
Equilibrium FindEquilibrium(const ModelParams& params,
                            const Eigen::VectorXd& output,
                            const Eigen::VectorXd& input_guess,
                            const EquilibriumOptions& options = {});

StateJacobians LinearizeAt(const ModelParams& params, const Equilibrium& eq);

struct SchurResult {
  bool is_schur = false;
  double spectral_radius = 0.0;
};

SchurResult SchurCheck(const Eigen::MatrixXd& a);

// C (I - A)^-1 B; throws InvalidPlant when I - A is singular.
Eigen::MatrixXd DcGain(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                       const Eigen::MatrixXd& c);

// mu = mu_hat [C (I - A)^-1 B]^-1.
Eigen::MatrixXd IntegratorGain(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& b,
                               const Eigen::MatrixXd& c, double mu_hat);

// Linearized pure-integral loop [[A, B], [-mu C, I]] for a given mu_hat.
Eigen::MatrixXd IntegralLoopMatrix(const Eigen::MatrixXd& a,
                                   const Eigen::MatrixXd& b,
                                   const Eigen::MatrixXd& c, double mu_hat);

constexpr double kMuHatResolution = 1e-3;

// Largest mu_hat in (0, 1] for which the integral loop is Schur, found by
// bisection to kMuHatResolution. Throws SynthesisFailure if none is.
double EstimateMuMax(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                     const Eigen::MatrixXd& c);
double EstimateMuMax(const ModelParams& params, const Equilibrium& eq);

struct AugmentedState {
  Eigen::VectorXd x;
  Eigen::VectorXd xi;
  Eigen::VectorXd theta;

  Eigen::VectorXd Stack() const;
  static AugmentedState Unstack(const Eigen::VectorXd& chi, int state_dim,
                                int input_dim);
};

// Selectors S_x, S_xi, S_theta with S * chi recovering each component.
Eigen::MatrixXd SelectState(int state_dim, int input_dim);
Eigen::MatrixXd SelectIntegrator(int state_dim, int input_dim);
Eigen::MatrixXd SelectDerivative(int state_dim, int input_dim);

struct AugmentedTarget {
  AugmentedState chi;
  Eigen::VectorXd v;
  Eigen::VectorXd output;
  Eigen::VectorXd input;
};

// chi = (x_eq, u_eq, 0) and v = 0, so gamma = v - theta vanishes.
AugmentedTarget MakeAugmentedTarget(const Equilibrium& eq);

struct AugmentedStepResult {
  AugmentedState next;
  Eigen::VectorXd output;  // C x
  Eigen::VectorXd input;   // xi + v - theta
};

AugmentedStepResult AugmentedStep(const ModelParams& params,
                                  const AugmentedState& chi,
                                  const Eigen::VectorXd& v,
                                  const Eigen::VectorXd& reference,
                                  const Eigen::MatrixXd& mu);

}  // namespace nnmpc
