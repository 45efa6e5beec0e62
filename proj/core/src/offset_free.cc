#include "nnmpc/offset_free.h"

#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "nnmpc/errors.h"

namespace nnmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::string Join(const VectorXd& v) {
  return fmt::format("[{}]", fmt::join(v.data(), v.data() + v.size(), ", "));
}

}  // namespace

Equilibrium FindEquilibrium(const ModelParams& params, const VectorXd& output,
                            const VectorXd& input_guess,
                            const EquilibriumOptions& options) {
  params.Validate();
  if (output.size() != params.output_dim ||
      input_guess.size() != params.input_dim) {
    throw InvalidArgument("equilibrium output/guess has the wrong dimension");
  }
  const StateLayout layout(params);
  const MatrixXd s_u = layout.InputSlotsSelector();
  auto residual_of = [&](const VectorXd& u) {
    return VectorXd(
        EvaluateNetwork(params, layout.ConstantRegime(output, u), u) - output);
  };

  VectorXd u = input_guess;
  VectorXd r = residual_of(u);
  int it = 0;
  while (r.lpNorm<Eigen::Infinity>() > options.tolerance) {
    if (it >= options.max_iterations) {
      throw EquilibriumNotFound(fmt::format(
          "no equilibrium for output {} after {} iterations (residual {:.3e})",
          Join(output), it, r.lpNorm<Eigen::Infinity>()));
    }
    ++it;
    const NetworkJacobian jac =
        EvaluateNetworkJacobian(params, layout.ConstantRegime(output, u), u);
    const MatrixXd j = jac.d_state * s_u + jac.d_input;
    const VectorXd step = j.completeOrthogonalDecomposition().solve(-r);
    if (!step.allFinite()) {
      throw EquilibriumNotFound("singular equilibrium Jacobian");
    }
    double alpha = 1.0;
    VectorXd trial = u + step;
    VectorXd trial_r = residual_of(trial);
    while (trial_r.norm() >= r.norm() && alpha > 1e-8) {
      alpha *= 0.5;
      trial = u + alpha * step;
      trial_r = residual_of(trial);
    }
    if (trial_r.norm() >= r.norm()) {
      throw EquilibriumNotFound(
          fmt::format("equilibrium search stalled at residual {:.3e}",
                      r.lpNorm<Eigen::Infinity>()));
    }
    u = trial;
    r = trial_r;
  }

  Equilibrium eq;
  eq.input = u;
  eq.output = output;
  eq.state = layout.ConstantRegime(output, u);
  eq.residual = (Step(params, eq.state, u) - eq.state).lpNorm<Eigen::Infinity>();
  eq.iterations = it;
  if (options.output_range.dim() == params.output_dim) {
    eq.extrapolated = !options.output_range.Contains(output);
  }
  if (options.input_box.dim() == params.input_dim &&
      !options.input_box.Contains(u, 1e-12)) {
    throw InfeasibleEquilibrium(fmt::format(
        "equilibrium input {} for output {} lies outside the input box",
        Join(u), Join(output)));
  }
  return eq;
}

StateJacobians LinearizeAt(const ModelParams& params, const Equilibrium& eq) {
  return Jacobians(params, eq.state, eq.input);
}

SchurResult SchurCheck(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("Schur check needs a square matrix");
  SchurResult out;
  if (a.size() == 0) {
    out.is_schur = true;
    return out;
  }
  Eigen::EigenSolver<MatrixXd> solver(a, false);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("eigenvalue computation failed");
  }
  out.spectral_radius = solver.eigenvalues().cwiseAbs().maxCoeff();
  out.is_schur = out.spectral_radius < 1.0 - 1e-9;
  return out;
}

MatrixXd DcGain(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c) {
  const MatrixXd i_minus_a = MatrixXd::Identity(a.rows(), a.cols()) - a;
  Eigen::FullPivLU<MatrixXd> lu(i_minus_a);
  if (!lu.isInvertible()) {
    throw InvalidPlant("I - A is singular; the plant has a pole at 1");
  }
  return c * lu.solve(b);
}

MatrixXd IntegratorGain(const MatrixXd& a, const MatrixXd& b,
                        const MatrixXd& c, double mu_hat) {
  const MatrixXd g = DcGain(a, b, c);
  if (g.rows() != g.cols()) {
    throw InvalidPlant("DC gain is not square");
  }
  Eigen::FullPivLU<MatrixXd> lu(g);
  if (!lu.isInvertible() ||
      std::abs(lu.determinant()) < 1e-12 * std::max(1.0, g.norm())) {
    throw InvalidPlant("DC gain matrix is singular (invariant zero at 1)");
  }
  return mu_hat * lu.inverse();
}

MatrixXd IntegralLoopMatrix(const MatrixXd& a, const MatrixXd& b,
                            const MatrixXd& c, double mu_hat) {
  const MatrixXd mu = IntegratorGain(a, b, c, mu_hat);
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  MatrixXd loop(n + m, n + m);
  loop.topLeftCorner(n, n) = a;
  loop.topRightCorner(n, m) = b;
  loop.bottomLeftCorner(m, n) = -mu * c;
  loop.bottomRightCorner(m, m).setIdentity();
  return loop;
}

double EstimateMuMax(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c) {
  auto stable = [&](double mu_hat) {
    return SchurCheck(IntegralLoopMatrix(a, b, c, mu_hat)).is_schur;
  };
  if (stable(1.0)) return 1.0;
  double lo = kMuHatResolution;
  if (!stable(lo)) {
    throw SynthesisFailure(
        "no stabilizing integrator gain: the loop is unstable even for "
        "mu_hat = 1e-3");
  }
  // Integer grid keeps the result an exact multiple of the resolution.
  int lo_k = 1;
  int hi_k = static_cast<int>(std::lround(1.0 / kMuHatResolution));
  while (hi_k - lo_k > 1) {
    const int mid = (lo_k + hi_k) / 2;
    if (stable(mid * kMuHatResolution)) {
      lo_k = mid;
    } else {
      hi_k = mid;
    }
  }
  return lo_k * kMuHatResolution;
}

double EstimateMuMax(const ModelParams& params, const Equilibrium& eq) {
  const StateJacobians jac = LinearizeAt(params, eq);
  if (!SchurCheck(jac.A).is_schur) {
    throw SynthesisFailure("linearization at the equilibrium is not Schur stable");
  }
  const MatrixXd c = BuildStructuralMatrices(params.lookback, params.input_dim,
                                             params.output_dim)
                         .C;
  return EstimateMuMax(jac.A, jac.B, c);
}

VectorXd AugmentedState::Stack() const {
  VectorXd chi(x.size() + xi.size() + theta.size());
  chi << x, xi, theta;
  return chi;
}

AugmentedState AugmentedState::Unstack(const VectorXd& chi, int state_dim,
                                       int input_dim) {
  if (chi.size() != state_dim + 2 * input_dim) {
    throw InvalidArgument("augmented state has the wrong dimension");
  }
  return {chi.head(state_dim), chi.segment(state_dim, input_dim),
          chi.tail(input_dim)};
}

MatrixXd SelectState(int n, int m) {
  MatrixXd s = MatrixXd::Zero(n, n + 2 * m);
  s.leftCols(n).setIdentity();
  return s;
}

MatrixXd SelectIntegrator(int n, int m) {
  MatrixXd s = MatrixXd::Zero(m, n + 2 * m);
  s.middleCols(n, m).setIdentity();
  return s;
}

MatrixXd SelectDerivative(int n, int m) {
  MatrixXd s = MatrixXd::Zero(m, n + 2 * m);
  s.rightCols(m).setIdentity();
  return s;
}

AugmentedTarget MakeAugmentedTarget(const Equilibrium& eq) {
  AugmentedTarget t;
  const Eigen::Index m = eq.input.size();
  t.chi = {eq.state, eq.input, VectorXd::Zero(m)};
  t.v = VectorXd::Zero(m);
  t.output = eq.output;
  t.input = eq.input;
  return t;
}

AugmentedStepResult AugmentedStep(const ModelParams& params,
                                  const AugmentedState& chi, const VectorXd& v,
                                  const VectorXd& reference,
                                  const MatrixXd& mu) {
  const StateLayout layout(params);
  if (chi.x.size() != layout.dim() || chi.xi.size() != params.input_dim ||
      chi.theta.size() != params.input_dim || v.size() != params.input_dim ||
      reference.size() != params.output_dim ||
      mu.rows() != params.input_dim || mu.cols() != params.output_dim) {
    throw InvalidArgument("augmented step arguments have inconsistent shapes");
  }
  AugmentedStepResult out;
  out.output = layout.CurrentOutput(chi.x);
  out.input = chi.xi + (v - chi.theta);
  out.next.x = Step(params, chi.x, out.input);
  out.next.xi = chi.xi + mu * (reference - out.output);
  out.next.theta = v;
  return out;
}

}  // namespace nnmpc
