#include "nnmpc/nlp.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "nnmpc/errors.h"

namespace nnmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view SolverStatusName(SolverStatus status) {
  switch (status) {
    case SolverStatus::kOptimal:
      return "optimal";
    case SolverStatus::kMaxIterations:
      return "max-iter";
    case SolverStatus::kInfeasible:
      return "infeasible";
  }
  return "unknown";
}

namespace {

struct Merit {
  double value = 0.0;
  VectorXd residual;
  MatrixXd jacobian;
};

class AugmentedLagrangian {
 public:
  AugmentedLagrangian(const NlpProblem& problem) : problem_(problem) {}

  void set(const VectorXd& lambda, const VectorXd& nu, double rho) {
    lambda_ = lambda;
    nu_ = nu;
    rho_ = rho;
  }

  // Stacked residual [r; sqrt(rho)(h + lambda/rho); sqrt(rho) max(0, g + nu/rho)].
  Merit Evaluate(const VectorXd& z, bool need_jacobian,
                 NlpEvaluation& eval) const {
    problem_.evaluate(z, need_jacobian, eval);
    const Eigen::Index nr = eval.cost.size();
    const Eigen::Index ne = eval.eq.size();
    const Eigen::Index ni = eval.ineq.size();
    const double s = std::sqrt(rho_);
    Merit m;
    m.residual.resize(nr + ne + ni);
    m.residual.head(nr) = eval.cost;
    m.residual.segment(nr, ne) = s * (eval.eq + lambda_ / rho_);
    VectorXd shifted = eval.ineq + nu_ / rho_;
    for (Eigen::Index i = 0; i < ni; ++i) {
      m.residual[nr + ne + i] = s * std::max(0.0, shifted[i]);
    }
    if (need_jacobian) {
      m.jacobian.resize(nr + ne + ni, problem_.num_vars);
      m.jacobian.topRows(nr) = eval.cost_jac;
      m.jacobian.middleRows(nr, ne) = s * eval.eq_jac;
      for (Eigen::Index i = 0; i < ni; ++i) {
        if (shifted[i] > 0.0) {
          m.jacobian.row(nr + ne + i) = s * eval.ineq_jac.row(i);
        } else {
          m.jacobian.row(nr + ne + i).setZero();
        }
      }
    }
    m.value = m.residual.squaredNorm();
    if (!std::isfinite(m.value)) {
      throw NumericalFailure("NLP evaluation produced a non-finite value");
    }
    return m;
  }

 private:
  const NlpProblem& problem_;
  VectorXd lambda_;
  VectorXd nu_;
  double rho_ = 1.0;
};

double Violation(const NlpEvaluation& eval) {
  double v = 0.0;
  if (eval.eq.size() > 0) v = eval.eq.cwiseAbs().maxCoeff();
  if (eval.ineq.size() > 0) v = std::max(v, eval.ineq.maxCoeff());
  return v;
}

VectorXd Project(const NlpProblem& p, const VectorXd& z) {
  return z.cwiseMax(p.lower).cwiseMin(p.upper);
}

// Projected gradient step length, used as the inner stationarity measure.
double ProjectedGradientNorm(const NlpProblem& p, const VectorXd& z,
                             const VectorXd& grad) {
  return (z - Project(p, z - grad)).lpNorm<Eigen::Infinity>();
}

int MinimizeMerit(const NlpProblem& p, const AugmentedLagrangian& al,
                  const NlpOptions& opt, VectorXd& z, NlpEvaluation& eval) {
  const int nv = p.num_vars;
  Merit merit = al.Evaluate(z, true, eval);
  double damping = 1e-6;
  int iterations = 0;
  for (; iterations < opt.max_inner; ++iterations) {
    const VectorXd grad = 2.0 * merit.jacobian.transpose() * merit.residual;
    if (ProjectedGradientNorm(p, z, grad) <= opt.stationarity_tol) break;

    std::vector<int> free;
    free.reserve(nv);
    for (int i = 0; i < nv; ++i) {
      const double width = 1e-12 * std::max(1.0, std::abs(z[i]));
      const bool at_lower = z[i] <= p.lower[i] + width && grad[i] > 0.0;
      const bool at_upper = z[i] >= p.upper[i] - width && grad[i] < 0.0;
      if (!at_lower && !at_upper) free.push_back(i);
    }
    VectorXd step = VectorXd::Zero(nv);
    if (!free.empty()) {
      const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
      MatrixXd jf(merit.jacobian.rows(), nf);
      for (Eigen::Index c = 0; c < nf; ++c) {
        jf.col(c) = merit.jacobian.col(free[c]);
      }
      MatrixXd h = jf.transpose() * jf;
      const VectorXd rhs = -(jf.transpose() * merit.residual);
      const double scale = std::max(1.0, h.diagonal().maxCoeff());
      h.diagonal().array() += damping * scale;
      const VectorXd df = h.ldlt().solve(rhs);
      for (Eigen::Index c = 0; c < nf; ++c) step[free[c]] = df[c];
    }

    bool accepted = false;
    double alpha = 1.0;
    for (int ls = 0; ls < 30; ++ls) {
      VectorXd trial = Project(p, z + alpha * step);
      // Fall back to a projected gradient direction if GN stalls.
      if (ls == 20) {
        alpha = 1.0 / std::max(1.0, grad.lpNorm<Eigen::Infinity>());
        step = -grad;
        trial = Project(p, z + alpha * step);
      }
      NlpEvaluation trial_eval;
      const Merit trial_merit = al.Evaluate(trial, false, trial_eval);
      const double predicted = grad.dot(trial - z);
      if (trial_merit.value <= merit.value + 1e-4 * predicted &&
          trial_merit.value < merit.value) {
        const double decrease = merit.value - trial_merit.value;
        const double moved = (trial - z).lpNorm<Eigen::Infinity>();
        z = trial;
        merit = al.Evaluate(z, true, eval);
        accepted = true;
        damping = std::max(1e-12, damping * (alpha == 1.0 ? 0.3 : 1.0));
        if (decrease <= 1e-15 * std::max(1.0, merit.value) && moved < 1e-13) {
          return iterations + 1;
        }
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      damping *= 10.0;
      if (damping > 1e8) break;
    }
  }
  return iterations;
}

}  // namespace

NlpResult SolveNlp(const NlpProblem& problem, const NlpWarmStart& start,
                   const NlpOptions& options) {
  if (problem.num_vars < 0 || problem.lower.size() != problem.num_vars ||
      problem.upper.size() != problem.num_vars ||
      start.z.size() != problem.num_vars || !problem.evaluate) {
    throw InvalidArgument("NLP problem is not well formed");
  }
  if ((problem.lower.array() > problem.upper.array()).any()) {
    throw InvalidArgument("NLP bounds are inverted");
  }
  VectorXd z = Project(problem, start.z);
  NlpEvaluation eval;
  problem.evaluate(z, false, eval);
  VectorXd lambda = start.eq_multipliers.size() == eval.eq.size()
                        ? start.eq_multipliers
                        : VectorXd::Zero(eval.eq.size());
  VectorXd nu = start.ineq_multipliers.size() == eval.ineq.size()
                    ? VectorXd(start.ineq_multipliers.cwiseMax(0.0))
                    : VectorXd(VectorXd::Zero(eval.ineq.size()));

  AugmentedLagrangian al(problem);
  double rho = options.initial_penalty;
  NlpResult result;
  int total = 0;
  double violation = 0.0;
  int outer = 0;
  for (; outer < options.max_outer; ++outer) {
    al.set(lambda, nu, rho);
    total += MinimizeMerit(problem, al, options, z, eval);
    violation = Violation(eval);
    lambda += rho * eval.eq;
    nu = (nu + rho * eval.ineq).cwiseMax(0.0);
    if (violation <= options.feasibility_tol) {
      ++outer;
      break;
    }
    rho = std::min(options.max_penalty, rho * options.penalty_growth);
  }
  result.z = z;
  result.eq_multipliers = lambda;
  result.ineq_multipliers = nu;
  result.objective = eval.cost.squaredNorm();
  result.violation = violation;
  result.iterations = total;
  result.outer_iterations = outer;
  if (!std::isfinite(result.objective) || !z.allFinite()) {
    throw NumericalFailure("NLP solver produced a non-finite iterate");
  }
  if (violation <= options.feasibility_tol) {
    result.status = SolverStatus::kOptimal;
  } else if (violation > options.infeasible_tol) {
    result.status = SolverStatus::kInfeasible;
  } else {
    result.status = SolverStatus::kMaxIterations;
  }
  return result;
}

}  // namespace nnmpc
