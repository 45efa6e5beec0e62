#include "nnmpc/ocp.h"

#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "nnmpc/errors.h"
#include "ocp_internal.h"

namespace nnmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string WarmStartPolicyName(WarmStartPolicy policy) {
  return policy == WarmStartPolicy::kShift ? "shift" : "target";
}

WarmStartPolicy ParseWarmStartPolicy(const std::string& name) {
  if (name == "shift") return WarmStartPolicy::kShift;
  if (name == "target") return WarmStartPolicy::kTarget;
  throw ConfigurationError(fmt::format("unknown warm-start policy '{}'", name));
}

void OcpConfig::Validate(int state_dim, int input_dim) const {
  if (horizon < 1) throw ConfigurationError("horizon must be >= 1");
  if (!(r_e > 0.0) || !(q_xi > 0.0) || r_u < 0.0 || q_theta < 0.0) {
    throw ConfigurationError(
        "weights must be nonnegative with R_e, Q_xi strictly positive");
  }
  if (input_box.dim() != input_dim || input_box.empty()) {
    throw ConfigurationError("input box is missing or has the wrong dimension");
  }
  if (state_box.dim() != state_dim || state_box.empty()) {
    throw ConfigurationError("state box is missing or has the wrong dimension");
  }
  if (!(terminal_tolerance > 0.0)) {
    throw ConfigurationError("terminal tolerance must be positive");
  }
}

namespace internal {

ShootingResult SolveShooting(const ModelParams& params,
                             const ShootingSpec& spec,
                             const NlpWarmStart& start,
                             const NlpOptions& options) {
  const StateLayout layout(params);
  const int n = layout.dim();
  const int m = params.input_dim;
  const int p = params.output_dim;
  const int d = layout.block_dim();
  const int np = spec.horizon;
  const int off = spec.free_initial_state ? n : 0;
  const int nz = off + np * m;
  const int y_slot = layout.output_offset(params.lookback - 1);
  const int u_slot = layout.input_offset(params.lookback - 1);
  const bool aug = spec.augmented;
  const int state_res = n + (aug ? 2 * m : 0);
  const int rows_per_stage = state_res + p + m;
  const int n_cost = (np + 1) * rows_per_stage;
  const int n_eq = n + (aug ? 2 * m : 0);
  const int n_ineq = 2 * p * std::max(0, np - 1);

  NlpProblem problem;
  problem.num_vars = nz;
  problem.lower.resize(nz);
  problem.upper.resize(nz);
  if (spec.free_initial_state) {
    problem.lower.head(n) = spec.initial_box.lo();
    problem.upper.head(n) = spec.initial_box.hi();
  }
  for (int i = 0; i < np; ++i) {
    problem.lower.segment(off + i * m, m) = spec.input_box.lo();
    problem.upper.segment(off + i * m, m) = spec.input_box.hi();
  }

  VectorXd sqrt_qx(n);
  for (int b = 0; b < params.lookback; ++b) {
    sqrt_qx.segment(layout.output_offset(b), p).setConstant(std::sqrt(spec.r_e_state));
    sqrt_qx.segment(layout.input_offset(b), m).setConstant(std::sqrt(spec.r_u_state));
  }
  const double s_xi = std::sqrt(spec.q_xi);
  const double s_th = std::sqrt(spec.q_theta);
  const double s_re = std::sqrt(spec.r_e);
  const double s_ru = std::sqrt(spec.r_u);
  const MatrixXd& mu = spec.mu;

  problem.evaluate = [&, n, m, p, d, np, off, nz](const VectorXd& z, bool jac,
                                                  NlpEvaluation& out) {
    out.cost.resize(n_cost);
    out.eq.resize(n_eq);
    out.ineq.resize(n_ineq);
    if (jac) {
      out.cost_jac.setZero(n_cost, nz);
      out.eq_jac.setZero(n_eq, nz);
      out.ineq_jac.setZero(n_ineq, nz);
    }
    VectorXd x = spec.free_initial_state ? VectorXd(z.head(n)) : spec.x0;
    VectorXd xi = spec.xi0;
    VectorXd th = spec.theta0;
    MatrixXd sx = MatrixXd::Zero(n, nz);
    MatrixXd sxi = MatrixXd::Zero(m, nz);
    MatrixXd sth = MatrixXd::Zero(m, nz);
    if (spec.free_initial_state && jac) sx.leftCols(n).setIdentity();

    VectorXd u_prev;
    for (int i = 0; i <= np; ++i) {
      const int ui = std::min(i, np - 1);
      const VectorXd u = z.segment(off + ui * m, m);
      const int row = i * rows_per_stage;
      // State deviation.
      out.cost.segment(row, n) = sqrt_qx.cwiseProduct(x - spec.x_target);
      if (jac) out.cost_jac.block(row, 0, n, nz) = sqrt_qx.asDiagonal() * sx;
      int r = row + n;
      if (aug) {
        out.cost.segment(r, m) = s_xi * (xi - spec.u_target);
        out.cost.segment(r + m, m) = s_th * th;
        if (jac) {
          out.cost_jac.block(r, 0, m, nz) = s_xi * sxi;
          out.cost_jac.block(r + m, 0, m, nz) = s_th * sth;
        }
        r += 2 * m;
      }
      // Output/input deviation.
      out.cost.segment(r, p) = s_re * (x.segment(y_slot, p) - spec.y_target);
      out.cost.segment(r + p, m) = s_ru * (u - spec.u_target);
      if (jac) {
        out.cost_jac.block(r, 0, p, nz) = s_re * sx.middleRows(y_slot, p);
        out.cost_jac.block(r + p, off + ui * m, m, m).diagonal().setConstant(s_ru);
      }
      if (i >= 1 && i <= np - 1) {
        const int ir = 2 * p * (i - 1);
        out.ineq.segment(ir, p) = spec.y_lower - x.segment(y_slot, p);
        out.ineq.segment(ir + p, p) = x.segment(y_slot, p) - spec.y_upper;
        if (jac) {
          out.ineq_jac.block(ir, 0, p, nz) = -sx.middleRows(y_slot, p);
          out.ineq_jac.block(ir + p, 0, p, nz) = sx.middleRows(y_slot, p);
        }
      }
      if (i == np) break;

      // Propagate.
      VectorXd next(n);
      MatrixXd snext(jac ? n : 0, nz);
      if (jac) {
        const NetworkJacobian nj = EvaluateNetworkJacobian(params, x, u);
        next.head(n - d) = x.tail(n - d);
        next.segment(y_slot, p) = nj.value;
        next.segment(u_slot, m) = u;
        snext.topRows(n - d) = sx.bottomRows(n - d);
        snext.middleRows(y_slot, p) = nj.d_state * sx;
        snext.block(y_slot, off + i * m, p, m) += nj.d_input;
        snext.middleRows(u_slot, m).setZero();
        snext.block(u_slot, off + i * m, m, m).setIdentity();
      } else {
        next = Step(params, x, u);
      }
      if (aug) {
        const VectorXd v = u - xi + th;
        VectorXd xi_next = xi + mu * (spec.y_target - x.segment(y_slot, p));
        if (jac) {
          MatrixXd sv = -sxi + sth;
          sv.middleCols(off + i * m, m) += MatrixXd::Identity(m, m);
          sxi = sxi - mu * sx.middleRows(y_slot, p);
          sth = sv;
        }
        xi = xi_next;
        th = v;
      }
      x = next;
      if (jac) sx = snext;
    }
    out.eq.head(n) = x - spec.x_target;
    if (jac) out.eq_jac.topRows(n) = sx;
    if (aug) {
      out.eq.segment(n, m) = xi - spec.u_target;
      out.eq.segment(n + m, m) = th;
      if (jac) {
        out.eq_jac.middleRows(n, m) = sxi;
        out.eq_jac.middleRows(n + m, m) = sth;
      }
    }
  };

  NlpOptions opt = options;
  opt.feasibility_tol = spec.terminal_tolerance;
  const auto t0 = std::chrono::steady_clock::now();
  const NlpResult nlp = SolveNlp(problem, start, opt);
  const auto t1 = std::chrono::steady_clock::now();

  ShootingResult res;
  res.nlp = nlp;
  res.solve_time_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  // Replay the optimum to extract the trajectory.
  const VectorXd& z = nlp.z;
  VectorXd x = spec.free_initial_state ? VectorXd(z.head(n)) : spec.x0;
  VectorXd xi = spec.xi0;
  VectorXd th = spec.theta0;
  res.initial_state = x;
  for (int i = 0; i < np; ++i) {
    const VectorXd u = z.segment(off + i * m, m);
    res.chi.push_back({x, xi, th});
    res.y.push_back(x.segment(y_slot, p));
    res.u.push_back(u);
    if (aug) {
      const VectorXd v = u - xi + th;
      res.v.push_back(v);
      xi = xi + mu * (spec.y_target - x.segment(y_slot, p));
      th = v;
    }
    x = Step(params, x, u);
  }
  res.chi.push_back({x, xi, th});
  res.y.push_back(x.segment(y_slot, p));
  double terminal = (x - spec.x_target).lpNorm<Eigen::Infinity>();
  if (aug) {
    terminal = std::max(terminal, (xi - spec.u_target).lpNorm<Eigen::Infinity>());
    terminal = std::max(terminal, th.lpNorm<Eigen::Infinity>());
  }
  res.terminal_residual = terminal;
  return res;
}

}  // namespace internal

namespace {

internal::ShootingSpec BaseSpec(const ModelParams& params,
                                const AugmentedTarget& target,
                                const MatrixXd& mu, const OcpConfig& cfg,
                                const Box& y_box) {
  internal::ShootingSpec s;
  s.horizon = cfg.horizon;
  s.augmented = true;
  s.x_target = target.chi.x;
  s.u_target = target.input;
  s.y_target = target.output;
  s.mu = mu;
  s.r_e_state = cfg.r_e;
  s.r_u_state = cfg.r_u;
  s.r_e = cfg.r_e;
  s.r_u = cfg.r_u;
  s.q_xi = cfg.q_xi;
  s.q_theta = cfg.q_theta;
  s.input_box = cfg.input_box;
  s.y_lower = y_box.lo();
  s.y_upper = y_box.hi();
  s.terminal_tolerance = cfg.terminal_tolerance;
  (void)params;
  return s;
}

Box OutputSlotBox(const ModelParams& params, const Box& state_box) {
  const StateLayout layout(params);
  const int slot = layout.output_offset(params.lookback - 1);
  return Box(state_box.lo().segment(slot, params.output_dim),
             state_box.hi().segment(slot, params.output_dim));
}

OcpSolution Package(const internal::ShootingResult& r, double tolerance) {
  OcpSolution sol;
  sol.v = r.v;
  sol.u = r.u;
  sol.y = r.y;
  sol.chi = r.chi;
  sol.initial_state = r.initial_state;
  sol.objective = r.nlp.objective;
  sol.terminal_residual = r.terminal_residual;
  sol.violation = r.nlp.violation;
  sol.status = r.nlp.status;
  sol.iterations = r.nlp.iterations;
  sol.solve_time_ms = r.solve_time_ms;
  sol.raw = {r.nlp.z, r.nlp.eq_multipliers, r.nlp.ineq_multipliers};
  (void)tolerance;
  return sol;
}

void CheckAugmented(const ModelParams& params, const VectorXd& x,
                    const VectorXd& xi, const VectorXd& theta,
                    const MatrixXd& mu) {
  if (x.size() != params.state_dim() || xi.size() != params.input_dim ||
      theta.size() != params.input_dim || mu.rows() != params.input_dim ||
      mu.cols() != params.output_dim) {
    throw InvalidArgument("OCP initial state or gain has the wrong dimension");
  }
}

}  // namespace

NlpWarmStart TargetWarmStart(const AugmentedTarget& target,
                             const OcpConfig& cfg, bool tube,
                             const VectorXd& x0) {
  const Eigen::Index m = target.input.size();
  const Eigen::Index off = tube ? x0.size() : 0;
  NlpWarmStart ws;
  ws.z.resize(off + cfg.horizon * m);
  if (tube) ws.z.head(off) = x0;
  const VectorXd u = cfg.input_box.Clamp(target.input);
  for (int i = 0; i < cfg.horizon; ++i) ws.z.segment(off + i * m, m) = u;
  return ws;
}

NlpWarmStart ShiftWarmStart(const OcpSolution& previous,
                            const AugmentedTarget& target,
                            const OcpConfig& cfg, bool tube) {
  const Eigen::Index m = target.input.size();
  if (static_cast<int>(previous.u.size()) != cfg.horizon) {
    return TargetWarmStart(target, cfg, tube, previous.initial_state);
  }
  const Eigen::Index n = previous.initial_state.size();
  const Eigen::Index off = tube ? n : 0;
  NlpWarmStart ws;
  ws.z.resize(off + cfg.horizon * m);
  if (tube) ws.z.head(n) = previous.chi.size() > 1 ? previous.chi[1].x
                                                   : previous.initial_state;
  for (int i = 0; i + 1 < cfg.horizon; ++i) {
    ws.z.segment(off + i * m, m) = previous.u[i + 1];
  }
  ws.z.segment(off + (cfg.horizon - 1) * m, m) =
      cfg.input_box.Clamp(target.input);
  ws.eq_multipliers = previous.raw.eq_multipliers;
  if (previous.raw.ineq_multipliers.size() > 0) {
    const Eigen::Index rows = previous.raw.ineq_multipliers.size();
    const Eigen::Index block = rows / std::max(1, cfg.horizon - 1);
    ws.ineq_multipliers = VectorXd::Zero(rows);
    if (rows > block) {
      ws.ineq_multipliers.head(rows - block) =
          previous.raw.ineq_multipliers.tail(rows - block);
    }
  }
  return ws;
}

OcpSolution SolveNominalOcp(const ModelParams& params,
                            const AugmentedState& chi,
                            const AugmentedTarget& target, const MatrixXd& mu,
                            const OcpConfig& cfg,
                            const NlpWarmStart* warm_start) {
  cfg.Validate(params.state_dim(), params.input_dim);
  CheckAugmented(params, chi.x, chi.xi, chi.theta, mu);
  internal::ShootingSpec spec =
      BaseSpec(params, target, mu, cfg, OutputSlotBox(params, cfg.state_box));
  spec.x0 = chi.x;
  spec.xi0 = chi.xi;
  spec.theta0 = chi.theta;
  const NlpWarmStart start =
      warm_start && warm_start->z.size() == cfg.horizon * params.input_dim
          ? *warm_start
          : TargetWarmStart(target, cfg, false, chi.x);
  return Package(internal::SolveShooting(params, spec, start, cfg.solver),
                 cfg.terminal_tolerance);
}

OcpSolution SolveTubeOcp(const ModelParams& params, const VectorXd& x,
                         const VectorXd& xi, const VectorXd& theta,
                         const AugmentedTarget& target, const MatrixXd& mu,
                         const Box& omega, const OcpConfig& cfg,
                         const NlpWarmStart* warm_start) {
  cfg.Validate(params.state_dim(), params.input_dim);
  CheckAugmented(params, x, xi, theta, mu);
  if (omega.dim() != params.state_dim()) {
    throw InvalidArgument("tube set has the wrong dimension");
  }
  const Box tightened = PontryaginSubtract(cfg.state_box, omega);
  if (tightened.empty()) {
    throw ConfigurationError("tightened state set X minus Omega is empty");
  }
  internal::ShootingSpec spec =
      BaseSpec(params, target, mu, cfg, OutputSlotBox(params, tightened));
  spec.free_initial_state = true;
  spec.xi0 = xi;
  spec.theta0 = theta;
  spec.x0 = x;
  Box initial = MinkowskiAdd(Box::Point(x), omega).Intersect(tightened);
  if (initial.empty()) {
    // The measured state lies outside the tightened set; keep the closest
    // admissible nominal start so the problem stays well posed.
    const VectorXd c = tightened.Clamp(x);
    initial = Box::Point(c);
  }
  spec.initial_box = initial;
  const int nz = params.state_dim() + cfg.horizon * params.input_dim;
  NlpWarmStart start = warm_start && warm_start->z.size() == nz
                           ? *warm_start
                           : TargetWarmStart(target, cfg, true, x);
  return Package(internal::SolveShooting(params, spec, start, cfg.solver),
                 cfg.terminal_tolerance);
}

}  // namespace nnmpc
