#include "nnmpc/deb.h"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "nnmpc/errors.h"
#include "ocp_internal.h"

namespace nnmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

DebStepResult DebStep(const ModelParams& params, const DebState& s,
                      const VectorXd& u) {
  if (s.d.size() != params.output_dim) {
    throw InvalidArgument("disturbance has the wrong dimension");
  }
  const StateLayout layout(params);
  DebStepResult out;
  out.output = layout.CurrentOutput(s.x) + s.d;
  out.next.x = Step(params, s.x, u);
  out.next.d = s.d;
  return out;
}

MheResult MheEstimate(const ModelParams& params, const IoTrajectory& window,
                      int horizon, double prior_weight,
                      const VectorXd& d_prev) {
  const int n_look = params.lookback;
  const int p = params.output_dim;
  if (horizon < 1 || prior_weight < 0.0) {
    throw InvalidArgument("MHE needs horizon >= 1 and a nonnegative prior");
  }
  if (window.length() != n_look + horizon + 1 ||
      window.y.rows() != window.u.rows() || window.y.cols() != p ||
      window.u.cols() != params.input_dim || d_prev.size() != p) {
    throw InvalidArgument(fmt::format(
        "MHE window must hold N + N_e + 1 = {} samples of matching width",
        n_look + horizon + 1));
  }
  const StateLayout layout(params);
  const MatrixXd sel_y = layout.OutputSlotsSelector();
  const int n = layout.dim();
  const int y_slot = layout.output_offset(n_look - 1);

  auto shifted_window = [&](const VectorXd& d) {
    MatrixXd y = window.y;
    y.rowwise() -= d.transpose();
    return y;
  };
  const double s_prior = std::sqrt(prior_weight);
  VectorXd d = d_prev;
  MheResult out;
  for (int it = 0; it < 50; ++it) {
    const MatrixXd y_corr = shifted_window(d);
    VectorXd x = layout.FromTrajectory(y_corr, window.u, n_look);
    MatrixXd sx = -sel_y;  // dx/dd
    VectorXd r(horizon * p + p);
    MatrixXd jr(horizon * p + p, p);
    for (int j = 0; j < horizon; ++j) {
      const VectorXd u = window.u.row(n_look + j).transpose();
      const StateJacobians jac = Jacobians(params, x, u);
      x = Step(params, x, u);
      sx = jac.A * sx;
      r.segment(j * p, p) =
          window.y.row(n_look + 1 + j).transpose() - d - x.segment(y_slot, p);
      jr.middleRows(j * p, p) =
          -MatrixXd::Identity(p, p) - sx.middleRows(y_slot, p);
    }
    r.tail(p) = s_prior * (d - d_prev);
    jr.bottomRows(p) = s_prior * MatrixXd::Identity(p, p);
    const VectorXd step = (jr.transpose() * jr).ldlt().solve(-(jr.transpose() * r));
    if (!step.allFinite()) throw NumericalFailure("MHE normal equations are singular");
    d += step;
    out.iterations = it + 1;
    if (step.lpNorm<Eigen::Infinity>() <= 1e-13 * std::max(1.0, d.lpNorm<Eigen::Infinity>())) {
      break;
    }
  }
  out.d = d;
  out.x = layout.FromTrajectory(shifted_window(d), window.u,
                                static_cast<int>(window.y.rows()) - 1);
  (void)n;
  return out;
}

DebTarget ComputeDebTarget(const ModelParams& params, const VectorXd& y_ref,
                           const VectorXd& d_hat, const VectorXd& input_guess,
                           const EquilibriumOptions& options) {
  const Equilibrium eq =
      FindEquilibrium(params, y_ref - d_hat, input_guess, options);
  return {eq.state, eq.input, eq.output};
}

OcpSolution SolveDebOcp(const ModelParams& params, const VectorXd& x,
                        const DebTarget& target, const OcpConfig& cfg,
                        const NlpWarmStart* warm_start) {
  cfg.Validate(params.state_dim(), params.input_dim);
  const StateLayout layout(params);
  const int slot = layout.output_offset(params.lookback - 1);
  internal::ShootingSpec spec;
  spec.horizon = cfg.horizon;
  spec.augmented = false;
  spec.x0 = x;
  spec.x_target = target.state;
  spec.u_target = target.input;
  spec.y_target = target.output;
  spec.r_e_state = cfg.r_e;
  spec.r_u_state = cfg.r_u;
  spec.r_e = 0.0;
  spec.r_u = cfg.r_u;
  spec.input_box = cfg.input_box;
  spec.y_lower = cfg.state_box.lo().segment(slot, params.output_dim);
  spec.y_upper = cfg.state_box.hi().segment(slot, params.output_dim);
  spec.terminal_tolerance = cfg.terminal_tolerance;
  spec.mu = MatrixXd::Zero(params.input_dim, params.output_dim);

  NlpWarmStart start;
  if (warm_start && warm_start->z.size() == cfg.horizon * params.input_dim) {
    start = *warm_start;
  } else {
    start.z.resize(cfg.horizon * params.input_dim);
    const VectorXd u = cfg.input_box.Clamp(target.input);
    for (int i = 0; i < cfg.horizon; ++i) {
      start.z.segment(i * params.input_dim, params.input_dim) = u;
    }
  }
  const internal::ShootingResult r =
      internal::SolveShooting(params, spec, start, cfg.solver);
  OcpSolution sol;
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
  return sol;
}

DebController::DebController(NnarxModel model, DebSettings settings,
                             const IoWindow& initial)
    : model_(std::move(model)),
      settings_(std::move(settings)),
      layout_(model_.params) {
  const int n = model_.params.lookback;
  if (static_cast<int>(initial.outputs.size()) != n ||
      static_cast<int>(initial.inputs.size()) != n) {
    throw InvalidArgument(
        fmt::format("initial window must hold {} (y, u) pairs", n));
  }
  if (settings_.mhe_horizon < 1) {
    throw ConfigurationError("MHE horizon must be >= 1");
  }
  settings_.ocp.Validate(layout_.dim(), model_.params.input_dim);
  for (int j = 0; j < n; ++j) {
    outputs_.push_back(model_.output_scaler.ToScaled(initial.outputs[j]));
    inputs_.push_back(model_.input_scaler.ToScaled(initial.inputs[j]));
  }
  d_hat_ = VectorXd::Zero(model_.params.output_dim);
}

ControlRecord DebController::Step(const VectorXd& y, const VectorXd& y_ref) {
  const int n = model_.params.lookback;
  const int m = model_.params.input_dim;
  const int p = model_.params.output_dim;
  const int window = n + settings_.mhe_horizon + 1;
  const VectorXd ref_s = model_.output_scaler.ToScaled(y_ref);
  outputs_.push_back(model_.output_scaler.ToScaled(y));

  if (static_cast<int>(outputs_.size()) >= window) {
    IoTrajectory w;
    w.y.resize(window, p);
    w.u = MatrixXd::Zero(window, m);
    const int y0 = static_cast<int>(outputs_.size()) - window;
    const int u0 = static_cast<int>(inputs_.size()) - (window - 1);
    for (int j = 0; j < window; ++j) {
      w.y.row(j) = outputs_[y0 + j].transpose();
      if (j + 1 < window) w.u.row(j) = inputs_[u0 + j].transpose();
    }
    d_hat_ = MheEstimate(model_.params, w, settings_.mhe_horizon,
                         settings_.mhe_prior, d_hat_)
                 .d;
  }

  std::vector<VectorXd> ys(outputs_.end() - n, outputs_.end());
  std::vector<VectorXd> us(inputs_.end() - n, inputs_.end());
  const VectorXd x = layout_.FromHistory(ys, us);
  const VectorXd guess = target_ ? target_->input : inputs_.back();
  target_ = ComputeDebTarget(model_.params, ref_s, d_hat_, guess,
                             settings_.equilibrium);

  const OcpConfig& cfg = settings_.ocp;
  NlpWarmStart warm;
  const NlpWarmStart* warm_ptr = nullptr;
  if (previous_ && cfg.warm_start == WarmStartPolicy::kShift) {
    warm.z.resize(cfg.horizon * m);
    for (int i = 0; i + 1 < cfg.horizon; ++i) {
      warm.z.segment(i * m, m) = previous_->u[i + 1];
    }
    warm.z.tail(m) = cfg.input_box.Clamp(target_->input);
    warm.eq_multipliers = previous_->raw.eq_multipliers;
    warm_ptr = &warm;
  }
  OcpSolution sol = SolveDebOcp(model_.params, x, *target_, cfg, warm_ptr);

  ControlRecord rec;
  rec.k = k_;
  rec.y_ref = y_ref[0];
  rec.y_plant = y[0];
  rec.y_nominal = y[0];
  rec.objective = sol.objective;
  rec.terminal_residual = sol.terminal_residual;
  rec.solver_status = std::string(SolverStatusName(sol.status));
  rec.solve_time_ms = sol.solve_time_ms;
  rec.iterations = sol.iterations;
  rec.feasible = sol.status != SolverStatus::kInfeasible;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rec.v = nan;
  rec.v_plan0 = nan;
  rec.xi = nan;
  rec.theta = nan;
  rec.d_hat = (model_.output_scaler.scale.cwiseProduct(d_hat_))[0];

  VectorXd u;
  if (rec.feasible) {
    u = sol.u.front();
    for (const VectorXd& yp : sol.y) {
      rec.plan_y.push_back(model_.output_scaler.ToPhysical(yp)[0]);
    }
    previous_ = std::move(sol);
  } else {
    u = cfg.input_box.Clamp(inputs_.back());
    rec.fallback = true;
    previous_.reset();
  }
  rec.u = model_.input_scaler.ToPhysical(u)[0];
  inputs_.push_back(u);
  while (static_cast<int>(outputs_.size()) > window) outputs_.pop_front();
  while (static_cast<int>(inputs_.size()) > window) inputs_.pop_front();
  ++k_;
  return rec;
}

}  // namespace nnmpc
