#include "nnmpc/controller.h"

#include <limits>

#include <fmt/format.h>

#include "nnmpc/errors.h"

namespace nnmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string ControllerModeName(ControllerMode mode) {
  switch (mode) {
    case ControllerMode::kNominal:
      return "nominal";
    case ControllerMode::kTube:
      return "tube";
    case ControllerMode::kDeb:
      return "deb";
  }
  return "unknown";
}

ControllerMode ParseControllerMode(const std::string& name) {
  if (name == "nominal") return ControllerMode::kNominal;
  if (name == "tube") return ControllerMode::kTube;
  if (name == "deb") return ControllerMode::kDeb;
  throw ConfigurationError(fmt::format(
      "unknown controller mode '{}' (expected nominal, tube or deb)", name));
}

OffsetFreeController::OffsetFreeController(NnarxModel model,
                                           OffsetFreeSettings settings,
                                           const IoWindow& initial)
    : model_(std::move(model)),
      settings_(std::move(settings)),
      layout_(model_.params) {
  const int n = model_.params.lookback;
  const int m = model_.params.input_dim;
  const int p = model_.params.output_dim;
  if (settings_.mode == ControllerMode::kDeb) {
    throw ConfigurationError("the offset-free controller has no deb mode");
  }
  if (static_cast<int>(initial.outputs.size()) != n ||
      static_cast<int>(initial.inputs.size()) != n) {
    throw InvalidArgument(
        fmt::format("initial window must hold {} (y, u) pairs", n));
  }
  if (settings_.mu.rows() != m || settings_.mu.cols() != p) {
    throw ConfigurationError("integrator gain has the wrong shape");
  }
  settings_.ocp.Validate(layout_.dim(), m);
  if (settings_.mode == ControllerMode::kTube &&
      settings_.omega.dim() != layout_.dim()) {
    throw ConfigurationError("tube mode needs an RPI set of state dimension");
  }
  // The newest output is supplied by the first Step call.
  for (int j = 1; j < n; ++j) {
    outputs_.push_back(model_.output_scaler.ToScaled(initial.outputs[j]));
  }
  for (int j = 0; j < n; ++j) {
    inputs_.push_back(model_.input_scaler.ToScaled(initial.inputs[j]));
  }
  chi_.xi = inputs_.back();
  chi_.theta = VectorXd::Zero(m);
}

VectorXd OffsetFreeController::AssembleState() const {
  const std::vector<VectorXd> ys(outputs_.begin(), outputs_.end());
  const std::vector<VectorXd> us(inputs_.begin(), inputs_.end());
  return layout_.FromHistory(ys, us);
}

void OffsetFreeController::UpdateTarget(const VectorXd& ref_scaled) {
  if (target_ && target_ref_.size() == ref_scaled.size() &&
      target_ref_ == ref_scaled) {
    return;
  }
  const VectorXd guess = target_ ? target_->input : chi_.xi;
  const Equilibrium eq = FindEquilibrium(model_.params, ref_scaled, guess,
                                         settings_.equilibrium);
  target_ = MakeAugmentedTarget(eq);
  target_ref_ = ref_scaled;
}

ControlRecord OffsetFreeController::Step(const VectorXd& y,
                                         const VectorXd& y_ref) {
  const VectorXd y_s = model_.output_scaler.ToScaled(y);
  const VectorXd ref_s = model_.output_scaler.ToScaled(y_ref);
  outputs_.push_back(y_s);
  chi_.x = AssembleState();
  UpdateTarget(ref_s);

  const OcpConfig& cfg = settings_.ocp;
  const bool tube = settings_.mode == ControllerMode::kTube;
  NlpWarmStart warm;
  if (previous_ && cfg.warm_start == WarmStartPolicy::kShift) {
    warm = ShiftWarmStart(*previous_, *target_, cfg, tube);
    if (tube) warm.z.head(chi_.x.size()) = chi_.x;
  } else {
    warm = TargetWarmStart(*target_, cfg, tube, chi_.x);
  }
  OcpSolution sol;
  bool solver_error = false;
  try {
    sol = tube ? SolveTubeOcp(model_.params, chi_.x, chi_.xi, chi_.theta,
                              *target_, settings_.mu, settings_.omega, cfg, &warm)
               : SolveNominalOcp(model_.params, chi_, *target_, settings_.mu,
                                 cfg, &warm);
  } catch (const NumericalFailure&) {
    sol.status = SolverStatus::kInfeasible;
    solver_error = true;
  }

  ControlRecord rec;
  rec.k = k_;
  rec.y_ref = y_ref[0];
  rec.y_plant = y[0];
  rec.objective = sol.objective;
  rec.terminal_residual = sol.terminal_residual;
  rec.solver_status =
      solver_error ? "error" : std::string(SolverStatusName(sol.status));
  rec.solve_time_ms = sol.solve_time_ms;
  rec.iterations = sol.iterations;
  rec.feasible = sol.status != SolverStatus::kInfeasible;

  VectorXd v;
  if (rec.feasible) {
    v = sol.v.front();
    rec.y_nominal =
        model_.output_scaler.ToPhysical(layout_.CurrentOutput(sol.initial_state))[0];
    for (const VectorXd& yp : sol.y) {
      rec.plan_y.push_back(model_.output_scaler.ToPhysical(yp)[0]);
    }
    previous_ = std::move(sol);
  } else {
    // Pure integral action, nudged back into the input box.
    const VectorXd u_hold = cfg.input_box.Clamp(chi_.xi);
    v = u_hold - chi_.xi + chi_.theta;
    rec.fallback = true;
    rec.y_nominal = y[0];
    previous_.reset();
  }
  const VectorXd u = chi_.xi + v - chi_.theta;
  const VectorXd& scale = model_.input_scaler.scale;
  rec.v = (scale.cwiseProduct(v))[0];
  rec.v_plan0 = rec.fallback ? std::numeric_limits<double>::quiet_NaN() : rec.v;
  rec.theta = (scale.cwiseProduct(chi_.theta))[0];
  rec.xi = model_.input_scaler.ToPhysical(chi_.xi)[0];
  rec.u = model_.input_scaler.ToPhysical(u)[0];

  chi_.xi = chi_.xi + settings_.mu * (ref_s - y_s);
  chi_.theta = v;
  outputs_.pop_front();
  inputs_.pop_front();
  inputs_.push_back(u);
  ++k_;
  return rec;
}

}  // namespace nnmpc
