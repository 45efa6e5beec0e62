#pragma once

#include <deque>
#include <optional>

#include <Eigen/Dense>

#include "nnmpc/controller.h"
#include "nnmpc/model_io.h"
#include "nnmpc/ocp.h"
#include "nnmpc/offset_free.h"
#include "nnmpc/trainer.h"

namespace nnmpc {

// Model state augmented with a constant output disturbance.
struct DebState {
  Eigen::VectorXd x;
  Eigen::VectorXd d;
};

struct DebStepResult {
  DebState next;
  Eigen::VectorXd output;  // C x + d
};

DebStepResult DebStep(const ModelParams& params, const DebState& s,
                      const Eigen::VectorXd& u);

struct MheResult {
  Eigen::VectorXd x;  // state at the newest sample, built from y - d
  Eigen::VectorXd d;
  int iterations = 0;
};

// Fits d over the last `horizon` outputs of the window. The window holds
// N + horizon + 1 samples; its start state is formed from y - d, so the
// estimate absorbs a constant output offset exactly. Input row j is the
// input applied after output row j; the last input row is unused.
MheResult MheEstimate(const ModelParams& params, const IoTrajectory& window,
                      int horizon, double prior_weight,
                      const Eigen::VectorXd& d_prev);

struct DebTarget {
  Eigen::VectorXd state;
  Eigen::VectorXd input;
  Eigen::VectorXd output;  // corrected model output y_ref - d
};

DebTarget ComputeDebTarget(const ModelParams& params,
                           const Eigen::VectorXd& y_ref,
                           const Eigen::VectorXd& d_hat,
                           const Eigen::VectorXd& input_guess,
                           const EquilibriumOptions& options = {});

struct DebSettings {
  OcpConfig ocp;  // scaled units; xi/theta weights are unused
  int mhe_horizon = 10;
  double mhe_prior = 1.0;
  EquilibriumOptions equilibrium;
};

// Tracking OCP from the measured I/O state towards the disturbance-shifted
// equilibrium: stage cost ||x - x_s||^2_Qx + ||u - u_s||^2_Ru and x_Np = x_s.
OcpSolution SolveDebOcp(const ModelParams& params, const Eigen::VectorXd& x,
                        const DebTarget& target, const OcpConfig& cfg,
                        const NlpWarmStart* warm_start = nullptr);

class DebController : public Controller {
 public:
  DebController(NnarxModel model, DebSettings settings,
                const IoWindow& initial);

  ControlRecord Step(const Eigen::VectorXd& y,
                     const Eigen::VectorXd& y_ref) override;

  const Eigen::VectorXd& disturbance() const { return d_hat_; }

 private:
  NnarxModel model_;
  DebSettings settings_;
  StateLayout layout_;
  std::deque<Eigen::VectorXd> outputs_;  // scaled, newest last
  std::deque<Eigen::VectorXd> inputs_;   // scaled, aligned with outputs_
  Eigen::VectorXd d_hat_;
  std::optional<DebTarget> target_;
  Eigen::VectorXd target_ref_;
  Eigen::VectorXd target_d_;
  std::optional<OcpSolution> previous_;
  int k_ = 0;
};

}  // namespace nnmpc
