#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnmpc/box.h"
#include "nnmpc/model_io.h"
#include "nnmpc/ocp.h"
#include "nnmpc/offset_free.h"

namespace nnmpc {

enum class ControllerMode { kNominal, kTube, kDeb };

std::string ControllerModeName(ControllerMode mode);
ControllerMode ParseControllerMode(const std::string& name);

// One logged controller iteration, in physical units. v and theta are input
// increments, so u = xi + v - theta holds in these units as well.
struct ControlRecord {
  int k = 0;
  double y_ref = 0.0;
  double y_plant = 0.0;
  double y_nominal = 0.0;
  double u = 0.0;
  double v = 0.0;
  double xi = 0.0;
  double theta = 0.0;
  double v_plan0 = 0.0;
  double objective = 0.0;
  double terminal_residual = 0.0;
  std::string solver_status;
  double solve_time_ms = 0.0;
  int iterations = 0;
  bool feasible = true;
  bool fallback = false;
  double d_hat = 0.0;
  std::vector<double> plan_y;  // predicted outputs y_{0..N_p|k}
};

// Past (y_j, u_j) pairs in physical units, oldest first.
struct IoWindow {
  std::vector<Eigen::VectorXd> outputs;
  std::vector<Eigen::VectorXd> inputs;
};

class Controller {
 public:
  virtual ~Controller() = default;
  // Consumes the measurement y_k and returns the logged move for sample k.
  virtual ControlRecord Step(const Eigen::VectorXd& y, const Eigen::VectorXd& y_ref) = 0;
};

struct OffsetFreeSettings {
  ControllerMode mode = ControllerMode::kNominal;
  OcpConfig ocp;        // scaled units
  Eigen::MatrixXd mu;   // scaled units, m x p
  Box omega;            // tube set, scaled units
  EquilibriumOptions equilibrium;
};

// Algorithm 1 online phase for the nominal and the tube formulations.
class OffsetFreeController : public Controller {
 public:
  OffsetFreeController(NnarxModel model, OffsetFreeSettings settings,
                       const IoWindow& initial);

  ControlRecord Step(const Eigen::VectorXd& y,
                     const Eigen::VectorXd& y_ref) override;

  const AugmentedState& state() const { return chi_; }
  const std::optional<AugmentedTarget>& target() const { return target_; }

 private:
  Eigen::VectorXd AssembleState() const;
  void UpdateTarget(const Eigen::VectorXd& ref_scaled);

  NnarxModel model_;
  OffsetFreeSettings settings_;
  StateLayout layout_;
  std::deque<Eigen::VectorXd> outputs_;  // scaled y_{k-N+1..k}
  std::deque<Eigen::VectorXd> inputs_;   // scaled u_{k-N..k-1}
  AugmentedState chi_;
  std::optional<AugmentedTarget> target_;
  Eigen::VectorXd target_ref_;
  std::optional<OcpSolution> previous_;
  int k_ = 0;
};

}  // namespace nnmpc
