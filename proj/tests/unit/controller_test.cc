#include <cmath>

#include <gtest/gtest.h>

#include "nnmpc/controller.h"
#include "nnmpc/deb.h"
#include "nnmpc/errors.h"
#include "test_util.h"

namespace nnmpc {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr int kLookback = 3;

NnarxModel Model() {
  NnarxModel m;
  m.params = testing::ControllableModel(31, kLookback, 10);
  m.input_scaler = ChannelScaler::Identity(1);
  m.output_scaler = ChannelScaler::Identity(1);
  return m;
}

OcpConfig Ocp(const ModelParams& p) {
  OcpConfig cfg;
  cfg.horizon = 20;
  cfg.input_box = Box::Symmetric(1, 3.0);
  cfg.state_box = Box::Symmetric(p.state_dim(), 3.0);
  return cfg;
}

OffsetFreeSettings Settings(const NnarxModel& m, ControllerMode mode) {
  OffsetFreeSettings s;
  s.mode = mode;
  s.ocp = Ocp(m.params);
  const Equilibrium eq = FindEquilibrium(m.params, VectorXd::Zero(1), VectorXd::Zero(1));
  const StateJacobians j = LinearizeAt(m.params, eq);
  const MatrixXd c = BuildStructuralMatrices(kLookback, 1, 1).C;
  s.mu = IntegratorGain(j.A, j.B, c, 0.3 * EstimateMuMax(j.A, j.B, c));
  s.omega = ComputeRpi(kLookback, 1, 1, 0.01);
  return s;
}

IoWindow SteadyWindow(const Equilibrium& eq) {
  IoWindow w;
  for (int j = 0; j < kLookback; ++j) {
    w.outputs.push_back(eq.output);
    w.inputs.push_back(eq.input);
  }
  return w;
}

// Runs the controller against the model itself, with an optional constant
// offset on the measured output.
std::vector<ControlRecord> RunLoop(Controller& ctrl, const NnarxModel& m, const Equilibrium& start,
                                   double ref, int steps, double offset = 0.0) {
  std::vector<ControlRecord> log;
  VectorXd x = start.state;
  const StateLayout layout(m.params);
  for (int k = 0; k < steps; ++k) {
    const VectorXd y = layout.CurrentOutput(x).array() + offset;
    const ControlRecord rec = ctrl.Step(y, VectorXd::Constant(1, ref));
    log.push_back(rec);
    x = Step(m.params, x, VectorXd::Constant(1, rec.u));
  }
  return log;
}

TEST(Controller, HoldsEquilibriumWhenPlantIsModel) {
  const NnarxModel m = Model();
  const Equilibrium eq = FindEquilibrium(m.params, VectorXd::Constant(1, 0.1), VectorXd::Zero(1));
  for (ControllerMode mode : {ControllerMode::kNominal, ControllerMode::kTube}) {
    OffsetFreeController ctrl(m, Settings(m, mode), SteadyWindow(eq));
    for (const ControlRecord& r : RunLoop(ctrl, m, eq, 0.1, 15)) {
      EXPECT_NEAR(r.u, eq.input[0], 1e-9);
      EXPECT_TRUE(r.feasible);
    }
  }
}

TEST(Controller, TracksSetpointStepWithRecedingHorizonIdentity) {
  const NnarxModel m = Model();
  const Equilibrium eq = FindEquilibrium(m.params, VectorXd::Constant(1, 0.0), VectorXd::Zero(1));
  for (ControllerMode mode : {ControllerMode::kNominal, ControllerMode::kTube}) {
    OffsetFreeController ctrl(m, Settings(m, mode), SteadyWindow(eq));
    const std::vector<ControlRecord> log = RunLoop(ctrl, m, eq, 0.2, 80, 0.03);
    for (const ControlRecord& r : log) {
      ASSERT_TRUE(r.feasible) << "k = " << r.k;
      EXPECT_EQ(r.v, r.v_plan0);
      EXPECT_NEAR(r.u, r.xi + r.v - r.theta, 1e-12);
      EXPECT_EQ(r.plan_y.size(), 21u);
    }
    // Integral action removes the measurement offset.
    EXPECT_NEAR(log.back().y_plant, 0.2, 1e-4) << ControllerModeName(mode);
  }
}

TEST(Controller, DebEstimatesOutputOffset) {
  const NnarxModel m = Model();
  const Equilibrium eq = FindEquilibrium(m.params, VectorXd::Constant(1, 0.0), VectorXd::Zero(1));
  DebSettings s;
  s.ocp = Ocp(m.params);
  s.mhe_horizon = 5;
  DebController ctrl(m, s, SteadyWindow(eq));
  const std::vector<ControlRecord> log = RunLoop(ctrl, m, eq, 0.2, 60, 0.03);
  for (const ControlRecord& r : log) EXPECT_TRUE(r.feasible);
  // A pure output offset is exactly what the disturbance model describes.
  EXPECT_NEAR(ctrl.disturbance()[0], 0.03, 1e-6);
  EXPECT_NEAR(log.back().d_hat, 0.03, 1e-6);
  // The OCP starts from the raw window, so part of the offset remains.
  EXPECT_LT(std::abs(log.back().y_plant - 0.2), 0.03);
}

TEST(Controller, RejectsBadConfiguration) {
  const NnarxModel m = Model();
  const Equilibrium eq = FindEquilibrium(m.params, VectorXd::Zero(1), VectorXd::Zero(1));
  IoWindow short_window = SteadyWindow(eq);
  short_window.outputs.pop_back();
  EXPECT_THROW(OffsetFreeController(m, Settings(m, ControllerMode::kNominal), short_window),
               InvalidArgument);
  OffsetFreeSettings bad = Settings(m, ControllerMode::kTube);
  bad.omega = Box();
  EXPECT_THROW(OffsetFreeController(m, bad, SteadyWindow(eq)), ConfigurationError);
  EXPECT_THROW(OffsetFreeController(m, Settings(m, ControllerMode::kDeb), SteadyWindow(eq)),
               ConfigurationError);
  EXPECT_EQ(ParseControllerMode("tube"), ControllerMode::kTube);
  EXPECT_THROW(ParseControllerMode("pid"), ConfigurationError);
}

}  // namespace
}  // namespace nnmpc
