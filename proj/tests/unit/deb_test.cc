#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nnmpc/deb.h"
#include "nnmpc/errors.h"
#include "test_util.h"

namespace nnmpc {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr int kLookback = 3;

ModelParams Model() { return testing::ControllableModel(21, kLookback, 10); }

// Window of N + horizon + 1 samples whose rows after N are produced by the
// model itself.
IoTrajectory ModelWindow(const ModelParams& p, int horizon, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int len = kLookback + horizon + 1;
  IoTrajectory w;
  w.u = testing::RandomMatrix(rng, len, 1, -0.5, 0.5);
  w.y = testing::RandomMatrix(rng, len, 1, -0.3, 0.3);
  const StateLayout layout(p);
  for (int k = kLookback + 1; k < len; ++k) {
    const VectorXd x = layout.FromTrajectory(w.y, w.u, k - 1);
    w.y.row(k) = EvaluateNetwork(p, x, w.u.row(k - 1).transpose()).transpose();
  }
  return w;
}

TEST(Deb, StepDelegatesToModel) {
  const ModelParams p = Model();
  std::mt19937_64 rng(1);
  const DebState s{testing::RandomVector(rng, p.state_dim()), VectorXd::Constant(1, 0.3)};
  const VectorXd u = VectorXd::Constant(1, 0.2);
  const DebStepResult r = DebStep(p, s, u);
  EXPECT_EQ(r.next.x, Step(p, s.x, u));
  EXPECT_EQ(r.next.d, s.d);
  EXPECT_DOUBLE_EQ(r.output[0], StateLayout(p).CurrentOutput(s.x)[0] + 0.3);
  EXPECT_THROW(DebStep(p, {s.x, VectorXd::Zero(2)}, u), InvalidArgument);
}

TEST(Deb, MheRecoversZeroDisturbance) {
  const ModelParams p = Model();
  const IoTrajectory w = ModelWindow(p, 10, 2);
  const MheResult r = MheEstimate(p, w, 10, 0.0, VectorXd::Constant(1, 0.2));
  EXPECT_LT(std::abs(r.d[0]), 1e-8);
  const VectorXd expected = StateLayout(p).FromTrajectory(w.y, w.u, w.length() - 1);
  EXPECT_LT((r.x - expected).norm(), 1e-8);
}

TEST(Deb, MheRecoversConstantOffset) {
  const ModelParams p = Model();
  IoTrajectory w = ModelWindow(p, 10, 3);
  const double c = 0.137;
  w.y.array() += c;
  const MheResult r = MheEstimate(p, w, 10, 1.0, VectorXd::Constant(1, c));
  EXPECT_NEAR(r.d[0], c, 1e-6);
  const MheResult cold = MheEstimate(p, w, 10, 0.0, VectorXd::Zero(1));
  EXPECT_NEAR(cold.d[0], c, 1e-6);
}

TEST(Deb, MheLargePriorKeepsPreviousEstimate) {
  const ModelParams p = Model();
  IoTrajectory w = ModelWindow(p, 10, 4);
  w.y.array() += 0.2;
  const MheResult r = MheEstimate(p, w, 10, 1e14, VectorXd::Constant(1, -0.1));
  EXPECT_NEAR(r.d[0], -0.1, 1e-6);
}

TEST(Deb, MheRejectsBadWindow) {
  const ModelParams p = Model();
  const IoTrajectory w = ModelWindow(p, 10, 5);
  EXPECT_THROW(MheEstimate(p, w, 9, 1.0, VectorXd::Zero(1)), InvalidArgument);
  EXPECT_THROW(MheEstimate(p, w, 10, -1.0, VectorXd::Zero(1)), InvalidArgument);
}

TEST(Deb, TargetIsShiftedEquilibrium) {
  const ModelParams p = Model();
  const VectorXd ref = VectorXd::Constant(1, 0.15);
  const VectorXd d = VectorXd::Constant(1, 0.04);
  const DebTarget t = ComputeDebTarget(p, ref, d, VectorXd::Zero(1));
  EXPECT_LT((Step(p, t.state, t.input) - t.state).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_NEAR(StateLayout(p).CurrentOutput(t.state)[0] + d[0], ref[0], 1e-8);
  EXPECT_NEAR(t.output[0], ref[0] - d[0], 1e-12);
}

TEST(Deb, OcpAtTargetHasZeroCost) {
  const ModelParams p = Model();
  const DebTarget t = ComputeDebTarget(p, VectorXd::Constant(1, 0.1), VectorXd::Zero(1),
                                       VectorXd::Zero(1));
  OcpConfig cfg;
  cfg.horizon = 20;
  cfg.input_box = Box::Symmetric(1, 3.0);
  cfg.state_box = Box::Symmetric(p.state_dim(), 3.0);
  const OcpSolution sol = SolveDebOcp(p, t.state, t, cfg);
  EXPECT_EQ(sol.status, SolverStatus::kOptimal);
  EXPECT_LT(sol.objective, 1e-18);
  for (const VectorXd& u : sol.u) EXPECT_NEAR(u[0], t.input[0], 1e-9);
}

TEST(Deb, OcpReachesTarget) {
  const ModelParams p = Model();
  const DebTarget t = ComputeDebTarget(p, VectorXd::Constant(1, 0.1), VectorXd::Zero(1),
                                       VectorXd::Zero(1));
  const Equilibrium start = FindEquilibrium(p, VectorXd::Constant(1, -0.2), VectorXd::Zero(1));
  OcpConfig cfg;
  cfg.horizon = 25;
  cfg.input_box = Box::Symmetric(1, 3.0);
  cfg.state_box = Box::Symmetric(p.state_dim(), 3.0);
  const OcpSolution sol = SolveDebOcp(p, start.state, t, cfg);
  ASSERT_EQ(sol.status, SolverStatus::kOptimal);
  EXPECT_LE(sol.terminal_residual, cfg.terminal_tolerance);
}

}  // namespace
}  // namespace nnmpc
