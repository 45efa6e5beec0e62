#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "nnmpc/disturbance_bound.h"
#include "nnmpc/errors.h"
#include "nnmpc/harness/config.h"
#include "nnmpc/harness/csv.h"
#include "nnmpc/harness/metrics.h"
#include "nnmpc/harness/pipeline.h"
#include "nnmpc/model_io.h"
#include "test_util.h"

namespace nnmpc::harness {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::filesystem::path TempDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("nnmpc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

TEST(Config, DefaultsAreValid) {
  const ExperimentConfig cfg = DefaultConfig();
  EXPECT_NO_THROW(cfg.Validate());
  EXPECT_EQ(cfg.training.arch.lookback, 5);
  EXPECT_EQ(cfg.controller.horizon, 50);
  EXPECT_DOUBLE_EQ(cfg.sample_time, 120.0);
}

TEST(Config, ParsesOverrides) {
  const ExperimentConfig cfg = ParseConfig(R"(
seed: 11
controller:
  horizon: 20
  w_max: 0.5
  solver:
    max_outer: 12
scenario:
  reference: [[0, 320], [6000, 324]]
  disturbance: [[0, 298, 1.0], [3000, 293, 1.0]]
)");
  EXPECT_EQ(cfg.seed, 11u);
  EXPECT_EQ(cfg.controller.horizon, 20);
  EXPECT_DOUBLE_EQ(cfg.controller.w_max, 0.5);
  EXPECT_EQ(cfg.controller.solver.max_outer, 12);
  EXPECT_DOUBLE_EQ(cfg.scenario.ReferenceAt(100.0), 320.0);
  EXPECT_DOUBLE_EQ(cfg.scenario.ReferenceAt(6000.0), 324.0);
  EXPECT_DOUBLE_EQ(cfg.scenario.DisturbanceAt(4000.0, cfg.plant).inlet_temp, 293.0);
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(ParseConfig("controller:\n  horizon: 0\n"), ConfigurationError);
  EXPECT_THROW(ParseConfig("controller:\n  warm_start: sideways\n"), ConfigurationError);
  EXPECT_THROW(ParseConfig("seed: [1, 2\n"), ConfigurationError);
  EXPECT_THROW(LoadConfig("/nonexistent/config.yaml"), FileError);
}

TEST(Csv, RoundTripsNumbersExactly) {
  const auto dir = TempDir("csv");
  std::mt19937_64 rng(1);
  MatrixXd m = testing::RandomMatrix(rng, 7, 3, -1e3, 1e3);
  m(0, 0) = 1.0 / 3.0;
  m(1, 1) = -0.0;
  const std::string path = (dir / "m.csv").string();
  WriteMatrixCsv(path, {"a", "b", "c"}, m);
  std::vector<std::string> header;
  const MatrixXd back = ReadMatrixCsv(path, &header);
  EXPECT_EQ(header, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(back, m);
  EXPECT_THROW(ReadCsv((dir / "missing.csv").string()), FileError);
}

TEST(ModelIo, RoundTripsExactly) {
  NnarxModel m;
  m.params = testing::RandomModel(4, 5, 1, 1, {10, 10});
  m.input_scaler = ChannelScaler::FromRange(VectorXd::Constant(1, 0.05), VectorXd::Constant(1, 0.18));
  m.output_scaler = ChannelScaler::FromRange(VectorXd::Constant(1, 305.0), VectorXd::Constant(1, 333.0));
  const NnarxModel back = ParseModel(SerializeModel(m));
  EXPECT_EQ(back.params.Flatten(), m.params.Flatten());
  EXPECT_EQ(back.params.lookback, 5);
  EXPECT_EQ(back.output_scaler.scale, m.output_scaler.scale);
  EXPECT_EQ(back.input_scaler.offset, m.input_scaler.offset);
  EXPECT_THROW(ParseModel("{\"lookback\": 3}"), Error);
}

TEST(ModelIo, ScalerMapsRangeToUnitInterval) {
  const ChannelScaler s = ChannelScaler::FromRange(VectorXd::Constant(1, 2.0), VectorXd::Constant(1, 6.0));
  EXPECT_DOUBLE_EQ(s.ToScaled(VectorXd::Constant(1, 2.0))[0], -1.0);
  EXPECT_DOUBLE_EQ(s.ToScaled(VectorXd::Constant(1, 6.0))[0], 1.0);
  EXPECT_DOUBLE_EQ(s.ToPhysical(s.ToScaled(VectorXd::Constant(1, 3.7)))[0], 3.7);
}

std::vector<ControlRecord> SyntheticLog() {
  std::vector<ControlRecord> log;
  for (int k = 0; k < 40; ++k) {
    ControlRecord r;
    r.k = k;
    r.y_ref = k < 20 ? 320.0 : 324.0;
    // First order approach towards each setpoint.
    const double start = k < 20 ? 318.0 : 320.0;
    const int j = k < 20 ? k : k - 20;
    r.y_plant = r.y_ref + (start - r.y_ref) * std::pow(0.5, j);
    r.y_nominal = r.y_plant - 0.01;
    r.xi = 0.1;
    r.v = 0.002;
    r.theta = 0.001;
    r.u = r.xi + r.v - r.theta;
    r.v_plan0 = r.v;
    r.solve_time_ms = 2.0;
    r.solver_status = "optimal";
    r.plan_y.assign(5, r.y_plant);
    log.push_back(r);
  }
  return log;
}

TEST(Metrics, PlateausAndContainment) {
  MetricOptions opt;
  opt.steady_state_samples = 5;
  opt.settling_band = 0.1;
  opt.w_max = 0.02;
  opt.transition_time = 20 * 120.0;
  opt.horizon = 4;
  const RunMetrics m = ComputeMetrics("tube", SyntheticLog(), opt);
  ASSERT_EQ(m.plateaus.size(), 2u);
  // Error 4 * 0.5^15 at the first sample of the last five.
  EXPECT_NEAR(m.plateaus[1].steady_state_error, 4.0 * std::pow(0.5, 15), 1e-12);
  // |e_j| <= 0.1 first holds at j = 6 for a 4 K step.
  EXPECT_DOUBLE_EQ(m.plateaus[1].settling_time, 6 * 120.0);
  EXPECT_DOUBLE_EQ(m.plateaus[0].settling_time, 5 * 120.0);
  EXPECT_EQ(m.input_violations, 0);
  ASSERT_TRUE(m.tube.has_value());
  EXPECT_EQ(m.tube->steps, 5);
  EXPECT_EQ(m.tube->contained_steps, 5);
  EXPECT_EQ(m.tube->plan_samples, 5);
  // The plan frozen at the step holds 320 while the plant moves away.
  EXPECT_EQ(m.tube->plan_contained, 1);
  EXPECT_THROW(ComputeMetrics("x", {}, opt), InvalidArgument);
}

TEST(Metrics, CountsViolationsAndBrokenIdentities) {
  std::vector<ControlRecord> log = SyntheticLog();
  log[3].u = 0.3;
  log[5].v_plan0 = 0.0;
  const LogCheck c = CheckRunLog(log, 0.05, 0.18);
  EXPECT_FALSE(c.ok);
  EXPECT_EQ(c.input_bound_errors, 1);
  EXPECT_EQ(c.receding_horizon_errors, 1);
  EXPECT_EQ(c.input_identity_errors, 1);
  EXPECT_TRUE(CheckRunLog(SyntheticLog(), 0.05, 0.18).ok);
}

TEST(Metrics, RunLogRoundTrip) {
  const auto dir = TempDir("log");
  std::vector<ControlRecord> log = SyntheticLog();
  log[2].solver_status = "error";
  log[2].feasible = false;
  log[2].fallback = true;
  log[2].v_plan0 = std::numeric_limits<double>::quiet_NaN();
  const std::string path = (dir / "run.csv").string();
  WriteRunLog(path, log, 120.0, false);
  double ts = 0.0;
  const std::vector<ControlRecord> back = ReadRunLog(path, &ts);
  EXPECT_DOUBLE_EQ(ts, 120.0);
  ASSERT_EQ(back.size(), log.size());
  EXPECT_EQ(back[7].y_plant, log[7].y_plant);
  EXPECT_EQ(back[7].u, log[7].u);
  EXPECT_FALSE(back[2].feasible);
  EXPECT_TRUE(back[2].fallback);
  EXPECT_TRUE(std::isnan(back[2].v_plan0));
  EXPECT_TRUE(back[3].feasible);
}

TEST(Metrics, CompareNeedsLogs) {
  EXPECT_THROW(CompareLogs({}, DefaultConfig()), InvalidArgument);
}

NnarxModel IdentityScaled(const ModelParams& p) {
  return {p, ChannelScaler::Identity(1), ChannelScaler::Identity(1)};
}

// The model driven open loop from the steady state of u = 0.
IoResponse ModelPlant(const ModelParams& p) {
  return [p](const MatrixXd& u) {
    const StateLayout layout(p);
    MatrixXd y = MatrixXd::Zero(u.rows(), 1);
    for (Eigen::Index k = p.lookback + 1; k < u.rows(); ++k) {
      const VectorXd x = layout.FromTrajectory(y, u, static_cast<int>(k) - 1);
      y(k, 0) = EvaluateNetwork(p, x, u.row(k - 1).transpose())[0];
    }
    return y;
  };
}

MprsSpec Excitation() {
  MprsSpec s;
  s.length = 200;
  s.lower = VectorXd::Constant(1, -0.5);
  s.upper = VectorXd::Constant(1, 0.5);
  return s;
}

TEST(DisturbanceBound, VanishesWhenPlantIsModel) {
  const ModelParams p = testing::RandomModel(8, 4, 1, 1, {8}, 0.25);
  const DisturbanceBound b = EstimateDisturbanceBound(ModelPlant(p), IdentityScaled(p), 5, Excitation(), 1);
  EXPECT_LE(b.scaled, 1e-12);
}

TEST(DisturbanceBound, NeverShrinksWithMoreTrajectories) {
  const ModelParams p = testing::RandomModel(8, 4, 1, 1, {8}, 0.25);
  ModelParams other = p;
  other.b0[0] += 0.01;
  other.layers[0].W *= 1.1;
  const NnarxModel model = IdentityScaled(p);
  double last = 0.0;
  for (int n : {1, 2, 4, 8, 16}) {
    const DisturbanceBound b = EstimateDisturbanceBound(ModelPlant(other), model, n, Excitation(), 3);
    EXPECT_GE(b.scaled, last);
    EXPECT_GT(b.scaled, 0.0);
    EXPECT_LT(b.worst_trajectory, n);
    last = b.scaled;
  }
  EXPECT_THROW(EstimateDisturbanceBound(ModelPlant(p), model, 0, Excitation(), 1), InvalidArgument);
}

}  // namespace
}  // namespace nnmpc::harness
