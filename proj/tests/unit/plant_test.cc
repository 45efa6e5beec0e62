#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "nnmpc/errors.h"
#include "nnmpc/plant.h"

namespace nnmpc {
namespace {

PlantState Integrate(PlantState s, double u, const PlantDisturbance& d,
                     const PlantParams& p, int substeps) {
  return StepRk4(s, u, d, p, 1200.0, substeps);
}

TEST(Plant, DefaultsAreTableValues) {
  const PlantParams p;
  EXPECT_DOUBLE_EQ(p.tank_area, M_PI / 4.0);
  EXPECT_DOUBLE_EQ(p.water_density, 997.8);
  EXPECT_DOUBLE_EQ(p.water_heat, 4180.0);
  EXPECT_DOUBLE_EQ(p.metal_mass, 617.32);
  EXPECT_DOUBLE_EQ(p.metal_heat, 481.0);
  EXPECT_DOUBLE_EQ(p.radiation, 5.67e-8);
  EXPECT_DOUBLE_EQ(p.exchange_lm, 3326.4);
  EXPECT_DOUBLE_EQ(p.flame_temp, 1200.0);
  EXPECT_DOUBLE_EQ(p.exchange_f, 8.0);
  EXPECT_DOUBLE_EQ(p.water_level, 2.0);
  EXPECT_DOUBLE_EQ(p.nominal_flow, 1.0);
  EXPECT_DOUBLE_EQ(p.nominal_inlet_temp, 298.0);
  EXPECT_NO_THROW(p.Validate());
  PlantParams bad;
  bad.metal_mass = 0.0;
  EXPECT_THROW(bad.Validate(), InvalidArgument);
}

TEST(Plant, DerivativeMatchesExpandedArithmetic) {
  const PlantParams p;
  const PlantDeriv d = EvaluatePlantDeriv({300.0, 400.0}, 0.1, {298.0, 1.0}, p);
  // Term by term with the default constants.
  const double area = 0.7853981633974483;
  const double water = 997.8 * area * 2.0;
  const double t_dot = (1.0 * (298.0 - 300.0) + 3326.4 * area / 4180.0 * 100.0) / water;
  const double rad = 5.67e-8 * 8.0 * 0.1 * (1200.0 * 1200.0 * 1200.0 * 1200.0 -
                                            400.0 * 400.0 * 400.0 * 400.0);
  const double tm_dot = (-3326.4 * area * 100.0 + rad) / (617.32 * 481.0);
  EXPECT_NEAR(d.water_temp, t_dot, 1e-14);
  EXPECT_NEAR(d.metal_temp, tm_dot, 1e-12);
}

TEST(Plant, TrivialEquilibrium) {
  const PlantParams p;
  const PlantDisturbance d{298.0, 1.0};
  const PlantDeriv z = EvaluatePlantDeriv({298.0, 298.0}, 0.0, d, p);
  EXPECT_EQ(z.water_temp, 0.0);
  EXPECT_EQ(z.metal_temp, 0.0);
  const PlantState s = StepRk4({298.0, 298.0}, 0.0, d, p, 120.0, 120);
  EXPECT_EQ(s.water_temp, 298.0);
  EXPECT_EQ(s.metal_temp, 298.0);
}

TEST(Plant, CouplingLinearInExchange) {
  PlantParams p;
  const PlantState s{300.0, 400.0};
  const PlantDisturbance d{298.0, 1.0};
  const PlantDeriv a = EvaluatePlantDeriv(s, 0.1, d, p);
  p.exchange_lm *= 2.0;
  const PlantDeriv b = EvaluatePlantDeriv(s, 0.1, d, p);
  const PlantParams q;
  const double water = q.water_density * q.tank_area * q.water_level;
  const double coupling_t = q.exchange_lm * q.tank_area / q.water_heat * 100.0 / water;
  const double coupling_m = -q.exchange_lm * q.tank_area * 100.0 / (q.metal_mass * q.metal_heat);
  EXPECT_NEAR(b.water_temp - a.water_temp, coupling_t, 1e-14);
  EXPECT_NEAR(b.metal_temp - a.metal_temp, coupling_m, 1e-12);
}

TEST(Plant, RejectsNonpositiveTemperatures) {
  const PlantParams p;
  EXPECT_THROW(EvaluatePlantDeriv({0.0, 300.0}, 0.1, {298.0, 1.0}, p), InvalidArgument);
  EXPECT_THROW(StepRk4({-1.0, 300.0}, 0.1, {298.0, 1.0}, p, 120.0, 10), IntegrationFailure);
  EXPECT_THROW(StepRk4({300.0, 300.0}, 0.1, {298.0, 1.0}, p, 120.0, 0), InvalidArgument);
}

TEST(Plant, Rk4ConvergenceOrder) {
  const PlantParams p;
  const PlantDisturbance d{298.0, 1.0};
  const PlantState x0{310.0, 500.0};
  const PlantState ref = Integrate(x0, 0.15, d, p, 8192);
  std::vector<double> err;
  std::vector<double> h;
  for (int n : {16, 32, 64, 128}) {
    const PlantState s = Integrate(x0, 0.15, d, p, n);
    err.push_back(std::hypot(s.water_temp - ref.water_temp, s.metal_temp - ref.metal_temp));
    h.push_back(1200.0 / n);
  }
  // Least-squares slope of log(err) against log(h).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(err.size());
  for (int i = 0; i < n; ++i) {
    const double x = std::log(h[i]);
    const double y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_GE(order, 3.8);
}

TEST(Plant, SampleStepMatchesFineReference) {
  const PlantParams p;
  const PlantDisturbance d{298.0, 1.0};
  const PlantState x0{315.0, 480.0};
  const PlantState a = StepRk4(x0, 0.12, d, p, 120.0, 120);
  const PlantState b = StepRk4(x0, 0.12, d, p, 120.0, 1200);
  EXPECT_NEAR(a.water_temp, b.water_temp, 1e-6);
}

TEST(Plant, SteadyStateIsFixedPoint) {
  const PlantParams p;
  const PlantDisturbance d = PlantDisturbance::Nominal(p);
  const PlantState s = PlantSteadyState(0.115, d, p);
  const PlantDeriv z = EvaluatePlantDeriv(s, 0.115, d, p);
  EXPECT_LT(std::abs(z.water_temp), 1e-10);
  EXPECT_LT(std::abs(z.metal_temp), 1e-8);
  const PlantState next = StepRk4(s, 0.115, d, p, 120.0, 120);
  EXPECT_NEAR(next.water_temp, s.water_temp, 1e-9);
  EXPECT_NEAR(next.metal_temp, s.metal_temp, 1e-9);
  // Mid-range gas flow keeps the water in the operating range of the benchmark.
  EXPECT_GT(s.water_temp, 315.0);
  EXPECT_LT(s.water_temp, 330.0);
  EXPECT_NEAR(PlantInputForOutput(s.water_temp, d, p), 0.115, 1e-9);
}

TEST(Plant, MaximumInputStaysBelowFlame) {
  const PlantParams p;
  const PlantState s = PlantSteadyState(0.18, PlantDisturbance::Nominal(p), p);
  EXPECT_LT(s.water_temp, p.flame_temp);
  EXPECT_LT(s.metal_temp, p.flame_temp);
}

TEST(Plant, SampleTrajectoryBoundedUnderExcitation) {
  const PlantParams p;
  const PlantDisturbance d = PlantDisturbance::Nominal(p);
  std::vector<double> u(2500);
  for (int k = 0; k < 2500; ++k) u[k] = (k / 37) % 2 ? 0.18 : 0.05;
  const std::vector<PlantDisturbance> ds(u.size(), d);
  const PlantState x0 = PlantSteadyState(0.115, d, p);
  const SampledTrajectory t = SampleTrajectory(x0, u, ds, p, 120.0, 120);
  ASSERT_EQ(t.output.size(), u.size());
  EXPECT_EQ(t.output[0], x0.water_temp);
  for (double y : t.output) {
    EXPECT_GT(y, 298.0);
    EXPECT_LT(y, 360.0);
  }
  const SampledTrajectory empty = SampleTrajectory(x0, {}, {}, p, 120.0, 120);
  EXPECT_TRUE(empty.output.empty());
  EXPECT_THROW(SampleTrajectory(x0, u, {}, p, 120.0, 120), InvalidArgument);
}

}  // namespace
}  // namespace nnmpc
