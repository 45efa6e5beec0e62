#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "nnmpc/errors.h"
#include "nnmpc/nlp.h"
#include "oracles.h"
#include "test_util.h"

namespace nnmpc {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::RandomMatrix;
using testing::RandomVector;
using testing::LinearLs;
using testing::ToProblem;
using testing::EnumerationOracle;
using testing::RandomLinearLs;

TEST(Nlp, MatchesEnumerationOracleOnLinearLeastSquares) {
  std::mt19937_64 rng(7);
  NlpOptions opt;
  opt.feasibility_tol = 1e-10;
  int infeasible = 0;
  for (int t = 0; t < 60; ++t) {
    const LinearLs q = RandomLinearLs(rng, t % 3);
    const VectorXd oracle = EnumerationOracle(q);
    NlpWarmStart start;
    start.z = VectorXd::Zero(q.A.cols());
    const NlpResult r = SolveNlp(ToProblem(q), start, opt);
    if (oracle.size() == 0) {
      // No active set pattern is feasible.
      EXPECT_EQ(r.status, SolverStatus::kInfeasible) << "instance " << t;
      ++infeasible;
      continue;
    }
    EXPECT_EQ(r.status, SolverStatus::kOptimal) << "instance " << t;
    EXPECT_LT((r.z - oracle).lpNorm<Eigen::Infinity>(), 1e-6) << "instance " << t;
    EXPECT_NEAR(r.objective, (q.A * oracle - q.b).squaredNorm(), 1e-6);
  }
  EXPECT_LT(infeasible, 10);
}

TEST(Nlp, EqualityMultipliersSatisfyStationarity) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    LinearLs q;
    q.A = RandomMatrix(rng, 5, 4);
    q.b = RandomVector(rng, 5);
    q.E = RandomMatrix(rng, 2, 4);
    q.f = RandomVector(rng, 2);
    q.G = MatrixXd::Zero(0, 4);
    q.h = VectorXd::Zero(0);
    q.lo = VectorXd::Constant(4, -1e20);
    q.hi = VectorXd::Constant(4, 1e20);
    // Closed-form KKT solution of the equality-constrained problem.
    MatrixXd k = MatrixXd::Zero(6, 6);
    k.topLeftCorner(4, 4) = 2.0 * q.A.transpose() * q.A;
    k.topRightCorner(4, 2) = q.E.transpose();
    k.bottomLeftCorner(2, 4) = q.E;
    VectorXd r(6);
    r << 2.0 * q.A.transpose() * q.b, q.f;
    const VectorXd sol = k.fullPivLu().solve(r);
    NlpWarmStart start;
    start.z = VectorXd::Zero(4);
    NlpOptions opt;
    opt.feasibility_tol = 1e-10;
    const NlpResult res = SolveNlp(ToProblem(q), start, opt);
    EXPECT_LT((res.z - sol.head(4)).norm(), 1e-6);
    // The dense system is stationarity of ||r||^2, the solver reports
    // multipliers of (1/2) ||r||^2.
    EXPECT_LT((res.eq_multipliers - 0.5 * sol.tail(2)).norm(), 1e-4);
  }
}

TEST(Nlp, NonlinearProblemWithInequality) {
  // min (z0 - 2)^2 + (z1 - 1)^2 s.t. z0^2 + z1^2 <= 1 -> point on the circle.
  NlpProblem p;
  p.num_vars = 2;
  p.lower = VectorXd::Constant(2, -5.0);
  p.upper = VectorXd::Constant(2, 5.0);
  p.evaluate = [](const VectorXd& z, bool jac, NlpEvaluation& out) {
    out.cost = VectorXd(2);
    out.cost << z[0] - 2.0, z[1] - 1.0;
    out.eq = VectorXd(0);
    out.ineq = VectorXd::Constant(1, z.squaredNorm() - 1.0);
    if (jac) {
      out.cost_jac = MatrixXd::Identity(2, 2);
      out.eq_jac = MatrixXd(0, 2);
      out.ineq_jac = 2.0 * z.transpose();
    }
  };
  NlpWarmStart start;
  start.z = VectorXd::Zero(2);
  const NlpResult r = SolveNlp(p, start);
  VectorXd expected(2);
  expected << 2.0, 1.0;
  expected.normalize();
  EXPECT_EQ(r.status, SolverStatus::kOptimal);
  EXPECT_LT((r.z - expected).norm(), 1e-5);
  EXPECT_GT(r.ineq_multipliers[0], 0.0);
}

TEST(Nlp, ReportsInfeasibility) {
  // z0 = 2 while z0 is boxed in [-1, 1].
  NlpProblem p;
  p.num_vars = 1;
  p.lower = VectorXd::Constant(1, -1.0);
  p.upper = VectorXd::Constant(1, 1.0);
  p.evaluate = [](const VectorXd& z, bool jac, NlpEvaluation& out) {
    out.cost = z;
    out.eq = VectorXd::Constant(1, z[0] - 2.0);
    out.ineq = VectorXd(0);
    if (jac) {
      out.cost_jac = MatrixXd::Identity(1, 1);
      out.eq_jac = MatrixXd::Identity(1, 1);
      out.ineq_jac = MatrixXd(0, 1);
    }
  };
  NlpWarmStart start;
  start.z = VectorXd::Zero(1);
  NlpOptions opt;
  opt.max_outer = 15;
  const NlpResult r = SolveNlp(p, start, opt);
  EXPECT_EQ(r.status, SolverStatus::kInfeasible);
  EXPECT_NEAR(r.z[0], 1.0, 1e-12);
  EXPECT_EQ(SolverStatusName(r.status), "infeasible");
}

TEST(Nlp, NanThrows) {
  NlpProblem p;
  p.num_vars = 1;
  p.lower = VectorXd::Constant(1, -1.0);
  p.upper = VectorXd::Constant(1, 1.0);
  p.evaluate = [](const VectorXd& z, bool jac, NlpEvaluation& out) {
    out.cost = VectorXd::Constant(1, std::nan(""));
    out.eq = VectorXd(0);
    out.ineq = VectorXd(0);
    if (jac) {
      out.cost_jac = MatrixXd::Identity(1, 1);
      out.eq_jac = MatrixXd(0, 1);
      out.ineq_jac = MatrixXd(0, 1);
    }
  };
  NlpWarmStart start;
  start.z = VectorXd::Zero(1);
  EXPECT_THROW(SolveNlp(p, start), NumericalFailure);
}

}  // namespace
}  // namespace nnmpc
