#include <random>

#include <gtest/gtest.h>

#include "nnmpc/box.h"
#include "nnmpc/errors.h"
#include "nnmpc/nnarx.h"
#include "oracles.h"
#include "test_util.h"

namespace nnmpc {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::RandomVector;
using testing::RandomBox;
using testing::SampleIn;
using testing::Vertex;
using testing::VertexSumHull;
using testing::PontryaginGridMismatches;

TEST(Box, ConstructionAndEmptyFlag) {
  EXPECT_FALSE(Box(VectorXd::Zero(2), VectorXd::Ones(2)).empty());
  VectorXd hi(2);
  hi << 1.0, -1.0;
  EXPECT_TRUE(Box(VectorXd::Zero(2), hi).empty());
  EXPECT_THROW(Box(VectorXd::Zero(2), VectorXd::Zero(3)), InvalidArgument);
  EXPECT_THROW(Box::Symmetric(2, -0.1), InvalidArgument);
  const Box p = Box::Point(VectorXd::Ones(3));
  EXPECT_TRUE(p.Contains(VectorXd::Ones(3)));
  EXPECT_EQ(p.lo(), p.hi());
}

TEST(Box, MinkowskiMatchesSamplingOracle) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const int dim = 1 + t % 4;
    const Box a = RandomBox(rng, dim);
    const Box b = RandomBox(rng, dim);
    const Box s = MinkowskiAdd(a, b);
    // Every sampled sum lies inside; vertex sums reach every face.
    for (int k = 0; k < 200; ++k) {
      EXPECT_TRUE(s.Contains(SampleIn(rng, a) + SampleIn(rng, b), 1e-12));
    }
    const Box hull = VertexSumHull(a, b);
    EXPECT_LT((hull.lo() - s.lo()).norm(), 1e-12);
    EXPECT_LT((hull.hi() - s.hi()).norm(), 1e-12);
  }
}

TEST(Box, PontryaginMatchesGridOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    const Box a = RandomBox(rng, 2, 2.0);
    const Box b = RandomBox(rng, 2, 0.8);
    const Box p = PontryaginSubtract(a, b);
    const int mismatches = PontryaginGridMismatches(a, b, p);
    EXPECT_EQ(mismatches, 0);
    if (!p.empty()) {
      for (int k = 0; k < 50; ++k) {
        EXPECT_TRUE(a.Contains(SampleIn(rng, p) + SampleIn(rng, b), 1e-12));
      }
    }
  }
}

TEST(Box, PontryaginEmptiesWhenSubtrahendTooWide) {
  const Box a = Box::Symmetric(2, 1.0);
  EXPECT_TRUE(PontryaginSubtract(a, Box::Symmetric(2, 1.5)).empty());
  EXPECT_FALSE(PontryaginSubtract(a, Box::Symmetric(2, 1.0)).empty());
}

TEST(Box, IntersectAndTranslate) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const Box a = RandomBox(rng, 3);
    const Box b = RandomBox(rng, 3);
    const Box c = a.Intersect(b);
    for (int k = 0; k < 50; ++k) {
      const VectorXd x = RandomVector(rng, 3, -3.5, 3.5);
      EXPECT_EQ(a.Contains(x) && b.Contains(x), !c.empty() && c.Contains(x));
    }
    const VectorXd off = RandomVector(rng, 3);
    const Box tr = a.Translate(off);
    EXPECT_LT((tr.lo() - a.lo() - off).norm(), 1e-15);
    EXPECT_TRUE(a.Contains(a.Clamp(RandomVector(rng, 3, -5, 5))));
  }
}

TEST(Box, LinearImageMatchesVertexEnumeration) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const Box b = RandomBox(rng, 3);
    const MatrixXd m = testing::RandomMatrix(rng, 2, 3);
    const Box img = LinearImage(m, b);
    VectorXd lo = VectorXd::Constant(2, 1e300);
    VectorXd hi = VectorXd::Constant(2, -1e300);
    for (unsigned mask = 0; mask < 8; ++mask) {
      const VectorXd v = m * Vertex(b, mask);
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    EXPECT_LT((lo - img.lo()).norm(), 1e-12);
    EXPECT_LT((hi - img.hi()).norm(), 1e-12);
  }
}

TEST(Box, RpiSampledInvariance) {
  const int n_lookback = 5;
  const double w = 0.037;
  const Box omega = ComputeRpi(n_lookback, 1, 1, w);
  const Box dist = DisturbanceSet(n_lookback, 1, 1, w);
  const MatrixXd a = BuildStructuralMatrices(n_lookback, 1, 1).A;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<unsigned> bits(0, 1023);
  int violations = 0;
  for (int t = 0; t < 10000; ++t) {
    // Half of the pairs are vertex pairs, where invariance is tight.
    const bool vertex = t % 2 == 0;
    const VectorXd e = vertex ? Vertex(omega, bits(rng)) : SampleIn(rng, omega);
    const VectorXd d = vertex ? Vertex(dist, bits(rng)) : SampleIn(rng, dist);
    if (!omega.Contains(a * e + d)) ++violations;
  }
  EXPECT_EQ(violations, 0);
  // The minimal RPI set is reached: the vertex orbit touches every face.
  EXPECT_DOUBLE_EQ(omega.hi()[8], w);
  EXPECT_DOUBLE_EQ(omega.hi()[0], w);
  EXPECT_EQ(omega.hi()[1], 0.0);
}

TEST(Box, RpiEqualsSumOfShiftedDisturbances) {
  const Box omega = ComputeRpi(4, 2, 1, 0.2);
  const Box dist = DisturbanceSet(4, 2, 1, 0.2);
  const MatrixXd a = BuildStructuralMatrices(4, 2, 1).A;
  Box sum = Box::Point(VectorXd::Zero(12));
  MatrixXd power = MatrixXd::Identity(12, 12);
  for (int j = 0; j < 4; ++j) {
    sum = MinkowskiAdd(sum, LinearImage(power, dist));
    power = a * power;
  }
  EXPECT_LT((sum.lo() - omega.lo()).norm(), 1e-15);
  EXPECT_LT((sum.hi() - omega.hi()).norm(), 1e-15);
  EXPECT_EQ(ComputeRpi(4, 2, 1, 0.0).hi().norm(), 0.0);
}

TEST(Box, TighteningConsistency) {
  std::mt19937_64 rng(6);
  VectorXd lo(10);
  VectorXd hi(10);
  for (int i = 0; i < 10; ++i) {
    lo[i] = -1.1;
    hi[i] = i % 2 ? 0.9 : 1.1;
  }
  const Box x(lo, hi);
  const Box omega = ComputeRpi(5, 1, 1, 0.1);
  const Box tight = PontryaginSubtract(x, omega);
  ASSERT_FALSE(tight.empty());
  for (int t = 0; t < 5000; ++t) {
    EXPECT_TRUE(x.Contains(SampleIn(rng, tight) + SampleIn(rng, omega), 1e-12));
  }
}

}  // namespace
}  // namespace nnmpc
