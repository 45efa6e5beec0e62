#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "nnmpc/box.h"
#include "nnmpc/nlp.h"
#include "test_util.h"

namespace nnmpc::testing {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// min ||A z - b||^2  s.t.  E z = f,  G z <= h,  lo <= z <= hi.
struct LinearLs {
  MatrixXd A;
  VectorXd b;
  MatrixXd E;
  VectorXd f;
  MatrixXd G;
  VectorXd h;
  VectorXd lo;
  VectorXd hi;
};

inline NlpProblem ToProblem(const LinearLs& q) {
  NlpProblem p;
  p.num_vars = static_cast<int>(q.A.cols());
  p.lower = q.lo;
  p.upper = q.hi;
  p.evaluate = [q](const VectorXd& z, bool jac, NlpEvaluation& out) {
    out.cost = q.A * z - q.b;
    out.eq = q.E * z - q.f;
    out.ineq = q.G * z - q.h;
    if (jac) {
      out.cost_jac = q.A;
      out.eq_jac = q.E;
      out.ineq_jac = q.G;
    }
  };
  return p;
}

// Enumerates every combination of active bounds (free / lower / upper per
// bounded variable) and active general inequalities, solves the equality
// constrained least squares by its KKT system, and keeps the cheapest
// feasible candidate. For a convex problem this is the global optimum.
inline VectorXd EnumerationOracle(const LinearLs& q) {
  const int n = static_cast<int>(q.A.cols());
  const int ni = static_cast<int>(q.G.rows());
  std::vector<int> bounded;
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(q.lo[i]) || std::isfinite(q.hi[i])) bounded.push_back(i);
  }
  int patterns = 1;
  for (std::size_t i = 0; i < bounded.size(); ++i) patterns *= 3;
  double best = std::numeric_limits<double>::infinity();
  VectorXd best_z;
  for (int pat = 0; pat < patterns; ++pat) {
    for (int ia = 0; ia < (1 << ni); ++ia) {
      std::vector<VectorXd> rows;
      std::vector<double> rhs;
      for (int r = 0; r < q.E.rows(); ++r) {
        rows.push_back(q.E.row(r).transpose());
        rhs.push_back(q.f[r]);
      }
      for (int r = 0; r < ni; ++r) {
        if (ia & (1 << r)) {
          rows.push_back(q.G.row(r).transpose());
          rhs.push_back(q.h[r]);
        }
      }
      int code = pat;
      for (int i : bounded) {
        const int s = code % 3;
        code /= 3;
        if (s == 0) continue;
        VectorXd e = VectorXd::Zero(n);
        e[i] = 1.0;
        rows.push_back(e);
        rhs.push_back(s == 1 ? q.lo[i] : q.hi[i]);
      }
      const int nc = static_cast<int>(rows.size());
      MatrixXd k = MatrixXd::Zero(n + nc, n + nc);
      VectorXd r = VectorXd::Zero(n + nc);
      k.topLeftCorner(n, n) = 2.0 * q.A.transpose() * q.A;
      r.head(n) = 2.0 * q.A.transpose() * q.b;
      for (int c = 0; c < nc; ++c) {
        k.block(0, n + c, n, 1) = rows[c];
        k.block(n + c, 0, 1, n) = rows[c].transpose();
        r[n + c] = rhs[c];
      }
      Eigen::FullPivLU<MatrixXd> lu(k);
      if (lu.rank() < n + nc) continue;
      const VectorXd z = lu.solve(r).head(n);
      const double tol = 1e-10;
      bool ok = ((q.E * z - q.f).cwiseAbs().array() <= tol).all();
      ok = ok && ((q.G * z - q.h).array() <= tol).all();
      ok = ok && ((z - q.lo).array() >= -tol).all() && ((q.hi - z).array() >= -tol).all();
      if (!ok) continue;
      const double cost = (q.A * z - q.b).squaredNorm();
      if (cost < best) {
        best = cost;
        best_z = z;
      }
    }
  }
  return best_z;
}

// Two or three variables, the first two boxed; kind 1 adds an equality and
// kind 2 also an inequality.
inline LinearLs RandomLinearLs(std::mt19937_64& rng, int kind) {
  LinearLs q;
  const int n = kind == 0 ? 2 : 3;
  q.A = RandomMatrix(rng, n + 2, n);
  q.b = RandomVector(rng, n + 2, -3.0, 3.0);
  q.E = MatrixXd::Zero(kind == 0 ? 0 : 1, n);
  q.f = VectorXd::Zero(q.E.rows());
  if (kind > 0) {
    q.E = RandomMatrix(rng, 1, n);
    q.E(0, 2) = 1.0;
    q.f = RandomVector(rng, 1);
  }
  q.G = MatrixXd::Zero(kind == 2 ? 1 : 0, n);
  q.h = VectorXd::Zero(q.G.rows());
  if (kind == 2) {
    q.G = RandomMatrix(rng, 1, n);
    q.h = RandomVector(rng, 1, -0.2, 0.5);
  }
  q.lo = VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  q.hi = VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (int i = 0; i < 2; ++i) {
    q.lo[i] = -0.5 + 0.3 * RandomVector(rng, 1)[0];
    q.hi[i] = 0.5 + 0.3 * RandomVector(rng, 1)[0];
  }
  return q;
}

inline Box RandomBox(std::mt19937_64& rng, int dim, double spread = 1.0) {
  const VectorXd c = RandomVector(rng, dim, -2.0, 2.0);
  const VectorXd r = RandomVector(rng, dim, 0.0, spread);
  return Box(c - r, c + r);
}

inline VectorXd SampleIn(std::mt19937_64& rng, const Box& b) {
  std::uniform_real_distribution<double> t(0.0, 1.0);
  VectorXd x(b.dim());
  for (int i = 0; i < b.dim(); ++i) x[i] = b.lo()[i] + t(rng) * (b.hi()[i] - b.lo()[i]);
  return x;
}

inline VectorXd Vertex(const Box& b, unsigned mask) {
  VectorXd v(b.dim());
  for (int i = 0; i < b.dim(); ++i) v[i] = (mask >> i) & 1u ? b.hi()[i] : b.lo()[i];
  return v;
}

// Bounding box of all vertex sums of a and b.
inline Box VertexSumHull(const Box& a, const Box& b) {
  const int dim = a.dim();
  VectorXd lo = VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
  VectorXd hi = -lo;
  for (unsigned ma = 0; ma < (1u << dim); ++ma) {
    for (unsigned mb = 0; mb < (1u << dim); ++mb) {
      const VectorXd v = Vertex(a, ma) + Vertex(b, mb);
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }
  return Box(lo, hi);
}

// Grid points of a 2-D neighbourhood of a where membership in p disagrees
// with x + v in a for every vertex v of b (a is convex).
inline int PontryaginGridMismatches(const Box& a, const Box& b, const Box& p, int grid = 41) {
  const VectorXd lo = a.lo() - VectorXd::Constant(2, 1.0);
  const VectorXd hi = a.hi() + VectorXd::Constant(2, 1.0);
  int mismatches = 0;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      VectorXd x(2);
      x << lo[0] + (hi[0] - lo[0]) * i / (grid - 1), lo[1] + (hi[1] - lo[1]) * j / (grid - 1);
      bool in = true;
      for (unsigned m = 0; m < 4; ++m) in = in && a.Contains(x + Vertex(b, m), 1e-12);
      if (in != (!p.empty() && p.Contains(x, 1e-12))) ++mismatches;
    }
  }
  return mismatches;
}

}  // namespace nnmpc::testing
