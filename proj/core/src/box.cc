#include "nnmpc/box.h"

#include <limits>

#include <fmt/format.h>

#include "nnmpc/errors.h"
#include "nnmpc/nnarx.h"

namespace nnmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void CheckSameDim(const Box& a, const Box& b) {
  if (a.dim() != b.dim()) {
    throw InvalidArgument(
        fmt::format("box dimensions differ ({} vs {})", a.dim(), b.dim()));
  }
}

}  // namespace

Box::Box(VectorXd lo, VectorXd hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size()) {
    throw InvalidArgument("box bounds have different sizes");
  }
  empty_ = (lo_.array() > hi_.array()).any();
}

Box Box::Point(const VectorXd& c) { return Box(c, c); }

Box Box::Symmetric(const VectorXd& half_width) {
  if ((half_width.array() < 0.0).any()) {
    throw InvalidArgument("half widths must be nonnegative");
  }
  return Box(-half_width, half_width);
}

Box Box::Symmetric(int dim, double half_width) {
  return Symmetric(VectorXd::Constant(dim, half_width));
}

Box Box::Unbounded(int dim) {
  const double inf = std::numeric_limits<double>::infinity();
  return Box(VectorXd::Constant(dim, -inf), VectorXd::Constant(dim, inf));
}

bool Box::Contains(const VectorXd& x, double tol) const {
  if (x.size() != dim()) {
    throw InvalidArgument("point dimension does not match the box");
  }
  if (empty_) return false;
  return ((x.array() >= lo_.array() - tol) && (x.array() <= hi_.array() + tol))
      .all();
}

VectorXd Box::Clamp(const VectorXd& x) const {
  if (x.size() != dim()) {
    throw InvalidArgument("point dimension does not match the box");
  }
  return x.cwiseMax(lo_).cwiseMin(hi_);
}

Box Box::Intersect(const Box& other) const {
  CheckSameDim(*this, other);
  Box out(lo_.cwiseMax(other.lo_), hi_.cwiseMin(other.hi_));
  out.empty_ = out.empty_ || empty_ || other.empty_;
  return out;
}

Box Box::Translate(const VectorXd& offset) const {
  if (offset.size() != dim()) {
    throw InvalidArgument("offset dimension does not match the box");
  }
  Box out(lo_ + offset, hi_ + offset);
  out.empty_ = empty_;
  return out;
}

Box MinkowskiAdd(const Box& a, const Box& b) {
  CheckSameDim(a, b);
  Box out(a.lo() + b.lo(), a.hi() + b.hi());
  if (a.empty() || b.empty()) {
    return Box(VectorXd::Ones(a.dim()), VectorXd::Zero(a.dim()));
  }
  return out;
}

Box PontryaginSubtract(const Box& a, const Box& b) {
  CheckSameDim(a, b);
  if (a.empty()) return a;
  return Box(a.lo() - b.lo(), a.hi() - b.hi());
}

Box LinearImage(const MatrixXd& m, const Box& box) {
  if (m.cols() != box.dim()) {
    throw InvalidArgument("matrix columns do not match the box dimension");
  }
  const VectorXd c = box.center();
  const VectorXd r = 0.5 * (box.hi() - box.lo());
  const VectorXd mc = m * c;
  const VectorXd mr = m.cwiseAbs() * r;
  return Box(mc - mr, mc + mr);
}

Box DisturbanceSet(int lookback, int input_dim, int output_dim, double w_max) {
  if (w_max < 0.0) throw InvalidArgument("disturbance amplitude must be >= 0");
  const StateLayout layout(lookback, input_dim, output_dim);
  VectorXd half = VectorXd::Zero(layout.dim());
  half.segment(layout.output_offset(lookback - 1), output_dim).setConstant(w_max);
  return Box::Symmetric(half);
}

Box ComputeRpi(int lookback, int input_dim, int output_dim, double w_max) {
  const Box w = DisturbanceSet(lookback, input_dim, output_dim, w_max);
  const MatrixXd a =
      BuildStructuralMatrices(lookback, input_dim, output_dim).A;
  Box omega = Box::Point(VectorXd::Zero(w.dim()));
  MatrixXd power = MatrixXd::Identity(w.dim(), w.dim());
  for (int j = 0; j < lookback; ++j) {
    omega = MinkowskiAdd(omega, LinearImage(power, w));
    power = a * power;
  }
  return omega;
}

}  // namespace nnmpc
