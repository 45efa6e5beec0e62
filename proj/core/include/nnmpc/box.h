#pragma once

#include <Eigen/Dense>

namespace nnmpc {

// Axis-aligned box {x : lo <= x <= hi}. A box whose intervals inverted during
// construction is flagged empty rather than rejected.
class Box {
 public:
  Box() = default;
  Box(Eigen::VectorXd lo, Eigen::VectorXd hi);

  static Box Point(const Eigen::VectorXd& c);
  static Box Symmetric(const Eigen::VectorXd& half_width);
  static Box Symmetric(int dim, double half_width);
  static Box Unbounded(int dim);

  int dim() const { return static_cast<int>(lo_.size()); }
  bool empty() const { return empty_; }
  const Eigen::VectorXd& lo() const { return lo_; }
  const Eigen::VectorXd& hi() const { return hi_; }
  Eigen::VectorXd center() const { return 0.5 * (lo_ + hi_); }

  bool Contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  Eigen::VectorXd Clamp(const Eigen::VectorXd& x) const;
  Box Intersect(const Box& other) const;
  Box Translate(const Eigen::VectorXd& offset) const;

 private:
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
  bool empty_ = false;
};

Box MinkowskiAdd(const Box& a, const Box& b);
// Largest box P with P + b inside a: [a.lo - b.lo, a.hi - b.hi].
Box PontryaginSubtract(const Box& a, const Box& b);
// Tightest box containing M * box.
Box LinearImage(const Eigen::MatrixXd& m, const Box& box);

// W = B_x-structured box of amplitude w_max: +-w_max on the y slots of the
// newest block, zero elsewhere.
Box DisturbanceSet(int lookback, int input_dim, int output_dim, double w_max);

// Omega_x = sum_{j<N} A^j W for the nilpotent shift A.
Box ComputeRpi(int lookback, int input_dim, int output_dim, double w_max);

}  // namespace nnmpc
