#include "nnmpc/nnarx.h"

#include <cmath>
#include <string>

#include <fmt/format.h>

#include "nnmpc/errors.h"

namespace nnmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view ActivationName(Activation activation) {
  switch (activation) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
  }
  return "unknown";
}

Activation ParseActivation(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity" || name == "linear") return Activation::kIdentity;
  throw InvalidArgument(fmt::format("unsupported activation '{}'", name));
}

double LipschitzConstant(Activation /*activation*/) {
  // Both supported activations are 1-Lipschitz.
  return 1.0;
}

namespace {

void Activate(Activation activation, VectorXd& v) {
  if (activation == Activation::kTanh) v = v.array().tanh();
}

// sigma'(pre) written in terms of the post-activation value.
VectorXd ActivationSlope(Activation activation, const VectorXd& post) {
  if (activation == Activation::kTanh) {
    return (1.0 - post.array().square()).matrix();
  }
  return VectorXd::Ones(post.size());
}

void CheckShape(const ModelParams& params, const VectorXd& x,
                const VectorXd& u) {
  if (x.size() != params.state_dim() || u.size() != params.input_dim) {
    throw InvalidArgument(fmt::format(
        "state/input size ({}, {}) does not match model ({}, {})", x.size(),
        u.size(), params.state_dim(), params.input_dim));
  }
}

}  // namespace

void ModelParams::Validate() const {
  if (lookback < 1 || input_dim < 1 || output_dim < 1) {
    throw InvalidArgument("model dimensions must be positive");
  }
  if (layers.empty()) throw InvalidArgument("model needs at least one layer");
  Eigen::Index in_size = state_dim();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    const Eigen::Index width = layer.b.size();
    if (width < 1 || layer.W.rows() != width || layer.U.rows() != width ||
        layer.W.cols() != input_dim || layer.U.cols() != in_size) {
      throw InvalidArgument(fmt::format(
          "layer {} has inconsistent shapes: W {}x{}, U {}x{}, b {}", l + 1,
          layer.W.rows(), layer.W.cols(), layer.U.rows(), layer.U.cols(),
          width));
    }
    in_size = width;
  }
  if (U0.rows() != output_dim || U0.cols() != in_size ||
      b0.size() != output_dim) {
    throw InvalidArgument(fmt::format(
        "output layer has inconsistent shapes: U0 {}x{}, b0 {}", U0.rows(),
        U0.cols(), b0.size()));
  }
}

Eigen::Index ModelParams::num_parameters() const {
  Eigen::Index count = U0.size() + b0.size();
  for (const Layer& layer : layers) {
    count += layer.W.size() + layer.U.size() + layer.b.size();
  }
  return count;
}

namespace {

template <typename Matrix>
void PackRowMajor(const Matrix& m, VectorXd& out, Eigen::Index& pos) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[pos++] = m(i, j);
  }
}

template <typename Matrix>
void UnpackRowMajor(const VectorXd& in, Matrix& m, Eigen::Index& pos) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = in[pos++];
  }
}

}  // namespace

VectorXd ModelParams::Flatten() const {
  VectorXd theta(num_parameters());
  Eigen::Index pos = 0;
  for (const Layer& layer : layers) {
    PackRowMajor(layer.W, theta, pos);
    PackRowMajor(layer.U, theta, pos);
    PackRowMajor(layer.b, theta, pos);
  }
  PackRowMajor(U0, theta, pos);
  PackRowMajor(b0, theta, pos);
  return theta;
}

void ModelParams::Unflatten(const VectorXd& theta) {
  if (theta.size() != num_parameters()) {
    throw InvalidArgument("parameter vector has the wrong length");
  }
  Eigen::Index pos = 0;
  for (Layer& layer : layers) {
    UnpackRowMajor(theta, layer.W, pos);
    UnpackRowMajor(theta, layer.U, pos);
    UnpackRowMajor(theta, layer.b, pos);
  }
  UnpackRowMajor(theta, U0, pos);
  UnpackRowMajor(theta, b0, pos);
}

ModelParams ModelParams::Zeros(int lookback, int input_dim, int output_dim,
                               const std::vector<int>& widths,
                               Activation activation) {
  ModelParams params;
  params.lookback = lookback;
  params.input_dim = input_dim;
  params.output_dim = output_dim;
  int in_size = params.state_dim();
  for (int width : widths) {
    Layer layer;
    layer.W = MatrixXd::Zero(width, input_dim);
    layer.U = MatrixXd::Zero(width, in_size);
    layer.b = VectorXd::Zero(width);
    layer.activation = activation;
    params.layers.push_back(std::move(layer));
    in_size = width;
  }
  params.U0 = MatrixXd::Zero(output_dim, in_size);
  params.b0 = VectorXd::Zero(output_dim);
  params.Validate();
  return params;
}

StateLayout::StateLayout(int lookback, int input_dim, int output_dim)
    : lookback_(lookback), input_dim_(input_dim), output_dim_(output_dim) {
  if (lookback < 1 || input_dim < 1 || output_dim < 1) {
    throw InvalidArgument(fmt::format(
        "state layout dimensions must be positive (N={}, m={}, p={})",
        lookback, input_dim, output_dim));
  }
}

VectorXd StateLayout::CurrentOutput(const VectorXd& x) const {
  return x.segment(output_offset(lookback_ - 1), output_dim_);
}

VectorXd StateLayout::PreviousInput(const VectorXd& x) const {
  return x.segment(input_offset(lookback_ - 1), input_dim_);
}

VectorXd StateLayout::FromHistory(std::span<const VectorXd> outputs,
                                  std::span<const VectorXd> inputs) const {
  if (static_cast<int>(outputs.size()) != lookback_ ||
      static_cast<int>(inputs.size()) != lookback_) {
    throw InvalidArgument("history must hold exactly N outputs and N inputs");
  }
  VectorXd x(dim());
  for (int i = 0; i < lookback_; ++i) {
    if (outputs[i].size() != output_dim_ || inputs[i].size() != input_dim_) {
      throw InvalidArgument("history sample has the wrong dimension");
    }
    x.segment(output_offset(i), output_dim_) = outputs[i];
    x.segment(input_offset(i), input_dim_) = inputs[i];
  }
  return x;
}

VectorXd StateLayout::FromTrajectory(const MatrixXd& outputs,
                                     const MatrixXd& inputs, int k) const {
  if (k < lookback_ || k >= outputs.rows() || k > inputs.rows() ||
      outputs.cols() != output_dim_ || inputs.cols() != input_dim_) {
    throw InvalidArgument(fmt::format(
        "cannot form the state at sample {} of a {}-sample trajectory", k,
        outputs.rows()));
  }
  VectorXd x(dim());
  for (int i = 0; i < lookback_; ++i) {
    // z_{i+1} = [y_{k-N+1+i}, u_{k-N+i}]
    x.segment(output_offset(i), output_dim_) =
        outputs.row(k - lookback_ + 1 + i).transpose();
    x.segment(input_offset(i), input_dim_) =
        inputs.row(k - lookback_ + i).transpose();
  }
  return x;
}

VectorXd StateLayout::ConstantRegime(const VectorXd& y,
                                     const VectorXd& u) const {
  if (y.size() != output_dim_ || u.size() != input_dim_) {
    throw InvalidArgument("regime output/input has the wrong dimension");
  }
  VectorXd x(dim());
  for (int i = 0; i < lookback_; ++i) {
    x.segment(output_offset(i), output_dim_) = y;
    x.segment(input_offset(i), input_dim_) = u;
  }
  return x;
}

MatrixXd StateLayout::InputSlotsSelector() const {
  MatrixXd s = MatrixXd::Zero(dim(), input_dim_);
  for (int i = 0; i < lookback_; ++i) {
    s.block(input_offset(i), 0, input_dim_, input_dim_).setIdentity();
  }
  return s;
}

MatrixXd StateLayout::OutputSlotsSelector() const {
  MatrixXd s = MatrixXd::Zero(dim(), output_dim_);
  for (int i = 0; i < lookback_; ++i) {
    s.block(output_offset(i), 0, output_dim_, output_dim_).setIdentity();
  }
  return s;
}

StructuralMatrices BuildStructuralMatrices(int lookback, int input_dim,
                                           int output_dim) {
  const StateLayout layout(lookback, input_dim, output_dim);
  const int n = layout.dim();
  const int d = layout.block_dim();
  StructuralMatrices s;
  s.A = MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < lookback; ++i) {
    s.A.block(i * d, (i + 1) * d, d, d).setIdentity();
  }
  const int last = lookback - 1;
  s.Bu = MatrixXd::Zero(n, input_dim);
  s.Bu.block(layout.input_offset(last), 0, input_dim, input_dim)
      .setIdentity();
  s.Bx = MatrixXd::Zero(n, output_dim);
  s.Bx.block(layout.output_offset(last), 0, output_dim, output_dim)
      .setIdentity();
  s.C = s.Bx.transpose();
  return s;
}

VectorXd EvaluateNetwork(const ModelParams& params, const VectorXd& x,
                         const VectorXd& u) {
  CheckShape(params, x, u);
  VectorXd h = x;
  for (const Layer& layer : params.layers) {
    VectorXd a = layer.W * u + layer.U * h + layer.b;
    Activate(layer.activation, a);
    h = std::move(a);
  }
  return params.U0 * h + params.b0;
}

namespace {

// Shift-structured update shared by Step and the simulators.
VectorXd ShiftIn(const StateLayout& layout, const VectorXd& x,
                 const VectorXd& y_next, const VectorXd& u) {
  const int d = layout.block_dim();
  const int n = layout.dim();
  VectorXd next(n);
  next.head(n - d) = x.tail(n - d);
  const int last = layout.lookback() - 1;
  next.segment(layout.output_offset(last), layout.output_dim()) = y_next;
  next.segment(layout.input_offset(last), layout.input_dim()) = u;
  return next;
}

}  // namespace

VectorXd Step(const ModelParams& params, const VectorXd& x,
              const VectorXd& u) {
  const VectorXd eta = EvaluateNetwork(params, x, u);
  return ShiftIn(StateLayout(params), x, eta, u);
}

std::vector<VectorXd> Simulate(const ModelParams& params, const VectorXd& x0,
                               std::span<const VectorXd> inputs) {
  const StateLayout layout(params);
  if (x0.size() != layout.dim()) {
    throw InvalidArgument("initial state has the wrong dimension");
  }
  std::vector<VectorXd> outputs;
  outputs.reserve(inputs.size());
  VectorXd x = x0;
  for (const VectorXd& u : inputs) {
    x = Step(params, x, u);
    outputs.push_back(layout.CurrentOutput(x));
  }
  return outputs;
}

NetworkJacobian EvaluateNetworkJacobian(const ModelParams& params,
                                        const VectorXd& x, const VectorXd& u) {
  CheckShape(params, x, u);
  VectorXd h = x;
  MatrixXd dh_dx;
  MatrixXd dh_du;
  bool first = true;
  for (const Layer& layer : params.layers) {
    VectorXd a = layer.W * u + layer.U * h + layer.b;
    Activate(layer.activation, a);
    const VectorXd slope = ActivationSlope(layer.activation, a);
    if (first) {
      dh_dx = slope.asDiagonal() * layer.U;
      dh_du = slope.asDiagonal() * layer.W;
      first = false;
    } else {
      dh_dx = slope.asDiagonal() * (layer.U * dh_dx);
      dh_du = slope.asDiagonal() * (layer.W + layer.U * dh_du);
    }
    h = std::move(a);
  }
  NetworkJacobian jac;
  jac.value = params.U0 * h + params.b0;
  jac.d_state = params.U0 * dh_dx;
  jac.d_input = params.U0 * dh_du;
  return jac;
}

StateJacobians Jacobians(const ModelParams& params, const VectorXd& x,
                         const VectorXd& u) {
  const StateLayout layout(params);
  const NetworkJacobian net = EvaluateNetworkJacobian(params, x, u);
  const StructuralMatrices s = BuildStructuralMatrices(
      params.lookback, params.input_dim, params.output_dim);
  StateJacobians jac;
  jac.A = s.A + s.Bx * net.d_state;
  jac.B = s.Bu + s.Bx * net.d_input;
  return jac;
}

double SpectralNorm(const MatrixXd& m, double tolerance, int max_iterations) {
  if (m.size() == 0) return 0.0;
  VectorXd v = VectorXd::Ones(m.cols()) / std::sqrt(double(m.cols()));
  double sigma_sq = (m * v).squaredNorm();
  for (int it = 0; it < max_iterations; ++it) {
    VectorXd w = m.transpose() * (m * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double next = (m * v).squaredNorm();
    const bool converged =
        std::abs(next - sigma_sq) <= tolerance * std::max(next, 1e-300);
    sigma_sq = next;
    if (converged) break;
  }
  return std::sqrt(sigma_sq);
}

double DeltaIssMargin(const ModelParams& params) {
  double norm_product = SpectralNorm(params.U0);
  double lipschitz_product = 1.0;
  for (const Layer& layer : params.layers) {
    norm_product *= SpectralNorm(layer.U);
    lipschitz_product *= LipschitzConstant(layer.activation);
  }
  const double bound =
      1.0 / (lipschitz_product * std::sqrt(double(params.num_layers())));
  return norm_product - bound;
}

}  // namespace nnmpc
