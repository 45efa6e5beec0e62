#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace nnmpc {

enum class Activation { kTanh, kIdentity };

std::string_view ActivationName(Activation activation);
Activation ParseActivation(std::string_view name);
double LipschitzConstant(Activation activation);

// One hidden layer: eta_l = sigma(W u + U eta_{l-1} + b), with eta_0 = x.
struct Layer {
  Eigen::MatrixXd W;  // width x m
  Eigen::MatrixXd U;  // width x (n for the first layer, previous width after)
  Eigen::VectorXd b;
  Activation activation = Activation::kTanh;

  int width() const { return static_cast<int>(b.size()); }
};

// Weights and dimensions of an NNARX regression network. The state is
// x = [z_1', ..., z_N']' with z_i = [y_{k-N+i}', u_{k-N-1+i}']'.
struct ModelParams {
  int lookback = 1;
  int input_dim = 1;
  int output_dim = 1;
  std::vector<Layer> layers;
  Eigen::MatrixXd U0;  // p x width_M
  Eigen::VectorXd b0;  // p

  int block_dim() const { return input_dim + output_dim; }
  int state_dim() const { return lookback * block_dim(); }
  int num_layers() const { return static_cast<int>(layers.size()); }

  // Throws InvalidArgument when any shape is inconsistent.
  void Validate() const;

  // Parameter vector in the order W_1, U_1, b_1, ..., W_M, U_M, b_M, U_0, b_0,
  // matrices row-major.
  Eigen::Index num_parameters() const;
  Eigen::VectorXd Flatten() const;
  void Unflatten(const Eigen::VectorXd& theta);

  static ModelParams Zeros(int lookback, int input_dim, int output_dim,
                           const std::vector<int>& widths,
                           Activation activation = Activation::kTanh);
};

// Index arithmetic for the interleaved (y, u) block layout of the state.
class StateLayout {
 public:
  StateLayout(int lookback, int input_dim, int output_dim);
  explicit StateLayout(const ModelParams& params)
      : StateLayout(params.lookback, params.input_dim, params.output_dim) {}

  int lookback() const { return lookback_; }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  int block_dim() const { return input_dim_ + output_dim_; }
  int dim() const { return lookback_ * block_dim(); }

  // Zero-based block index; block lookback()-1 is z_N.
  int output_offset(int block) const { return block * block_dim(); }
  int input_offset(int block) const {
    return block * block_dim() + output_dim_;
  }

  Eigen::VectorXd CurrentOutput(const Eigen::VectorXd& x) const;
  Eigen::VectorXd PreviousInput(const Eigen::VectorXd& x) const;

  // outputs = y_{k-N+1..k}, inputs = u_{k-N..k-1}, oldest first.
  Eigen::VectorXd FromHistory(std::span<const Eigen::VectorXd> outputs,
                              std::span<const Eigen::VectorXd> inputs) const;
  // State at sample k of a trajectory stored one sample per row; needs k >= N.
  Eigen::VectorXd FromTrajectory(const Eigen::MatrixXd& outputs,
                                 const Eigen::MatrixXd& inputs, int k) const;
  // Constant regime: every past output equals y and every past input u.
  Eigen::VectorXd ConstantRegime(const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& u) const;

  // n x m matrix writing u into every input slot (d x / d u of the regime).
  Eigen::MatrixXd InputSlotsSelector() const;
  // n x p matrix writing y into every output slot.
  Eigen::MatrixXd OutputSlotsSelector() const;

 private:
  int lookback_;
  int input_dim_;
  int output_dim_;
};

struct StructuralMatrices {
  Eigen::MatrixXd A;   // n x n block up-shift
  Eigen::MatrixXd Bu;  // n x m
  Eigen::MatrixXd Bx;  // n x p
  Eigen::MatrixXd C;   // p x n
};

StructuralMatrices BuildStructuralMatrices(int lookback, int input_dim,
                                           int output_dim);

// eta(x, u) = U_0 eta_M + b_0.
Eigen::VectorXd EvaluateNetwork(const ModelParams& params,
                                const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u);

// x+ = A x + B_u u + B_x eta(x, u).
Eigen::VectorXd Step(const ModelParams& params, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& u);

// Returns y_{k+1} = C x_{k+1} for every input u_k of the sequence.
std::vector<Eigen::VectorXd> Simulate(const ModelParams& params,
                                      const Eigen::VectorXd& x0,
                                      std::span<const Eigen::VectorXd> inputs);

struct NetworkJacobian {
  Eigen::VectorXd value;    // eta(x, u)
  Eigen::MatrixXd d_state;  // p x n
  Eigen::MatrixXd d_input;  // p x m
};

NetworkJacobian EvaluateNetworkJacobian(const ModelParams& params,
                                        const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& u);

struct StateJacobians {
  Eigen::MatrixXd A;  // df/dx, n x n
  Eigen::MatrixXd B;  // df/du, n x m
};

StateJacobians Jacobians(const ModelParams& params, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u);

// Largest singular value by power iteration on M'M from the normalized
// all-ones vector.
double SpectralNorm(const Eigen::MatrixXd& m, double tolerance = 1e-10,
                    int max_iterations = 500);

// prod_{l=0..M} ||U_l||_2 - 1 / ((prod_l L_l) sqrt(M)). A negative value
// certifies the exponential incremental ISS sufficient condition.
double DeltaIssMargin(const ModelParams& params);

}  // namespace nnmpc
