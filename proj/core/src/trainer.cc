#include "nnmpc/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "nnmpc/errors.h"

namespace nnmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd GenerateMprs(const MprsSpec& spec, std::uint64_t seed) {
  if (spec.levels < 2) throw InvalidArgument("MPRS needs at least two levels");
  if (spec.min_dwell < 1 || spec.max_dwell < spec.min_dwell) {
    throw InvalidArgument("MPRS dwell range is invalid");
  }
  if (spec.length < 0) throw InvalidArgument("MPRS length is negative");
  if (spec.lower.size() < 1 || spec.lower.size() != spec.upper.size() ||
      !(spec.lower.array() < spec.upper.array()).all()) {
    throw InvalidArgument("MPRS bounds must satisfy lower < upper");
  }
  const Eigen::Index m = spec.lower.size();
  MatrixXd u(spec.length, m);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> level(0, spec.levels - 1);
  std::uniform_int_distribution<int> dwell(spec.min_dwell, spec.max_dwell);
  for (Eigen::Index c = 0; c < m; ++c) {
    const double step = (spec.upper[c] - spec.lower[c]) / (spec.levels - 1);
    int k = 0;
    while (k < spec.length) {
      const double value = spec.lower[c] + step * level(rng);
      const int len = std::min(dwell(rng), spec.length - k);
      u.block(k, c, len, 1).setConstant(value);
      k += len;
    }
  }
  return u;
}

Dataset MakeDataset(const IoTrajectory& train_source, int subseq_len,
                    int num_train, std::vector<IoTrajectory> validation,
                    std::vector<IoTrajectory> test, std::uint64_t seed) {
  if (train_source.u.rows() != train_source.y.rows()) {
    throw InvalidArgument("training trajectory has mismatched lengths");
  }
  if (subseq_len < 1 || num_train < 1 ||
      subseq_len > train_source.length()) {
    throw InvalidArgument(fmt::format(
        "cannot extract {} subsequences of length {} from {} samples",
        num_train, subseq_len, train_source.length()));
  }
  Dataset ds;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> offset(0,
                                            train_source.length() - subseq_len);
  for (int i = 0; i < num_train; ++i) {
    const int start = num_train == 1 && subseq_len == train_source.length()
                          ? 0
                          : offset(rng);
    ds.sequences.push_back({train_source.u.middleRows(start, subseq_len),
                            train_source.y.middleRows(start, subseq_len)});
    ds.train.push_back(static_cast<int>(ds.sequences.size()) - 1);
  }
  for (IoTrajectory& t : validation) {
    if (t.u.rows() != t.y.rows()) {
      throw InvalidArgument("validation trajectory has mismatched lengths");
    }
    ds.sequences.push_back(std::move(t));
    ds.validation.push_back(static_cast<int>(ds.sequences.size()) - 1);
  }
  for (IoTrajectory& t : test) {
    if (t.u.rows() != t.y.rows()) {
      throw InvalidArgument("test trajectory has mismatched lengths");
    }
    ds.sequences.push_back(std::move(t));
    ds.test.push_back(static_cast<int>(ds.sequences.size()) - 1);
  }
  return ds;
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be > 0");
  if (max_epochs < 1) throw InvalidArgument("max_epochs must be >= 1");
  if (reg_weight < 0.0) throw InvalidArgument("reg_weight must be >= 0");
  if (washout < 0) throw InvalidArgument("washout must be >= 0");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (patience < 1) throw InvalidArgument("patience must be >= 1");
}

ModelParams InitializeParams(const ArchSpec& arch, int input_dim,
                             int output_dim, std::uint64_t seed) {
  ModelParams p = ModelParams::Zeros(arch.lookback, input_dim, output_dim,
                                     arch.hidden, arch.activation);
  std::mt19937_64 rng(seed);
  auto fill = [&](MatrixXd& m, int fan_in, int fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
    }
  };
  int in_size = p.state_dim();
  for (Layer& layer : p.layers) {
    const int fan_in = in_size + input_dim;
    fill(layer.W, fan_in, layer.width());
    fill(layer.U, fan_in, layer.width());
    in_size = layer.width();
  }
  fill(p.U0, in_size, output_dim);
  return p;
}

int MinSequenceLength(int lookback, int washout) {
  return lookback + washout + 2;
}

namespace {

struct MarginGradient {
  double margin = 0.0;
  std::vector<MatrixXd> d_hidden;  // d margin / d U_l
  MatrixXd d_output;               // d margin / d U_0
};

MarginGradient MarginWithGradient(const ModelParams& p) {
  const int nl = p.num_layers();
  std::vector<double> norms(nl + 1);
  std::vector<MatrixXd> dnorm(nl + 1);
  auto top = [](const MatrixXd& m, double& sigma, MatrixXd& grad) {
    Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    sigma = svd.singularValues()[0];
    grad = svd.matrixU().col(0) * svd.matrixV().col(0).transpose();
  };
  for (int l = 0; l < nl; ++l) top(p.layers[l].U, norms[l], dnorm[l]);
  top(p.U0, norms[nl], dnorm[nl]);
  double lipschitz = 1.0;
  for (const Layer& layer : p.layers) {
    lipschitz *= LipschitzConstant(layer.activation);
  }
  MarginGradient out;
  double prod = 1.0;
  for (double v : norms) prod *= v;
  out.margin = prod - 1.0 / (lipschitz * std::sqrt(double(nl)));
  auto others = [&](int skip) {
    double q = 1.0;
    for (int l = 0; l <= nl; ++l) {
      if (l != skip) q *= norms[l];
    }
    return q;
  };
  for (int l = 0; l < nl; ++l) out.d_hidden.push_back(others(l) * dnorm[l]);
  out.d_output = others(nl) * dnorm[nl];
  return out;
}

// Simulation error of one sequence; accumulates into grad when non-null.
double SequenceLoss(const ModelParams& p, const StateLayout& layout,
                    const IoTrajectory& seq, int washout, double weight,
                    ModelParams* grad) {
  const int n_pred = seq.length() - p.lookback - 1;
  const int nl = p.num_layers();
  const int y_slot = layout.output_offset(p.lookback - 1);
  const int d = layout.block_dim();
  const int n = layout.dim();

  VectorXd x = layout.FromTrajectory(seq.y, seq.u, p.lookback);
  std::vector<std::vector<VectorXd>> acts;
  std::vector<VectorXd> errors(n_pred);
  if (grad) acts.resize(n_pred);
  double sse = 0.0;
  for (int j = 0; j < n_pred; ++j) {
    const int t = p.lookback + j;
    const VectorXd u = seq.u.row(t).transpose();
    std::vector<VectorXd> h(nl + 1);
    h[0] = x;
    for (int l = 0; l < nl; ++l) {
      const Layer& layer = p.layers[l];
      VectorXd a = layer.W * u + layer.U * h[l] + layer.b;
      if (layer.activation == Activation::kTanh) a = a.array().tanh();
      h[l + 1] = std::move(a);
    }
    const VectorXd eta = p.U0 * h[nl] + p.b0;
    VectorXd next(n);
    next.head(n - d) = x.tail(n - d);
    next.segment(y_slot, p.output_dim) = eta;
    next.segment(layout.input_offset(p.lookback - 1), p.input_dim) = u;
    x = std::move(next);
    if (j >= washout) {
      errors[j] = eta - seq.y.row(t + 1).transpose();
      sse += errors[j].squaredNorm();
    }
    if (grad) acts[j] = std::move(h);
  }
  if (!grad) return sse * weight;

  VectorXd lambda = VectorXd::Zero(n);
  for (int j = n_pred - 1; j >= 0; --j) {
    const int t = p.lookback + j;
    const VectorXd u = seq.u.row(t).transpose();
    if (j >= washout) lambda.segment(y_slot, p.output_dim) += 2.0 * weight * errors[j];
    const std::vector<VectorXd>& h = acts[j];
    const VectorXd g_out = lambda.segment(y_slot, p.output_dim);
    grad->U0.noalias() += g_out * h[nl].transpose();
    grad->b0 += g_out;
    VectorXd gh = p.U0.transpose() * g_out;
    for (int l = nl - 1; l >= 0; --l) {
      const Layer& layer = p.layers[l];
      VectorXd ga = gh;
      if (layer.activation == Activation::kTanh) {
        ga.array() *= 1.0 - h[l + 1].array().square();
      }
      grad->layers[l].W.noalias() += ga * u.transpose();
      grad->layers[l].U.noalias() += ga * h[l].transpose();
      grad->layers[l].b += ga;
      gh = layer.U.transpose() * ga;
    }
    // lambda_t = A' lambda_{t+1} + d eta / d x_t
    VectorXd prev(n);
    prev.head(d).setZero();
    prev.tail(n - d) = lambda.head(n - d);
    lambda = prev + gh;
  }
  return sse * weight;
}

}  // namespace

LossResult LossAndGradient(const ModelParams& params,
                           std::span<const IoTrajectory> batch,
                           double reg_weight, double margin_offset,
                           int washout, bool need_gradient) {
  params.Validate();
  if (batch.empty()) throw InvalidArgument("empty training batch");
  const int min_len = MinSequenceLength(params.lookback, washout);
  long count = 0;
  for (const IoTrajectory& seq : batch) {
    if (seq.length() < min_len || seq.y.rows() != seq.u.rows()) {
      throw InvalidArgument(fmt::format(
          "subsequence of length {} is shorter than N + washout + 2 = {}",
          seq.length(), min_len));
    }
    if (seq.u.cols() != params.input_dim || seq.y.cols() != params.output_dim) {
      throw InvalidArgument("subsequence channels do not match the model");
    }
    count += seq.length() - params.lookback - 1 - washout;
  }
  const double weight = 1.0 / (double(count) * params.output_dim);
  const StateLayout layout(params);
  ModelParams grad;
  if (need_gradient) {
    grad = params;
    grad.Unflatten(VectorXd::Zero(params.num_parameters()));
  }
  LossResult result;
  for (const IoTrajectory& seq : batch) {
    result.mse += SequenceLoss(params, layout, seq, washout, weight,
                               need_gradient ? &grad : nullptr);
  }
  result.loss = result.mse;
  if (reg_weight > 0.0 || need_gradient) {
    const MarginGradient mg = MarginWithGradient(params);
    result.margin = mg.margin;
    const double hinge = mg.margin + margin_offset;
    if (reg_weight > 0.0 && hinge > 0.0) {
      result.loss += reg_weight * hinge;
      if (need_gradient) {
        for (int l = 0; l < params.num_layers(); ++l) {
          grad.layers[l].U += reg_weight * mg.d_hidden[l];
        }
        grad.U0 += reg_weight * mg.d_output;
      }
    }
  } else {
    result.margin = DeltaIssMargin(params);
  }
  if (need_gradient) result.gradient = grad.Flatten();
  return result;
}

namespace {

double PartitionMse(const ModelParams& params, const Dataset& ds,
                    const std::vector<int>& indices, int washout) {
  if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<IoTrajectory> seqs;
  seqs.reserve(indices.size());
  for (int i : indices) seqs.push_back(ds.sequences[i]);
  return LossAndGradient(params, seqs, 0.0, 0.0, washout, false).mse;
}

}  // namespace

TrainResult Train(const Dataset& dataset, const ArchSpec& arch,
                  const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& progress) {
  config.Validate();
  if (dataset.train.empty()) {
    throw InvalidArgument("training partition is empty");
  }
  const IoTrajectory& first = dataset.sequences[dataset.train.front()];
  const int m = static_cast<int>(first.u.cols());
  const int p = static_cast<int>(first.y.cols());
  ModelParams params = InitializeParams(arch, m, p, config.seed);
  VectorXd theta = params.Flatten();
  VectorXd m1 = VectorXd::Zero(theta.size());
  VectorXd m2 = VectorXd::Zero(theta.size());
  const double beta1 = 0.9;
  const double beta2 = 0.999;
  const double eps = 1e-8;
  long adam_step = 0;

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> order = dataset.train;
  const bool use_validation = !dataset.validation.empty();
  const bool need_certificate = config.reg_weight > 0.0;

  TrainResult result;
  result.params = params;
  result.best_val_mse = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double train_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + std::size_t(config.batch_size));
      std::vector<IoTrajectory> batch;
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(dataset.sequences[order[i]]);
      }
      params.Unflatten(theta);
      LossResult lr = LossAndGradient(params, batch, config.reg_weight,
                                      config.margin_offset, config.washout);
      if (!std::isfinite(lr.loss) || !lr.gradient.allFinite()) {
        throw TrainingFailure(
            fmt::format("training diverged at epoch {}", epoch), epoch);
      }
      train_sum += lr.mse;
      ++batches;
      const double gnorm = lr.gradient.norm();
      if (config.clip_norm > 0.0 && gnorm > config.clip_norm) {
        lr.gradient *= config.clip_norm / gnorm;
      }
      ++adam_step;
      m1 = beta1 * m1 + (1 - beta1) * lr.gradient;
      m2 = beta2 * m2 + (1 - beta2) * lr.gradient.cwiseAbs2();
      const double c1 = 1.0 - std::pow(beta1, double(adam_step));
      const double c2 = 1.0 - std::pow(beta2, double(adam_step));
      theta.array() -= config.learning_rate * (m1.array() / c1) /
                       ((m2.array() / c2).sqrt() + eps);
    }
    params.Unflatten(theta);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = train_sum / batches;
    rec.margin = DeltaIssMargin(params);
    rec.val_mse = use_validation
                      ? PartitionMse(params, dataset, dataset.validation,
                                     config.washout)
                      : PartitionMse(params, dataset, dataset.train,
                                     config.washout);
    if (!std::isfinite(rec.val_mse)) {
      throw TrainingFailure(
          fmt::format("validation loss is not finite at epoch {}", epoch),
          epoch);
    }
    result.log.push_back(rec);
    if (progress) progress(rec);
    const bool eligible = !need_certificate || rec.margin < 0.0;
    if (eligible && rec.val_mse < result.best_val_mse) {
      result.best_val_mse = rec.val_mse;
      result.best_epoch = epoch;
      result.params = params;
      since_best = 0;
    } else if (++since_best >= config.patience && result.best_epoch > 0) {
      break;
    }
    if (rec.train_mse <= 1e-12 && eligible) break;
  }
  if (result.best_epoch < 0) {
    throw TrainingFailure(
        "no epoch satisfied the stability certificate", config.max_epochs);
  }
  return result;
}

OpenLoopResult OpenLoopPrediction(const ModelParams& params,
                                  const IoTrajectory& trajectory) {
  const int n = params.lookback;
  if (trajectory.length() < n + 2) {
    throw InvalidArgument("trajectory too short for open-loop prediction");
  }
  const StateLayout layout(params);
  VectorXd x = layout.FromTrajectory(trajectory.y, trajectory.u, n);
  const int count = trajectory.length() - n - 1;
  OpenLoopResult out;
  out.predicted.resize(count, params.output_dim);
  out.actual = trajectory.y.bottomRows(count);
  for (int j = 0; j < count; ++j) {
    x = Step(params, x, trajectory.u.row(n + j).transpose());
    out.predicted.row(j) = layout.CurrentOutput(x).transpose();
  }
  return out;
}

double FitIndex(const MatrixXd& predicted, const MatrixXd& actual) {
  if (predicted.rows() != actual.rows() || predicted.cols() != actual.cols() ||
      actual.rows() == 0) {
    throw InvalidArgument("FIT needs equally shaped, nonempty sequences");
  }
  const Eigen::RowVectorXd mean = actual.colwise().mean();
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index k = 0; k < actual.rows(); ++k) {
    num += (predicted.row(k) - actual.row(k)).norm();
    den += (actual.row(k) - mean).norm();
  }
  if (den == 0.0) throw InvalidArgument("FIT is undefined for a constant signal");
  return 100.0 * (1.0 - num / den);
}

}  // namespace nnmpc
