#include "nnmpc/harness/pipeline.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "nnmpc/deb.h"
#include "nnmpc/disturbance_bound.h"
#include "nnmpc/errors.h"
#include "nnmpc/harness/csv.h"
#include "nnmpc/offset_free.h"
#include "nnmpc/plant.h"

namespace nnmpc::harness {

namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

VectorXd Scalar(double v) { return VectorXd::Constant(1, v); }

MprsSpec Excitation(const ExperimentConfig& cfg, int length) {
  MprsSpec s;
  s.levels = cfg.data.levels;
  s.min_dwell = cfg.data.min_dwell;
  s.max_dwell = cfg.data.max_dwell;
  s.length = length;
  s.lower = Scalar(cfg.data.input_lower);
  s.upper = Scalar(cfg.data.input_upper);
  return s;
}

IoTrajectory Excite(const ExperimentConfig& cfg, int length,
                    std::uint64_t seed) {
  IoTrajectory t;
  t.u = GenerateMprs(Excitation(cfg, length), seed);
  t.y = SimulatePlantResponse(cfg, t.u);
  return t;
}

IoTrajectory ScaleTrajectory(const NnarxModel& model, const IoTrajectory& t) {
  return {model.input_scaler.ToScaledRows(t.u),
          model.output_scaler.ToScaledRows(t.y)};
}

}  // namespace

MatrixXd SimulatePlantResponse(const ExperimentConfig& cfg,
                               const MatrixXd& inputs) {
  if (inputs.cols() != 1) {
    throw InvalidArgument("the water heater has a single input");
  }
  const PlantDisturbance d = PlantDisturbance::Nominal(cfg.plant);
  const PlantState x0 = PlantSteadyState(cfg.data.initial_input, d, cfg.plant);
  std::vector<double> u(inputs.data(), inputs.data() + inputs.rows());
  const std::vector<PlantDisturbance> ds(u.size(), d);
  const SampledTrajectory traj =
      SampleTrajectory(x0, u, ds, cfg.plant, cfg.sample_time, cfg.substeps);
  return Eigen::Map<const VectorXd>(traj.output.data(), traj.output.size());
}

ExperimentData GenerateData(const ExperimentConfig& cfg) {
  cfg.Validate();
  ExperimentData data;
  data.train = Excite(cfg, cfg.data.train_length, cfg.seed);
  for (int i = 0; i < cfg.data.validation_count; ++i) {
    data.validation.push_back(Excite(cfg, cfg.data.eval_length, cfg.seed + 1000 + i));
  }
  for (int i = 0; i < cfg.data.test_count; ++i) {
    data.test.push_back(Excite(cfg, cfg.data.eval_length, cfg.seed + 2000 + i));
  }
  return data;
}

namespace {

void SaveTrajectory(const std::string& path, const IoTrajectory& t,
                    double sample_time) {
  MatrixXd m(t.length(), 3);
  for (int k = 0; k < t.length(); ++k) {
    m(k, 0) = k * sample_time;
    m(k, 1) = t.u(k, 0);
    m(k, 2) = t.y(k, 0);
  }
  WriteMatrixCsv(path, {"t", "u_1", "y_1"}, m);
}

IoTrajectory LoadTrajectory(const std::string& path) {
  std::vector<std::string> header;
  const MatrixXd m = ReadMatrixCsv(path, &header);
  if (header.size() != 3 || header[1] != "u_1" || header[2] != "y_1") {
    throw InvalidArgument(fmt::format("'{}' is not a dataset file", path));
  }
  return {m.col(1), m.col(2)};
}

}  // namespace

void SaveData(const ExperimentData& data, const std::string& dir,
              double sample_time) {
  fs::create_directories(dir);
  SaveTrajectory((fs::path(dir) / "train.csv").string(), data.train, sample_time);
  for (std::size_t i = 0; i < data.validation.size(); ++i) {
    SaveTrajectory((fs::path(dir) / fmt::format("validation_{:02d}.csv", i)).string(),
                   data.validation[i], sample_time);
  }
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    SaveTrajectory((fs::path(dir) / fmt::format("test_{:02d}.csv", i)).string(),
                   data.test[i], sample_time);
  }
}

ExperimentData LoadData(const std::string& dir) {
  const fs::path train = fs::path(dir) / "train.csv";
  if (!fs::exists(train)) {
    throw FileError(fmt::format(
        "dataset not found: '{}' (run generate-data first)", train.string()));
  }
  ExperimentData data;
  data.train = LoadTrajectory(train.string());
  for (int i = 0;; ++i) {
    const fs::path p = fs::path(dir) / fmt::format("validation_{:02d}.csv", i);
    if (!fs::exists(p)) break;
    data.validation.push_back(LoadTrajectory(p.string()));
  }
  for (int i = 0;; ++i) {
    const fs::path p = fs::path(dir) / fmt::format("test_{:02d}.csv", i);
    if (!fs::exists(p)) break;
    data.test.push_back(LoadTrajectory(p.string()));
  }
  if (data.test.empty()) {
    throw FileError(fmt::format("no test trajectory in '{}'", dir));
  }
  return data;
}

std::string DescribeData(const ExperimentData& data) {
  auto stats = [](const IoTrajectory& t) {
    return fmt::format("{} samples, u in [{:.4f}, {:.4f}], y in [{:.3f}, {:.3f}] K",
                       t.length(), t.u.minCoeff(), t.u.maxCoeff(),
                       t.y.minCoeff(), t.y.maxCoeff());
  };
  std::string s = fmt::format("train: {}\n", stats(data.train));
  s += fmt::format("validation: {} trajectories\n", data.validation.size());
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    s += fmt::format("test {}: {}\n", i, stats(data.test[i]));
  }
  return s;
}

TrainingOutcome TrainModel(const ExperimentConfig& cfg,
                           const ExperimentData& data, bool verbose) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainingOutcome out;
  out.model.input_scaler = ChannelScaler::FromRange(
      data.train.u.colwise().minCoeff().transpose(),
      data.train.u.colwise().maxCoeff().transpose());
  out.model.output_scaler = ChannelScaler::FromRange(
      data.train.y.colwise().minCoeff().transpose(),
      data.train.y.colwise().maxCoeff().transpose());
  std::vector<IoTrajectory> val;
  std::vector<IoTrajectory> test;
  for (const IoTrajectory& t : data.validation) val.push_back(ScaleTrajectory(out.model, t));
  for (const IoTrajectory& t : data.test) test.push_back(ScaleTrajectory(out.model, t));
  const Dataset ds = MakeDataset(ScaleTrajectory(out.model, data.train),
                                 cfg.training.subsequence_length,
                                 cfg.training.subsequence_count, std::move(val),
                                 std::move(test), cfg.seed);
  TrainConfig tc = cfg.training.train;
  tc.seed = cfg.seed;
  auto progress = [&](const EpochRecord& r) {
    if (verbose && (r.epoch % 50 == 0 || r.epoch == 1)) {
      std::cerr << fmt::format("epoch {:5d}  train {:.3e}  val {:.3e}  margin {:+.4f}\n",
                               r.epoch, r.train_mse, r.val_mse, r.margin);
    }
  };
  out.result = Train(ds, cfg.training.arch, tc, progress);
  out.model.params = out.result.params;
  const OpenLoopResult ol =
      OpenLoopPrediction(out.model.params, ds.sequences[ds.test.front()]);
  out.test_fit = FitIndex(ol.predicted, ol.actual);
  out.margin = DeltaIssMargin(out.model.params);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void WriteTrainingLog(const std::string& path, const TrainResult& result) {
  MatrixXd m(result.log.size(), 4);
  for (std::size_t i = 0; i < result.log.size(); ++i) {
    const EpochRecord& r = result.log[i];
    m.row(i) << r.epoch, r.train_mse, r.val_mse, r.margin;
  }
  WriteMatrixCsv(path, {"epoch", "train_mse", "val_mse", "margin"}, m);
}

Box InputBox(const ExperimentConfig& cfg, const NnarxModel& model) {
  return Box(model.input_scaler.ToScaled(Scalar(cfg.data.input_lower)),
             model.input_scaler.ToScaled(Scalar(cfg.data.input_upper)));
}

Box StateBox(const ExperimentConfig& cfg, const NnarxModel& model) {
  const StateLayout layout(model.params);
  const Box u = InputBox(cfg, model);
  const double y_half = 1.0 + cfg.controller.output_margin;
  VectorXd lo(layout.dim());
  VectorXd hi(layout.dim());
  for (int b = 0; b < layout.lookback(); ++b) {
    lo.segment(layout.output_offset(b), layout.output_dim()).setConstant(-y_half);
    hi.segment(layout.output_offset(b), layout.output_dim()).setConstant(y_half);
    lo.segment(layout.input_offset(b), layout.input_dim()) = u.lo();
    hi.segment(layout.input_offset(b), layout.input_dim()) = u.hi();
  }
  return Box(lo, hi);
}

namespace {

EquilibriumOptions EquilibriumFor(const ExperimentConfig& cfg,
                                  const NnarxModel& model) {
  EquilibriumOptions o;
  o.input_box = InputBox(cfg, model);
  o.output_range = Box::Symmetric(model.params.output_dim, 1.0);
  return o;
}

}  // namespace

SynthesisOutcome Synthesize(const ExperimentConfig& cfg,
                            const NnarxModel& model) {
  const ModelParams& params = model.params;
  const ControllerSpec& spec = cfg.controller;
  SynthesisOutcome s;
  s.design_output = spec.design_output > 0.0 ? spec.design_output
                                             : cfg.scenario.reference.front().value;
  const EquilibriumOptions eq_opt = EquilibriumFor(cfg, model);
  const VectorXd guess = VectorXd::Zero(params.input_dim);
  const Equilibrium eq = FindEquilibrium(
      params, model.output_scaler.ToScaled(Scalar(s.design_output)), guess, eq_opt);
  const StateJacobians jac = LinearizeAt(params, eq);
  const SchurResult schur = SchurCheck(jac.A);
  s.spectral_radius = schur.spectral_radius;
  if (!schur.is_schur) {
    throw SynthesisFailure(fmt::format(
        "A_delta at {} K has spectral radius {:.6f} >= 1; the model is not "
        "locally stable there",
        s.design_output, schur.spectral_radius));
  }
  const MatrixXd c =
      BuildStructuralMatrices(params.lookback, params.input_dim, params.output_dim).C;
  s.dc_gain = DcGain(jac.A, jac.B, c)(0, 0);
  s.mu_check = EstimateMuMax(jac.A, jac.B, c);
  s.mu_hat = spec.mu_hat > 0.0 ? spec.mu_hat : spec.mu_hat_factor * s.mu_check;
  s.mu = IntegratorGain(jac.A, jac.B, c, s.mu_hat);

  if (spec.w_max < 0.0) {
    IoResponse plant = [&cfg](const MatrixXd& u) {
      return SimulatePlantResponse(cfg, u);
    };
    const DisturbanceBound b = EstimateDisturbanceBound(
        plant, model, spec.bound_trajectories, Excitation(cfg, spec.bound_length),
        cfg.seed + 3000);
    s.w_max_scaled = b.scaled;
    s.w_max_physical = b.physical;
    s.w_estimated = true;
  } else {
    s.w_max_physical = spec.w_max;
    s.w_max_scaled = spec.w_max / std::abs(model.output_scaler.scale[0]);
  }
  s.omega = ComputeRpi(params.lookback, params.input_dim, params.output_dim,
                       s.w_max_scaled);

  s.ocp.horizon = spec.horizon;
  s.ocp.r_e = spec.r_e;
  s.ocp.r_u = spec.r_u;
  s.ocp.q_xi = spec.q_xi;
  s.ocp.q_theta = spec.q_theta;
  s.ocp.terminal_tolerance = spec.terminal_tolerance;
  s.ocp.warm_start = spec.warm_start;
  s.ocp.solver = spec.solver;
  s.ocp.input_box = InputBox(cfg, model);
  s.ocp.state_box = StateBox(cfg, model);
  s.ocp.Validate(params.state_dim(), params.input_dim);
  if (PontryaginSubtract(s.ocp.state_box, s.omega).empty()) {
    throw ConfigurationError("the tube is wider than the state constraints");
  }
  s.mhe_horizon = spec.mhe_horizon;
  s.mhe_prior = spec.mhe_prior;

  std::vector<double> setpoints;
  for (const ReferencePoint& r : cfg.scenario.reference) setpoints.push_back(r.value);
  s.equilibria.resize(setpoints.size(), 5);
  VectorXd u_guess = eq.input;
  for (std::size_t i = 0; i < setpoints.size(); ++i) {
    const Equilibrium e = FindEquilibrium(
        params, model.output_scaler.ToScaled(Scalar(setpoints[i])), u_guess, eq_opt);
    const StateJacobians j = LinearizeAt(params, e);
    const MatrixXd mu_c = IntegratorGain(j.A, j.B, c, 1.0);
    // Loop under the designed mu, expressed as an effective mu_hat there.
    const double mu_hat_here = (s.mu * mu_c.inverse())(0, 0);
    s.equilibria.row(i) << setpoints[i],
        model.input_scaler.ToPhysical(e.input)[0], e.residual,
        SchurCheck(j.A).spectral_radius,
        SchurCheck(IntegralLoopMatrix(j.A, j.B, c, mu_hat_here)).spectral_radius;
  }
  return s;
}

namespace {

json BoxToJson(const Box& b) {
  return {{"lo", std::vector<double>(b.lo().data(), b.lo().data() + b.dim())},
          {"hi", std::vector<double>(b.hi().data(), b.hi().data() + b.dim())}};
}

Box BoxFromJson(const json& j) {
  const auto lo = j.at("lo").get<std::vector<double>>();
  const auto hi = j.at("hi").get<std::vector<double>>();
  return Box(Eigen::Map<const VectorXd>(lo.data(), lo.size()),
             Eigen::Map<const VectorXd>(hi.data(), hi.size()));
}

json MatrixJson(const MatrixXd& m) {
  std::vector<double> data;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

MatrixXd MatrixFromJson(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw InvalidArgument("matrix payload does not match its shape");
  }
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data[i * cols + k];
  }
  return m;
}

}  // namespace

void SaveController(const SynthesisOutcome& s, const std::string& path) {
  json j;
  j["design_output"] = s.design_output;
  j["mu_check"] = s.mu_check;
  j["mu_hat"] = s.mu_hat;
  j["mu"] = MatrixJson(s.mu);
  j["dc_gain"] = s.dc_gain;
  j["spectral_radius"] = s.spectral_radius;
  j["w_max_scaled"] = s.w_max_scaled;
  j["w_max_physical"] = s.w_max_physical;
  j["w_estimated"] = s.w_estimated;
  j["omega"] = BoxToJson(s.omega);
  j["ocp"] = {{"horizon", s.ocp.horizon},
              {"r_e", s.ocp.r_e},
              {"r_u", s.ocp.r_u},
              {"q_xi", s.ocp.q_xi},
              {"q_theta", s.ocp.q_theta},
              {"terminal_tolerance", s.ocp.terminal_tolerance},
              {"warm_start", WarmStartPolicyName(s.ocp.warm_start)},
              {"input_box", BoxToJson(s.ocp.input_box)},
              {"state_box", BoxToJson(s.ocp.state_box)},
              {"solver",
               {{"feasibility_tol", s.ocp.solver.feasibility_tol},
                {"infeasible_tol", s.ocp.solver.infeasible_tol},
                {"stationarity_tol", s.ocp.solver.stationarity_tol},
                {"max_outer", s.ocp.solver.max_outer},
                {"max_inner", s.ocp.solver.max_inner},
                {"initial_penalty", s.ocp.solver.initial_penalty},
                {"penalty_growth", s.ocp.solver.penalty_growth},
                {"max_penalty", s.ocp.solver.max_penalty}}}};
  j["mhe"] = {{"horizon", s.mhe_horizon}, {"prior", s.mhe_prior}};
  j["equilibria"] = MatrixJson(s.equilibria);
  std::ofstream out(path);
  if (!out) throw FileError(fmt::format("cannot write controller file '{}'", path));
  out << j.dump(1) << '\n';
}

SynthesisOutcome LoadController(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw FileError(fmt::format(
        "controller file '{}' not found (run synthesize first)", path));
  }
  SynthesisOutcome s;
  try {
    const json j = json::parse(in);
    s.design_output = j.at("design_output").get<double>();
    s.mu_check = j.at("mu_check").get<double>();
    s.mu_hat = j.at("mu_hat").get<double>();
    s.mu = MatrixFromJson(j.at("mu"));
    s.dc_gain = j.at("dc_gain").get<double>();
    s.spectral_radius = j.at("spectral_radius").get<double>();
    s.w_max_scaled = j.at("w_max_scaled").get<double>();
    s.w_max_physical = j.at("w_max_physical").get<double>();
    s.w_estimated = j.at("w_estimated").get<bool>();
    s.omega = BoxFromJson(j.at("omega"));
    const json& o = j.at("ocp");
    s.ocp.horizon = o.at("horizon").get<int>();
    s.ocp.r_e = o.at("r_e").get<double>();
    s.ocp.r_u = o.at("r_u").get<double>();
    s.ocp.q_xi = o.at("q_xi").get<double>();
    s.ocp.q_theta = o.at("q_theta").get<double>();
    s.ocp.terminal_tolerance = o.at("terminal_tolerance").get<double>();
    s.ocp.warm_start = ParseWarmStartPolicy(o.at("warm_start").get<std::string>());
    s.ocp.input_box = BoxFromJson(o.at("input_box"));
    s.ocp.state_box = BoxFromJson(o.at("state_box"));
    const json& n = o.at("solver");
    s.ocp.solver.feasibility_tol = n.at("feasibility_tol").get<double>();
    s.ocp.solver.infeasible_tol = n.at("infeasible_tol").get<double>();
    s.ocp.solver.stationarity_tol = n.at("stationarity_tol").get<double>();
    s.ocp.solver.max_outer = n.at("max_outer").get<int>();
    s.ocp.solver.max_inner = n.at("max_inner").get<int>();
    s.ocp.solver.initial_penalty = n.at("initial_penalty").get<double>();
    s.ocp.solver.penalty_growth = n.at("penalty_growth").get<double>();
    s.ocp.solver.max_penalty = n.at("max_penalty").get<double>();
    s.mhe_horizon = j.at("mhe").at("horizon").get<int>();
    s.mhe_prior = j.at("mhe").at("prior").get<double>();
    s.equilibria = MatrixFromJson(j.at("equilibria"));
  } catch (const json::exception& e) {
    throw InvalidArgument(fmt::format("malformed controller file '{}': {}", path, e.what()));
  }
  return s;
}

std::string DescribeSynthesis(const SynthesisOutcome& s,
                              const NnarxModel& model) {
  std::string r;
  r += fmt::format("design output: {:.3f} K\n", s.design_output);
  r += fmt::format("spectral radius of A_delta: {:.6f}\n", s.spectral_radius);
  r += fmt::format("DC gain (scaled): {:.6f}\n", s.dc_gain);
  r += fmt::format("mu_check: {:.3f}\n", s.mu_check);
  r += fmt::format("mu_hat: {:.4f}\n", s.mu_hat);
  r += fmt::format("mu (scaled): {:.6f}\n", s.mu(0, 0));
  r += fmt::format("mu (kg/s per K): {:.6e}\n",
                   s.mu(0, 0) * model.input_scaler.scale[0] / model.output_scaler.scale[0]);
  r += fmt::format("w_max: {:.6f} scaled, {:.6f} K ({})\n", s.w_max_scaled,
                   s.w_max_physical, s.w_estimated ? "estimated" : "configured");
  r += fmt::format("omega_y: +-{:.6f} scaled\n",
                   s.omega.hi()[StateLayout(model.params).output_offset(model.params.lookback - 1)]);
  r += "setpoint K, u_eq kg/s, residual, rho(A_delta), rho(loop)\n";
  for (Eigen::Index i = 0; i < s.equilibria.rows(); ++i) {
    r += fmt::format("{:.3f}, {:.6f}, {:.2e}, {:.6f}, {:.6f}\n", s.equilibria(i, 0),
                     s.equilibria(i, 1), s.equilibria(i, 2), s.equilibria(i, 3),
                     s.equilibria(i, 4));
  }
  return r;
}

MetricOptions MetricOptionsFor(const ExperimentConfig& cfg,
                               const SynthesisOutcome* synthesis,
                               ControllerMode mode) {
  MetricOptions o;
  o.sample_time = cfg.sample_time;
  o.settling_band = cfg.scenario.settling_band;
  o.steady_state_samples = cfg.scenario.steady_state_samples;
  o.input_lower = cfg.data.input_lower;
  o.input_upper = cfg.data.input_upper;
  o.transition_time = cfg.scenario.transition_time;
  o.horizon = cfg.controller.horizon;
  if (synthesis && mode == ControllerMode::kTube) {
    o.w_max = synthesis->w_max_physical;
    o.horizon = synthesis->ocp.horizon;
  }
  return o;
}

RunOutcome RunScenario(const ExperimentConfig& cfg, const NnarxModel& model,
                       const SynthesisOutcome& synthesis, ControllerMode mode,
                       bool verbose) {
  const int steps = static_cast<int>(std::lround(cfg.scenario.duration / cfg.sample_time));
  const double y0 = cfg.scenario.ReferenceAt(0.0);
  const PlantDisturbance d0 = cfg.scenario.DisturbanceAt(0.0, cfg.plant);
  const double u0 = PlantInputForOutput(y0, d0, cfg.plant);
  PlantState plant = PlantSteadyState(u0, d0, cfg.plant);

  IoWindow window;
  for (int j = 0; j < model.params.lookback; ++j) {
    window.outputs.push_back(Scalar(plant.water_temp));
    window.inputs.push_back(Scalar(u0));
  }
  const EquilibriumOptions eq_opt = EquilibriumFor(cfg, model);
  std::unique_ptr<Controller> ctrl;
  if (mode == ControllerMode::kDeb) {
    DebSettings ds;
    ds.ocp = synthesis.ocp;
    ds.mhe_horizon = synthesis.mhe_horizon;
    ds.mhe_prior = synthesis.mhe_prior;
    ds.equilibrium = eq_opt;
    ctrl = std::make_unique<DebController>(model, ds, window);
  } else {
    OffsetFreeSettings os;
    os.mode = mode;
    os.ocp = synthesis.ocp;
    os.mu = synthesis.mu;
    os.omega = synthesis.omega;
    os.equilibrium = eq_opt;
    ctrl = std::make_unique<OffsetFreeController>(model, os, window);
  }

  RunOutcome out;
  for (int k = 0; k < steps; ++k) {
    const double t = k * cfg.sample_time;
    const PlantDisturbance d = cfg.scenario.DisturbanceAt(t, cfg.plant);
    const double ref = cfg.scenario.ReferenceAt(t);
    ControlRecord rec = ctrl->Step(Scalar(plant.water_temp), Scalar(ref));
    plant = StepRk4(plant, rec.u, d, cfg.plant, cfg.sample_time, cfg.substeps);
    if (verbose && k % 25 == 0) {
      std::cerr << fmt::format(
          "[{}] k={:3d} t={:6.0f} ref={:.2f} y={:.4f} u={:.5f} status={} "
          "solve={:.1f} ms\n",
          ControllerModeName(mode), k, t, ref, rec.y_plant, rec.u,
          rec.solver_status, rec.solve_time_ms);
    }
    out.log.push_back(std::move(rec));
  }
  out.metrics = ComputeMetrics(ControllerModeName(mode), out.log,
                               MetricOptionsFor(cfg, &synthesis, mode));
  return out;
}

CsvTable CompareLogs(const std::vector<std::string>& paths,
                     const ExperimentConfig& cfg) {
  if (paths.empty()) throw InvalidArgument("compare needs at least one log");
  std::vector<RunMetrics> metrics;
  CsvTable t;
  t.header.push_back("metric");
  for (const std::string& p : paths) {
    double dt = 0.0;
    const std::vector<ControlRecord> log = ReadRunLog(p, &dt);
    MetricOptions o = MetricOptionsFor(cfg, nullptr, ControllerMode::kNominal);
    if (dt > 0.0) o.sample_time = dt;
    metrics.push_back(ComputeMetrics(fs::path(p).stem().string(), log, o));
    t.header.push_back(fs::path(p).stem().string());
  }
  auto row = [&](const std::string& name, auto getter) {
    std::vector<std::string> r = {name};
    for (const RunMetrics& m : metrics) r.push_back(FormatNumber(getter(m)));
    t.rows.push_back(std::move(r));
  };
  row("max_steady_state_error_K", [](const RunMetrics& m) { return m.max_steady_state_error; });
  row("mean_settling_time_s", [](const RunMetrics& m) {
    double sum = 0.0;
    int n = 0;
    for (const Plateau& p : m.plateaus) {
      if (!std::isnan(p.settling_time)) {
        sum += p.settling_time;
        ++n;
      }
    }
    return n ? sum / n : std::nan("");
  });
  row("max_abs_input", [](const RunMetrics& m) {
    return std::max(std::abs(m.max_input), std::abs(m.min_input));
  });
  row("input_violations", [](const RunMetrics& m) { return double(m.input_violations); });
  row("infeasible_steps", [](const RunMetrics& m) { return double(m.infeasible_steps); });
  row("mean_solve_time_ms", [](const RunMetrics& m) { return m.mean_solve_ms; });
  return t;
}

}  // namespace nnmpc::harness
