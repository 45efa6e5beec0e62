#include "nnmpc/harness/config.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "nnmpc/errors.h"

namespace nnmpc::harness {

double ScenarioSpec::ReferenceAt(double t) const {
  double value = reference.empty() ? 0.0 : reference.front().value;
  for (const ReferencePoint& r : reference) {
    if (r.t <= t) value = r.value;
  }
  return value;
}

PlantDisturbance ScenarioSpec::DisturbanceAt(double t,
                                             const PlantParams& params) const {
  PlantDisturbance d = PlantDisturbance::Nominal(params);
  for (const DisturbancePoint& p : disturbance) {
    if (p.t <= t) d = {p.inlet_temp, p.flow};
  }
  return d;
}

void ExperimentConfig::Validate() const {
  plant.Validate();
  if (!(sample_time > 0.0) || substeps < 1) {
    throw ConfigurationError("sample_time must be > 0 and substeps >= 1");
  }
  if (data.train_length < 1 || data.eval_length < 1) {
    throw ConfigurationError("data lengths must be positive");
  }
  if (data.validation_count < 0 || data.test_count < 1) {
    throw ConfigurationError("need >= 0 validation and >= 1 test trajectories");
  }
  if (!(data.input_lower < data.input_upper)) {
    throw ConfigurationError("input bounds must satisfy lower < upper");
  }
  training.train.Validate();
  if (training.subsequence_length > data.train_length) {
    throw ConfigurationError("subsequence length exceeds the training trajectory");
  }
  if (controller.horizon < 1) throw ConfigurationError("horizon must be >= 1");
  if (scenario.reference.empty()) {
    throw ConfigurationError("scenario needs at least one reference point");
  }
  for (std::size_t i = 1; i < scenario.reference.size(); ++i) {
    if (!(scenario.reference[i].t > scenario.reference[i - 1].t)) {
      throw ConfigurationError("reference times must be strictly increasing");
    }
  }
  for (std::size_t i = 1; i < scenario.disturbance.size(); ++i) {
    if (!(scenario.disturbance[i].t > scenario.disturbance[i - 1].t)) {
      throw ConfigurationError("disturbance times must be strictly increasing");
    }
  }
  if (!(scenario.duration >= sample_time)) {
    throw ConfigurationError("scenario shorter than one sample");
  }
  const double steps = scenario.duration / sample_time;
  if (std::abs(steps - std::round(steps)) > 1e-9) {
    throw ConfigurationError("scenario duration must be a multiple of sample_time");
  }
}

ExperimentConfig DefaultConfig() {
  ExperimentConfig c;
  c.scenario.reference = {{0.0, 318.0},
                          {6000.0, 321.0},
                          {18000.0, 325.0},
                          {30000.0, 322.0},
                          {48000.0, 319.0}};
  c.scenario.disturbance = {{0.0, 298.0, 1.0}, {36000.0, 293.0, 1.0}};
  return c;
}

namespace {

template <typename T>
void Read(const YAML::Node& node, const char* key, T& out) {
  if (node && node[key]) out = node[key].as<T>();
}

}  // namespace

ExperimentConfig ParseConfig(const std::string& yaml_text) {
  ExperimentConfig c = DefaultConfig();
  try {
    const YAML::Node root = YAML::Load(yaml_text);
    Read(root, "seed", c.seed);
    Read(root, "sample_time", c.sample_time);
    Read(root, "substeps", c.substeps);

    if (const YAML::Node p = root["plant"]) {
      Read(p, "tank_area", c.plant.tank_area);
      Read(p, "water_density", c.plant.water_density);
      Read(p, "water_heat", c.plant.water_heat);
      Read(p, "metal_mass", c.plant.metal_mass);
      Read(p, "metal_heat", c.plant.metal_heat);
      Read(p, "radiation", c.plant.radiation);
      Read(p, "exchange_lm", c.plant.exchange_lm);
      Read(p, "flame_temp", c.plant.flame_temp);
      Read(p, "exchange_f", c.plant.exchange_f);
      Read(p, "water_level", c.plant.water_level);
      Read(p, "nominal_flow", c.plant.nominal_flow);
      Read(p, "nominal_inlet_temp", c.plant.nominal_inlet_temp);
    }
    if (const YAML::Node d = root["data"]) {
      Read(d, "levels", c.data.levels);
      Read(d, "min_dwell", c.data.min_dwell);
      Read(d, "max_dwell", c.data.max_dwell);
      Read(d, "input_lower", c.data.input_lower);
      Read(d, "input_upper", c.data.input_upper);
      Read(d, "train_length", c.data.train_length);
      Read(d, "validation_count", c.data.validation_count);
      Read(d, "test_count", c.data.test_count);
      Read(d, "eval_length", c.data.eval_length);
      Read(d, "initial_input", c.data.initial_input);
    }
    if (const YAML::Node t = root["training"]) {
      Read(t, "lookback", c.training.arch.lookback);
      if (t["hidden"]) c.training.arch.hidden = t["hidden"].as<std::vector<int>>();
      if (t["activation"]) {
        c.training.arch.activation =
            ParseActivation(t["activation"].as<std::string>());
      }
      Read(t, "subsequence_length", c.training.subsequence_length);
      Read(t, "subsequence_count", c.training.subsequence_count);
      Read(t, "learning_rate", c.training.train.learning_rate);
      Read(t, "max_epochs", c.training.train.max_epochs);
      Read(t, "reg_weight", c.training.train.reg_weight);
      Read(t, "margin_offset", c.training.train.margin_offset);
      Read(t, "patience", c.training.train.patience);
      Read(t, "washout", c.training.train.washout);
      Read(t, "batch_size", c.training.train.batch_size);
      Read(t, "clip_norm", c.training.train.clip_norm);
    }
    if (const YAML::Node k = root["controller"]) {
      ControllerSpec& s = c.controller;
      Read(k, "horizon", s.horizon);
      Read(k, "r_e", s.r_e);
      Read(k, "r_u", s.r_u);
      Read(k, "q_xi", s.q_xi);
      Read(k, "q_theta", s.q_theta);
      Read(k, "terminal_tolerance", s.terminal_tolerance);
      if (k["warm_start"]) {
        s.warm_start = ParseWarmStartPolicy(k["warm_start"].as<std::string>());
      }
      Read(k, "design_output", s.design_output);
      Read(k, "mu_hat", s.mu_hat);
      Read(k, "mu_hat_factor", s.mu_hat_factor);
      if (k["w_max"]) {
        const std::string w = k["w_max"].as<std::string>();
        s.w_max = w == "estimate" ? -1.0 : k["w_max"].as<double>();
      }
      Read(k, "bound_trajectories", s.bound_trajectories);
      Read(k, "bound_length", s.bound_length);
      Read(k, "output_margin", s.output_margin);
      Read(k, "mhe_horizon", s.mhe_horizon);
      Read(k, "mhe_prior", s.mhe_prior);
      if (const YAML::Node n = k["solver"]) {
        Read(n, "feasibility_tol", s.solver.feasibility_tol);
        Read(n, "max_outer", s.solver.max_outer);
        Read(n, "max_inner", s.solver.max_inner);
        Read(n, "initial_penalty", s.solver.initial_penalty);
        Read(n, "penalty_growth", s.solver.penalty_growth);
        Read(n, "infeasible_tol", s.solver.infeasible_tol);
        Read(n, "stationarity_tol", s.solver.stationarity_tol);
      }
    }
    if (const YAML::Node s = root["scenario"]) {
      Read(s, "duration", c.scenario.duration);
      Read(s, "transition_time", c.scenario.transition_time);
      Read(s, "settling_band", c.scenario.settling_band);
      Read(s, "steady_state_samples", c.scenario.steady_state_samples);
      if (const YAML::Node r = s["reference"]) {
        c.scenario.reference.clear();
        for (const YAML::Node& e : r) {
          c.scenario.reference.push_back({e[0].as<double>(), e[1].as<double>()});
        }
      }
      if (const YAML::Node d = s["disturbance"]) {
        c.scenario.disturbance.clear();
        for (const YAML::Node& e : d) {
          c.scenario.disturbance.push_back(
              {e[0].as<double>(), e[1].as<double>(), e[2].as<double>()});
        }
      }
    }
  } catch (const YAML::Exception& e) {
    throw ConfigurationError(fmt::format("invalid config: {}", e.what()));
  } catch (const InvalidArgument& e) {
    throw ConfigurationError(fmt::format("invalid config: {}", e.what()));
  }
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError(fmt::format("config file '{}' not found", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseConfig(buffer.str());
}

}  // namespace nnmpc::harness
