#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nnmpc/controller.h"

namespace nnmpc::harness {

struct Plateau {
  double t_start = 0.0;
  double t_end = 0.0;
  double reference = 0.0;
  int samples = 0;
  double steady_state_error = 0.0;  // max |e| over the last samples
  double settling_time = 0.0;       // NaN when the band is never held
};

struct TubeContainment {
  double w_max = 0.0;  // plant units
  int steps = 0;
  int contained_steps = 0;
  double max_deviation = 0.0;
  // Closed-loop outputs against the plan computed at the transition.
  int plan_samples = 0;
  int plan_contained = 0;
  double plan_max_deviation = 0.0;

  double rate() const { return steps ? double(contained_steps) / steps : 0.0; }
  double plan_rate() const {
    return plan_samples ? double(plan_contained) / plan_samples : 0.0;
  }
};

struct RunMetrics {
  std::string mode;
  int steps = 0;
  std::vector<Plateau> plateaus;
  double max_steady_state_error = 0.0;
  double max_input = 0.0;
  double min_input = 0.0;
  int input_violations = 0;
  int infeasible_steps = 0;
  int fallback_steps = 0;
  double mean_solve_ms = 0.0;
  double max_solve_ms = 0.0;
  std::optional<TubeContainment> tube;
};

struct MetricOptions {
  double sample_time = 120.0;
  double settling_band = 0.1;
  int steady_state_samples = 10;
  double input_lower = 0.05;
  double input_upper = 0.18;
  // Tube check, skipped when w_max < 0.
  double w_max = -1.0;
  double transition_time = 18000.0;
  int horizon = 50;
};

RunMetrics ComputeMetrics(const std::string& mode,
                          const std::vector<ControlRecord>& log,
                          const MetricOptions& options);

// Deterministic part of the report: timing is left out.
std::string FormatMetricSummary(const RunMetrics& metrics);
std::string FormatTiming(const RunMetrics& metrics);

struct LogCheck {
  bool ok = true;
  int receding_horizon_errors = 0;
  int input_identity_errors = 0;
  int input_bound_errors = 0;
  std::vector<std::string> messages;
};

LogCheck CheckRunLog(const std::vector<ControlRecord>& log,
                     double input_lower, double input_upper);

void WriteRunLog(const std::string& path, const std::vector<ControlRecord>& log,
                 double sample_time, bool with_disturbance);
std::vector<ControlRecord> ReadRunLog(const std::string& path,
                                      double* sample_time = nullptr);

}  // namespace nnmpc::harness
