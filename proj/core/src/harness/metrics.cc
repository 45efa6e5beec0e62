#include "nnmpc/harness/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "nnmpc/errors.h"
#include "nnmpc/harness/csv.h"

namespace nnmpc::harness {

namespace {

constexpr double kInputTolerance = 1e-9;

}  // namespace

RunMetrics ComputeMetrics(const std::string& mode,
                          const std::vector<ControlRecord>& log,
                          const MetricOptions& opt) {
  if (log.empty()) throw InvalidArgument("cannot compute metrics of an empty log");
  RunMetrics r;
  r.mode = mode;
  r.steps = static_cast<int>(log.size());
  r.max_input = -std::numeric_limits<double>::infinity();
  r.min_input = std::numeric_limits<double>::infinity();
  double solve_sum = 0.0;
  for (const ControlRecord& rec : log) {
    r.max_input = std::max(r.max_input, rec.u);
    r.min_input = std::min(r.min_input, rec.u);
    if (rec.u < opt.input_lower - kInputTolerance ||
        rec.u > opt.input_upper + kInputTolerance || !std::isfinite(rec.u)) {
      ++r.input_violations;
    }
    if (!rec.feasible) ++r.infeasible_steps;
    if (rec.fallback) ++r.fallback_steps;
    solve_sum += rec.solve_time_ms;
    r.max_solve_ms = std::max(r.max_solve_ms, rec.solve_time_ms);
  }
  r.mean_solve_ms = solve_sum / log.size();

  std::size_t start = 0;
  while (start < log.size()) {
    std::size_t stop = start;
    while (stop < log.size() && log[stop].y_ref == log[start].y_ref) ++stop;
    Plateau p;
    p.reference = log[start].y_ref;
    p.t_start = log[start].k * opt.sample_time;
    p.t_end = stop * opt.sample_time;
    p.samples = static_cast<int>(stop - start);
    const std::size_t tail =
        std::min<std::size_t>(opt.steady_state_samples, stop - start);
    for (std::size_t i = stop - tail; i < stop; ++i) {
      p.steady_state_error =
          std::max(p.steady_state_error, std::abs(log[i].y_plant - p.reference));
    }
    // Settled from the first sample after which the band is never left.
    std::size_t settle = stop;
    for (std::size_t i = stop; i-- > start;) {
      if (std::abs(log[i].y_plant - p.reference) > opt.settling_band) break;
      settle = i;
    }
    p.settling_time = settle < stop
                          ? (settle - start) * opt.sample_time
                          : std::numeric_limits<double>::quiet_NaN();
    r.max_steady_state_error = std::max(r.max_steady_state_error, p.steady_state_error);
    r.plateaus.push_back(p);
    start = stop;
  }

  if (opt.w_max >= 0.0) {
    TubeContainment tc;
    tc.w_max = opt.w_max;
    const double t_end = opt.transition_time + opt.horizon * opt.sample_time;
    const double slack = 1e-9;
    std::size_t k0 = log.size();
    for (std::size_t i = 0; i < log.size(); ++i) {
      const double t = log[i].k * opt.sample_time;
      if (t + 1e-9 < opt.transition_time || t > t_end + 1e-9) continue;
      if (k0 == log.size()) k0 = i;
      const double dev = std::abs(log[i].y_plant - log[i].y_nominal);
      ++tc.steps;
      if (dev <= opt.w_max + slack) ++tc.contained_steps;
      tc.max_deviation = std::max(tc.max_deviation, dev);
    }
    if (k0 < log.size()) {
      const std::vector<double>& plan = log[k0].plan_y;
      for (std::size_t i = 0; i < plan.size() && k0 + i < log.size(); ++i) {
        const double dev = std::abs(log[k0 + i].y_plant - plan[i]);
        ++tc.plan_samples;
        if (dev <= opt.w_max + slack) ++tc.plan_contained;
        tc.plan_max_deviation = std::max(tc.plan_max_deviation, dev);
      }
    }
    r.tube = tc;
  }
  return r;
}

std::string FormatMetricSummary(const RunMetrics& m) {
  std::string s;
  s += fmt::format("mode: {}\n", m.mode);
  s += fmt::format("steps: {}\n", m.steps);
  for (std::size_t i = 0; i < m.plateaus.size(); ++i) {
    const Plateau& p = m.plateaus[i];
    s += fmt::format(
        "plateau {}: t=[{:.0f}, {:.0f}) ref={:.3f} K ss_error={:.6f} K "
        "settling={}\n",
        i, p.t_start, p.t_end, p.reference, p.steady_state_error,
        std::isnan(p.settling_time) ? std::string("never")
                                    : fmt::format("{:.0f} s", p.settling_time));
  }
  s += fmt::format("max_steady_state_error: {:.6f} K\n", m.max_steady_state_error);
  s += fmt::format("input_range: [{:.6f}, {:.6f}] kg/s\n", m.min_input, m.max_input);
  s += fmt::format("input_violations: {}\n", m.input_violations);
  s += fmt::format("infeasible_steps: {}\n", m.infeasible_steps);
  s += fmt::format("fallback_steps: {}\n", m.fallback_steps);
  if (m.tube) {
    const TubeContainment& t = *m.tube;
    s += fmt::format("tube_w_max: {:.6f} K\n", t.w_max);
    s += fmt::format("tube_containment: {}/{} steps (max deviation {:.6f} K)\n",
                     t.contained_steps, t.steps, t.max_deviation);
    s += fmt::format(
        "tube_plan_containment: {}/{} samples (max deviation {:.6f} K)\n",
        t.plan_contained, t.plan_samples, t.plan_max_deviation);
  }
  return s;
}

std::string FormatTiming(const RunMetrics& m) {
  return fmt::format("solve_time_ms: mean {:.2f}, max {:.2f}\n",
                     m.mean_solve_ms, m.max_solve_ms);
}

LogCheck CheckRunLog(const std::vector<ControlRecord>& log, double input_lower,
                     double input_upper) {
  LogCheck c;
  for (const ControlRecord& r : log) {
    if (!r.fallback && std::isfinite(r.v_plan0) && r.v != r.v_plan0) {
      ++c.receding_horizon_errors;
      c.messages.push_back(
          fmt::format("k={}: applied v {} differs from plan {}", r.k, r.v, r.v_plan0));
    }
    if (std::isfinite(r.xi) && std::isfinite(r.v) && std::isfinite(r.theta)) {
      const double recon = r.xi + r.v - r.theta;
      if (std::abs(recon - r.u) > 1e-9 * std::max(1.0, std::abs(r.u))) {
        ++c.input_identity_errors;
        c.messages.push_back(fmt::format(
            "k={}: u={} but xi + v - theta = {}", r.k, r.u, recon));
      }
    }
    if (!(r.u >= input_lower - kInputTolerance &&
          r.u <= input_upper + kInputTolerance)) {
      ++c.input_bound_errors;
      c.messages.push_back(fmt::format("k={}: input {} outside [{}, {}]", r.k,
                                       r.u, input_lower, input_upper));
    }
  }
  c.ok = c.receding_horizon_errors == 0 && c.input_identity_errors == 0 &&
         c.input_bound_errors == 0;
  return c;
}

namespace {

const std::vector<std::string> kLogColumns = {
    "k",         "t",        "y_ref",          "y_plant",
    "y_nominal", "u",        "v",              "xi",
    "theta",     "objective", "solver_status", "solve_time_ms",
    "feasible_flag", "v_plan0", "terminal_residual", "iterations"};

}  // namespace

void WriteRunLog(const std::string& path, const std::vector<ControlRecord>& log,
                 double sample_time, bool with_disturbance) {
  CsvTable t;
  t.header = kLogColumns;
  if (with_disturbance) t.header.push_back("d_hat");
  for (const ControlRecord& r : log) {
    std::vector<std::string> row = {
        std::to_string(r.k),          FormatNumber(r.k * sample_time),
        FormatNumber(r.y_ref),        FormatNumber(r.y_plant),
        FormatNumber(r.y_nominal),    FormatNumber(r.u),
        FormatNumber(r.v),            FormatNumber(r.xi),
        FormatNumber(r.theta),        FormatNumber(r.objective),
        r.solver_status,              FormatNumber(r.solve_time_ms),
        r.feasible ? (r.fallback ? "0" : "1") : "0",
        FormatNumber(r.v_plan0),      FormatNumber(r.terminal_residual),
        std::to_string(r.iterations)};
    if (with_disturbance) row.push_back(FormatNumber(r.d_hat));
    t.rows.push_back(std::move(row));
  }
  WriteCsv(path, t);
}

std::vector<ControlRecord> ReadRunLog(const std::string& path,
                                      double* sample_time) {
  const CsvTable t = ReadCsv(path);
  for (const std::string& col : kLogColumns) {
    if (!t.HasColumn(col)) {
      throw InvalidArgument(
          fmt::format("'{}' is not a run log: missing column '{}'", path, col));
    }
  }
  const bool has_d = t.HasColumn("d_hat");
  std::vector<ControlRecord> log;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    ControlRecord r;
    r.k = static_cast<int>(t.Number(i, t.Column("k")));
    r.y_ref = t.Number(i, t.Column("y_ref"));
    r.y_plant = t.Number(i, t.Column("y_plant"));
    r.y_nominal = t.Number(i, t.Column("y_nominal"));
    r.u = t.Number(i, t.Column("u"));
    r.v = t.Number(i, t.Column("v"));
    r.xi = t.Number(i, t.Column("xi"));
    r.theta = t.Number(i, t.Column("theta"));
    r.objective = t.Number(i, t.Column("objective"));
    r.solver_status = t.rows[i][t.Column("solver_status")];
    r.solve_time_ms = t.Number(i, t.Column("solve_time_ms"));
    r.feasible = r.solver_status != "infeasible" && r.solver_status != "error";
    r.fallback = t.Number(i, t.Column("feasible_flag")) == 0.0;
    r.v_plan0 = t.Number(i, t.Column("v_plan0"));
    r.terminal_residual = t.Number(i, t.Column("terminal_residual"));
    r.iterations = static_cast<int>(t.Number(i, t.Column("iterations")));
    if (has_d) r.d_hat = t.Number(i, t.Column("d_hat"));
    log.push_back(std::move(r));
  }
  if (sample_time) {
    *sample_time = 0.0;
    if (t.rows.size() >= 2) {
      *sample_time = t.Number(1, t.Column("t")) - t.Number(0, t.Column("t"));
    }
  }
  return log;
}

}  // namespace nnmpc::harness
