#include "nnmpc/plant.h"

#include <cmath>

#include <fmt/format.h>

#include "nnmpc/errors.h"

namespace nnmpc {

void PlantParams::Validate() const {
  const double values[] = {tank_area,   water_density, water_heat, metal_mass,
                           metal_heat,  radiation,     exchange_lm, flame_temp,
                           exchange_f,  water_level,   nominal_flow,
                           nominal_inlet_temp};
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("plant parameters must be finite and positive");
    }
  }
}

PlantDeriv EvaluatePlantDeriv(const PlantState& s, double gas_flow,
                              const PlantDisturbance& d,
                              const PlantParams& p) {
  if (!(s.water_temp > 0.0) || !(s.metal_temp > 0.0)) {
    throw InvalidArgument(fmt::format(
        "temperatures must be positive (T={}, Tm={})", s.water_temp,
        s.metal_temp));
  }
  const double gap = s.metal_temp - s.water_temp;
  const double water_mass = p.water_density * p.tank_area * p.water_level;
  PlantDeriv out;
  out.water_temp = (d.flow * (d.inlet_temp - s.water_temp) +
                    p.exchange_lm * p.tank_area / p.water_heat * gap) /
                   water_mass;
  const double tf4 = std::pow(p.flame_temp, 4);
  const double tm4 = std::pow(s.metal_temp, 4);
  out.metal_temp = (-p.exchange_lm * p.tank_area * gap +
                    p.radiation * p.exchange_f * gas_flow * (tf4 - tm4)) /
                   (p.metal_mass * p.metal_heat);
  return out;
}

PlantState StepRk4(const PlantState& state, double gas_flow,
                   const PlantDisturbance& d, const PlantParams& params,
                   double dt, int substeps) {
  if (!(dt > 0.0) || substeps < 1) {
    throw InvalidArgument("RK4 needs dt > 0 and at least one substep");
  }
  const double h = dt / substeps;
  PlantState s = state;
  auto shifted = [](const PlantState& a, const PlantDeriv& k, double c) {
    return PlantState{a.water_temp + c * k.water_temp,
                      a.metal_temp + c * k.metal_temp};
  };
  try {
    for (int i = 0; i < substeps; ++i) {
      const PlantDeriv k1 = EvaluatePlantDeriv(s, gas_flow, d, params);
      const PlantDeriv k2 =
          EvaluatePlantDeriv(shifted(s, k1, h / 2), gas_flow, d, params);
      const PlantDeriv k3 =
          EvaluatePlantDeriv(shifted(s, k2, h / 2), gas_flow, d, params);
      const PlantDeriv k4 =
          EvaluatePlantDeriv(shifted(s, k3, h), gas_flow, d, params);
      s.water_temp += h / 6 *
                      (k1.water_temp + 2 * k2.water_temp + 2 * k3.water_temp +
                       k4.water_temp);
      s.metal_temp += h / 6 *
                      (k1.metal_temp + 2 * k2.metal_temp + 2 * k3.metal_temp +
                       k4.metal_temp);
      if (!(s.water_temp > 0.0) || !(s.metal_temp > 0.0) ||
          !std::isfinite(s.water_temp) || !std::isfinite(s.metal_temp)) {
        throw IntegrationFailure(fmt::format(
            "plant state left the positive orthant (T={}, Tm={})",
            s.water_temp, s.metal_temp));
      }
    }
  } catch (const InvalidArgument& e) {
    throw IntegrationFailure(e.what());
  }
  return s;
}

SampledTrajectory SampleTrajectory(const PlantState& x0,
                                   const std::vector<double>& gas_flow,
                                   const std::vector<PlantDisturbance>& d,
                                   const PlantParams& params,
                                   double sample_time, int substeps) {
  if (gas_flow.size() != d.size()) {
    throw InvalidArgument("input and disturbance sequences differ in length");
  }
  SampledTrajectory traj;
  traj.output.reserve(gas_flow.size());
  traj.states.reserve(gas_flow.size());
  PlantState s = x0;
  for (std::size_t k = 0; k < gas_flow.size(); ++k) {
    traj.states.push_back(s);
    traj.output.push_back(s.water_temp);
    s = StepRk4(s, gas_flow[k], d[k], params, sample_time, substeps);
  }
  traj.final_state = s;
  return traj;
}

PlantState PlantSteadyState(double gas_flow, const PlantDisturbance& d,
                            const PlantParams& p) {
  if (!(gas_flow >= 0.0) || !(d.flow > 0.0)) {
    throw InvalidArgument("steady state needs w_c >= 0 and w > 0");
  }
  // From dT = 0: T = (w Ti + a Tm) / (w + a), a = k_lm A_t / c_w. The metal
  // balance is then monotone decreasing in Tm on [Ti, Tf].
  const double a = p.exchange_lm * p.tank_area / p.water_heat;
  auto water_of = [&](double tm) {
    return (d.flow * d.inlet_temp + a * tm) / (d.flow + a);
  };
  auto metal_balance = [&](double tm) {
    const double t = water_of(tm);
    return -p.exchange_lm * p.tank_area * (tm - t) +
           p.radiation * p.exchange_f * gas_flow *
               (std::pow(p.flame_temp, 4) - std::pow(tm, 4));
  };
  double lo = d.inlet_temp;
  double hi = p.flame_temp;
  if (metal_balance(lo) <= 0.0) return {d.inlet_temp, d.inlet_temp};
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (metal_balance(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double tm = 0.5 * (lo + hi);
  return {water_of(tm), tm};
}

double PlantInputForOutput(double water_temp, const PlantDisturbance& d,
                           const PlantParams& params) {
  if (!(water_temp > d.inlet_temp)) {
    throw InvalidArgument("target temperature must exceed the inlet temperature");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (PlantSteadyState(hi, d, params).water_temp < water_temp) {
    hi *= 2.0;
    if (hi > 1e6) throw InvalidArgument("target temperature is unreachable");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (PlantSteadyState(mid, d, params).water_temp < water_temp) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace nnmpc
