#pragma once

#include <numbers>
#include <vector>

namespace nnmpc {

// Water-heating benchmark parameters; defaults describe the reference heater.
struct PlantParams {
  double tank_area = std::numbers::pi / 4.0;  // A_t [m^2]
  double water_density = 997.8;               // rho_w [kg/m^3]
  double water_heat = 4180.0;                 // c_w [J/(kg K)]
  double metal_mass = 617.32;                 // M_m [kg]
  double metal_heat = 481.0;                  // c_m [J/(kg K)]
  double radiation = 5.67e-8;                 // sigma [W/(m^2 K^4)]
  double exchange_lm = 3326.4;                // k_lm [kg/(s^3 K)]
  double flame_temp = 1200.0;                 // T_f [K]
  double exchange_f = 8.0;                    // k_f [m^2 s/kg]
  double water_level = 2.0;                   // z_w [m]
  double nominal_flow = 1.0;                  // w [kg/s]
  double nominal_inlet_temp = 298.0;          // T_i [K]

  // Throws InvalidArgument unless every parameter is strictly positive.
  void Validate() const;
};

struct PlantState {
  double water_temp = 0.0;  // T [K]
  double metal_temp = 0.0;  // T_m [K]
};

struct PlantDisturbance {
  double inlet_temp = 298.0;  // T_i [K]
  double flow = 1.0;          // w [kg/s]

  static PlantDisturbance Nominal(const PlantParams& params) {
    return {params.nominal_inlet_temp, params.nominal_flow};
  }
};

struct PlantDeriv {
  double water_temp = 0.0;
  double metal_temp = 0.0;
};

PlantDeriv EvaluatePlantDeriv(const PlantState& state, double gas_flow,
                              const PlantDisturbance& d,
                              const PlantParams& params);

// Classical RK4 over dt with the input and disturbance held constant.
PlantState StepRk4(const PlantState& state, double gas_flow,
                   const PlantDisturbance& d, const PlantParams& params,
                   double dt, int substeps);

struct SampledTrajectory {
  std::vector<double> output;       // y_k = T(t_k), measured before u_k acts
  std::vector<PlantState> states;   // state at t_k
  PlantState final_state;           // state at t_K
};

SampledTrajectory SampleTrajectory(const PlantState& x0,
                                   const std::vector<double>& gas_flow,
                                   const std::vector<PlantDisturbance>& d,
                                   const PlantParams& params,
                                   double sample_time, int substeps);

// Steady state for a constant input and disturbance.
PlantState PlantSteadyState(double gas_flow, const PlantDisturbance& d,
                            const PlantParams& params);

// Gas flow giving steady water temperature T (bisection on the monotone map).
double PlantInputForOutput(double water_temp, const PlantDisturbance& d,
                           const PlantParams& params);

}  // namespace nnmpc
