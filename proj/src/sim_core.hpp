#ifndef DCRL_SIM_CORE_HPP_
#define DCRL_SIM_CORE_HPP_

#include <array>
#include <cstdint>
#include <string>

#include "spaces.hpp"
#include "weather.hpp"

namespace dcrl {

inline constexpr double kAirHeatCapacity = 1005.0;  // J/(kg C)
inline constexpr double kInitialZoneTemp = 23.5;

inline constexpr double kSetpointMin = 10.0;
inline constexpr double kSetpointMax = 40.0;
inline constexpr double kFlowMin = 1.75;
inline constexpr double kFlowMax = 7.0;

struct ZoneConfig {
  std::string name;
  double floor_area = 0.0;            // m^2
  double thermal_capacitance = 0.0;   // J/C
  double envelope_conductance = 0.0;  // W/C
  double it_load = 0.0;               // W
};

// Physical HVAC command for both zones.
struct HvacCommand {
  double setpoint_west = kInitialZoneTemp;
  double setpoint_east = kInitialZoneTemp;
  double flow_west = kFlowMin;
  double flow_east = kFlowMin;

  HvacCommand clamped() const;
  double setpoint(int zone) const { return zone == 0 ? setpoint_west : setpoint_east; }
  double flow(int zone) const { return zone == 0 ? flow_west : flow_east; }
  bool operator==(const HvacCommand&) const = default;
};

struct SimConfig {
  std::array<ZoneConfig, 2> zones;
  double system_timestep = 900.0;     // s
  double fan_power_coeff = 50.0;      // W / (kg/s)^3
  double cop_nominal = 3.0;
  double economizer_threshold = 2.0;  // C
  double supply_temp_floor = 10.0;    // C
  std::uint64_t rng_seed = 0;

  // Two-zone data-center defaults (West 232.26 m^2, East 259.08 m^2).
  static SimConfig defaults();
  // Throws kConfig naming the first offending field, including the explicit
  // Euler stability bound system_timestep < C / (U + flow_max * c_p).
  void validate() const;
};

struct SimState {
  double clock = 0.0;                 // s since episode start
  std::array<double, 2> t_zone{};     // C
  std::array<double, 2> t_supply{};   // C
  double p_it = 0.0;                  // W
  double p_hvac = 0.0;                // W
  double p_total = 0.0;               // W
  double t_outdoor = 0.0;             // C

  bool operator==(const SimState&) const = default;
};

// Electrical draw of the HVAC plant while delivering `cmd` to zones at
// `t_zone` with outdoor air at `t_outdoor`.
double hvac_power(const SimConfig& config, const HvacCommand& cmd,
                  const std::array<double, 2>& t_zone, double t_outdoor);

// Zones start at 23.5 C; powers reflect the idle command (setpoints at the
// zone temperature, minimum flow).
SimState sim_reset(const SimConfig& config, const WeatherTrace& weather);

// One explicit Euler step of the per-zone energy balance. Power is evaluated
// over the interval from the pre-step temperatures. Throws kNumericalFault on
// non-finite input or output.
SimState sim_step(const SimState& state, const HvacCommand& cmd, const WeatherTrace& weather,
                  const SimConfig& config);

Observation sim_observe(const SimState& state);

}  // namespace dcrl

#endif  // DCRL_SIM_CORE_HPP_
