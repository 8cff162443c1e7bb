#include "sim_core.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace dcrl {

namespace {

void require(bool ok, std::string_view field, std::string_view why) {
  if (!ok) throw Error(ErrorCode::kConfig, fmt::format("invalid {}: {}", field, why));
}

bool all_finite(const HvacCommand& c) {
  return std::isfinite(c.setpoint_west) && std::isfinite(c.setpoint_east) &&
         std::isfinite(c.flow_west) && std::isfinite(c.flow_east);
}

bool all_finite(const SimState& s) {
  return std::isfinite(s.clock) && std::isfinite(s.t_zone[0]) && std::isfinite(s.t_zone[1]) &&
         std::isfinite(s.t_supply[0]) && std::isfinite(s.t_supply[1]) &&
         std::isfinite(s.p_it) && std::isfinite(s.p_hvac) && std::isfinite(s.p_total) &&
         std::isfinite(s.t_outdoor);
}

}  // namespace

HvacCommand HvacCommand::clamped() const {
  return {std::clamp(setpoint_west, kSetpointMin, kSetpointMax),
          std::clamp(setpoint_east, kSetpointMin, kSetpointMax),
          std::clamp(flow_west, kFlowMin, kFlowMax), std::clamp(flow_east, kFlowMin, kFlowMax)};
}

SimConfig SimConfig::defaults() {
  SimConfig c;
  c.zones[0] = {"West Zone", 232.26, 2.0e7, 500.0, 40000.0};
  c.zones[1] = {"East Zone", 259.08, 2.0e7, 500.0, 45000.0};
  return c;
}

void SimConfig::validate() const {
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const ZoneConfig& z = zones[i];
    const std::string prefix = fmt::format("zones[{}].", i);
    require(z.floor_area > 0.0, prefix + "floor_area", "must be > 0");
    require(z.thermal_capacitance > 0.0, prefix + "thermal_capacitance", "must be > 0");
    require(z.envelope_conductance >= 0.0, prefix + "envelope_conductance", "must be >= 0");
    require(z.it_load >= 0.0, prefix + "it_load", "must be >= 0");
  }
  require(system_timestep >= 60.0 && system_timestep <= 900.0, "system_timestep",
          fmt::format("{} s outside [60, 900] s", system_timestep));
  require(std::isfinite(cop_nominal) && cop_nominal > 0.0, "cop_nominal", "must be > 0");
  require(std::isfinite(fan_power_coeff) && fan_power_coeff >= 0.0, "fan_power_coeff",
          "must be >= 0");
  require(std::isfinite(economizer_threshold), "economizer_threshold", "must be finite");
  require(std::isfinite(supply_temp_floor), "supply_temp_floor", "must be finite");
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const ZoneConfig& z = zones[i];
    const double limit =
        z.thermal_capacitance / (z.envelope_conductance + kFlowMax * kAirHeatCapacity);
    require(system_timestep < limit, "system_timestep",
            fmt::format("{} s violates explicit Euler stability bound {:.1f} s of zones[{}]",
                        system_timestep, limit, i));
  }
}

double hvac_power(const SimConfig& config, const HvacCommand& cmd,
                  const std::array<double, 2>& t_zone, double t_outdoor) {
  double power = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double flow = cmd.flow(i);
    const double t_supply = std::max(cmd.setpoint(i), config.supply_temp_floor);
    const double q_cool = flow * kAirHeatCapacity * std::max(t_zone[std::size_t(i)] - t_supply, 0.0);
    // Cool outdoor air lets the economizer carry the load at four times the COP.
    const bool free_cooling = !(t_outdoor > t_supply - config.economizer_threshold);
    const double cop = free_cooling ? 4.0 * config.cop_nominal : config.cop_nominal;
    power += config.fan_power_coeff * flow * flow * flow + q_cool / cop;
  }
  return power;
}

SimState sim_reset(const SimConfig& config, const WeatherTrace& weather) {
  config.validate();
  if (weather.empty()) throw Error(ErrorCode::kConfig, "invalid weather: trace is empty");
  SimState s;
  s.clock = 0.0;
  s.t_zone = {kInitialZoneTemp, kInitialZoneTemp};
  const HvacCommand idle{kInitialZoneTemp, kInitialZoneTemp, kFlowMin, kFlowMin};
  s.t_supply = {std::max(idle.setpoint_west, config.supply_temp_floor),
                std::max(idle.setpoint_east, config.supply_temp_floor)};
  s.t_outdoor = weather.at(0.0);
  s.p_it = config.zones[0].it_load + config.zones[1].it_load;
  s.p_hvac = hvac_power(config, idle, s.t_zone, s.t_outdoor);
  s.p_total = s.p_it + s.p_hvac;
  return s;
}

SimState sim_step(const SimState& state, const HvacCommand& raw_cmd, const WeatherTrace& weather,
                  const SimConfig& config) {
  if (!all_finite(state) || !all_finite(raw_cmd)) {
    throw Error(ErrorCode::kNumericalFault,
                fmt::format("non-finite simulator input at t = {} s", state.clock));
  }
  const HvacCommand cmd = raw_cmd.clamped();
  const double dt = config.system_timestep;
  const double t_out = state.t_outdoor;

  SimState next;
  next.clock = state.clock + dt;
  for (int i = 0; i < 2; ++i) {
    const auto zi = std::size_t(i);
    const ZoneConfig& zone = config.zones[zi];
    const double t = state.t_zone[zi];
    const double t_supply = std::max(cmd.setpoint(i), config.supply_temp_floor);
    const double heat_in = zone.it_load + zone.envelope_conductance * (t_out - t) +
                           cmd.flow(i) * kAirHeatCapacity * (t_supply - t);
    next.t_zone[zi] = t + dt * heat_in / zone.thermal_capacitance;
    next.t_supply[zi] = t_supply;
  }
  next.p_it = config.zones[0].it_load + config.zones[1].it_load;
  next.p_hvac = hvac_power(config, cmd, state.t_zone, t_out);
  next.p_total = next.p_it + next.p_hvac;
  next.t_outdoor = weather.at(next.clock);

  if (!all_finite(next)) {
    throw Error(ErrorCode::kNumericalFault,
                fmt::format("simulator diverged at t = {} s", next.clock));
  }
  return next;
}

Observation sim_observe(const SimState& s) {
  return {s.t_outdoor, s.t_zone[0], s.t_zone[1], s.p_total, s.p_it, s.p_hvac};
}

}  // namespace dcrl
