#include "baseline.hpp"

#include <algorithm>

#include "errors.hpp"

namespace dcrl {

namespace {

struct ZoneCommand {
  double setpoint;
  double flow;
};

ZoneCommand zone_law(double t_zone, const ThermostatConfig& cfg) {
  const double error = t_zone - cfg.cooling_setpoint;
  if (error > 0.0) {
    return {std::max(cfg.cooling_setpoint - 2.0 * error, kSetpointMin),
            std::clamp(cfg.min_flow + cfg.flow_gain * error, cfg.min_flow, cfg.max_flow)};
  }
  if (t_zone >= cfg.heating_setpoint) return {cfg.cooling_setpoint, cfg.min_flow};
  // Below the heating setpoint: warm supply air recovers the zone.
  return {kSetpointMax, cfg.min_flow};
}

}  // namespace

void ThermostatConfig::validate() const {
  if (!(heating_setpoint < cooling_setpoint)) {
    throw Error(ErrorCode::kConfig, "invalid thermostat: heating_setpoint must be < cooling_setpoint");
  }
  if (!(min_flow <= max_flow) || flow_gain < 0.0) {
    throw Error(ErrorCode::kConfig, "invalid thermostat: need min_flow <= max_flow, flow_gain >= 0");
  }
}

HvacCommand baseline_act(const Observation& obs, const ThermostatConfig& cfg) {
  const ZoneCommand west = zone_law(obs.west_c, cfg);
  const ZoneCommand east = zone_law(obs.east_c, cfg);
  return HvacCommand{west.setpoint, east.setpoint, west.flow, east.flow}.clamped();
}

}  // namespace dcrl
