#ifndef DCRL_BASELINE_HPP_
#define DCRL_BASELINE_HPP_

#include "sim_core.hpp"
#include "spaces.hpp"

namespace dcrl {

// Dual-setpoint thermostat with deadband driving a proportional
// setpoint/fan law, standing in for the built-in setpoint manager.
struct ThermostatConfig {
  double cooling_setpoint = 23.0;
  double heating_setpoint = 20.0;
  double flow_gain = 2.0;  // (kg/s)/C
  double min_flow = kFlowMin;
  double max_flow = kFlowMax;

  void validate() const;
};

HvacCommand baseline_act(const Observation& obs, const ThermostatConfig& cfg = {});

}  // namespace dcrl

#endif  // DCRL_BASELINE_HPP_
