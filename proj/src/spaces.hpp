#ifndef DCRL_SPACES_HPP_
#define DCRL_SPACES_HPP_

#include <array>

namespace dcrl {

inline constexpr int kObservationSize = 6;
inline constexpr int kActionSize = 4;

// Agent-facing state vector. Index order is fixed and shared with the
// bridge wire format:
//   0 outdoor temp, 1 west zone temp, 2 east zone temp,
//   3 whole-building power, 4 IT power, 5 HVAC power.
struct Observation {
  double outdoor_c = 0.0;
  double west_c = 0.0;
  double east_c = 0.0;
  double p_total_w = 0.0;
  double p_it_w = 0.0;
  double p_hvac_w = 0.0;

  static constexpr double kTempLow = -20.0;
  static constexpr double kTempHigh = 50.0;
  static constexpr double kPowerLow = 0.0;
  static constexpr double kPowerHigh = 1e9;

  std::array<double, kObservationSize> to_array() const {
    return {outdoor_c, west_c, east_c, p_total_w, p_it_w, p_hvac_w};
  }
  static Observation from_array(const std::array<double, kObservationSize>& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }
  // Each element clamped into its declared range.
  Observation clamped() const;
  bool in_range() const;

  bool operator==(const Observation&) const = default;
};

// Agent-facing action, every component nominally in [-1, 1]:
//   0 west setpoint, 1 east setpoint, 2 west flow, 3 east flow.
struct NormalizedAction {
  std::array<double, kActionSize> values{};

  NormalizedAction clamped() const;
  double operator[](int i) const { return values[std::size_t(i)]; }
  bool operator==(const NormalizedAction&) const = default;
};

}  // namespace dcrl

#endif  // DCRL_SPACES_HPP_
