#ifndef DCRL_WEATHER_HPP_
#define DCRL_WEATHER_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dcrl {

// Outdoor dry-bulb temperature sampled every kWeatherSpacing seconds.
// Sample i sits at start_time + i * kWeatherSpacing; the simulator maps
// its episode clock 0 onto the first sample.
class WeatherTrace {
 public:
  static constexpr double kSpacing = 900.0;
  static constexpr double kMinTemp = -40.0;
  static constexpr double kMaxTemp = 60.0;

  WeatherTrace() = default;
  // Throws kRange if a temperature is outside [kMinTemp, kMaxTemp].
  WeatherTrace(std::string location_tag, double start_time,
               std::vector<double> temperatures);

  const std::string& location_tag() const { return location_tag_; }
  double start_time() const { return start_time_; }
  const std::vector<double>& temperatures() const { return temperatures_; }
  std::size_t size() const { return temperatures_.size(); }
  bool empty() const { return temperatures_.empty(); }

  double time_at(std::size_t i) const { return start_time_ + kSpacing * double(i); }
  // Seconds from the first to the last sample.
  double horizon() const;
  double mean() const;

  // Outdoor temperature at `clock` seconds after the first sample, linearly
  // interpolated between samples. Throws kContract beyond the last sample.
  double at(double clock) const;

  // Contiguous window re-timed to start at 0.
  WeatherTrace slice(std::size_t first, std::size_t count) const;

  bool operator==(const WeatherTrace&) const = default;

 private:
  std::string location_tag_ = "custom";
  double start_time_ = 0.0;
  std::vector<double> temperatures_;
};

// Climate parameters of one synthetic location.
struct LocationProfile {
  std::string_view tag;
  double annual_mean;
  double seasonal_amplitude;
  double diurnal_amplitude;
};

const std::vector<LocationProfile>& location_profiles();
// Throws kUnknownTag listing the valid tags.
const LocationProfile& location_profile(std::string_view tag);

// Annual sinusoid + diurnal sinusoid + seeded AR(1) noise (std 1.5 C).
WeatherTrace weather_synthesize(std::string_view tag, std::uint64_t seed, int days);

// CSV with header `time_s,t_outdoor_c`. Errors carry the offending line.
WeatherTrace weather_load_csv(const std::string& path);
WeatherTrace weather_parse_csv(std::string_view text, const std::string& origin = "<memory>");
void weather_save_csv(const WeatherTrace& trace, const std::string& path);
std::string weather_to_csv(const WeatherTrace& trace);

}  // namespace dcrl

#endif  // DCRL_WEATHER_HPP_
