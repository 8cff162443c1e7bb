#include "weather.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "errors.hpp"
#include "util.hpp"

namespace dcrl {

namespace {

constexpr double kNoiseStd = 1.5;
// Lag-one correlation of the noise between 15 minute samples.
constexpr double kNoiseCorrelation = 0.9;
// Day of year shifted so the seasonal peak falls in mid July.
constexpr double kSeasonalPhaseDay = 109.0;

}  // namespace

WeatherTrace::WeatherTrace(std::string location_tag, double start_time,
                           std::vector<double> temperatures)
    : location_tag_(std::move(location_tag)),
      start_time_(start_time),
      temperatures_(std::move(temperatures)) {
  for (std::size_t i = 0; i < temperatures_.size(); ++i) {
    const double t = temperatures_[i];
    if (!std::isfinite(t) || t < kMinTemp || t > kMaxTemp) {
      throw Error(ErrorCode::kRange,
                  fmt::format("weather sample {} = {} C outside [{}, {}] C", i, t,
                              kMinTemp, kMaxTemp));
    }
  }
}

double WeatherTrace::horizon() const {
  return temperatures_.empty() ? 0.0 : kSpacing * double(temperatures_.size() - 1);
}

double WeatherTrace::mean() const {
  if (temperatures_.empty()) return 0.0;
  double sum = 0.0;
  for (double t : temperatures_) sum += t;
  return sum / double(temperatures_.size());
}

double WeatherTrace::at(double clock) const {
  if (temperatures_.empty() || clock < 0.0 || clock > horizon()) {
    throw Error(ErrorCode::kContract,
                fmt::format("weather trace '{}' does not cover t = {} s (horizon {} s)",
                            location_tag_, clock, horizon()));
  }
  const double pos = clock / kSpacing;
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - double(i);
  if (frac == 0.0 || i + 1 >= temperatures_.size()) return temperatures_[i];
  return temperatures_[i] + frac * (temperatures_[i + 1] - temperatures_[i]);
}

WeatherTrace WeatherTrace::slice(std::size_t first, std::size_t count) const {
  if (first + count > temperatures_.size()) {
    throw Error(ErrorCode::kContract,
                fmt::format("slice [{}, {}) exceeds trace of {} samples", first,
                            first + count, temperatures_.size()));
  }
  std::vector<double> window(temperatures_.begin() + std::ptrdiff_t(first),
                             temperatures_.begin() + std::ptrdiff_t(first + count));
  return WeatherTrace(location_tag_, 0.0, std::move(window));
}

const std::vector<LocationProfile>& location_profiles() {
  static const std::vector<LocationProfile> profiles = {
      {"CA", 13.8, 4.0, 4.0},  {"CO", 9.7, 11.0, 8.0}, {"FL", 22.3, 5.0, 5.0},
      {"IL", 9.9, 14.0, 7.0},  {"VA", 12.6, 12.0, 7.0},
  };
  return profiles;
}

const LocationProfile& location_profile(std::string_view tag) {
  for (const auto& p : location_profiles()) {
    if (p.tag == tag) return p;
  }
  throw Error(ErrorCode::kUnknownTag,
              fmt::format("unknown weather tag '{}' (valid tags: CA, CO, FL, IL, VA)", tag));
}

WeatherTrace weather_synthesize(std::string_view tag, std::uint64_t seed, int days) {
  const LocationProfile& profile = location_profile(tag);
  if (days < 1) {
    throw Error(ErrorCode::kConfig, fmt::format("days must be >= 1 (got {})", days));
  }
  const std::size_t samples_per_day = std::size_t(86400.0 / WeatherTrace::kSpacing);
  // One extra sample so the final step of the last day has an endpoint.
  const std::size_t n = samples_per_day * std::size_t(days) + 1;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> innovation(
      0.0, kNoiseStd * std::sqrt(1.0 - kNoiseCorrelation * kNoiseCorrelation));
  std::normal_distribution<double> stationary(0.0, kNoiseStd);

  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> temps(n);
  double noise = stationary(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = WeatherTrace::kSpacing * double(i);
    const double day = t / 86400.0;
    const double hour = std::fmod(t, 86400.0) / 3600.0;
    const double value = profile.annual_mean +
                         profile.seasonal_amplitude *
                             std::sin(two_pi * (day - kSeasonalPhaseDay) / 365.0) +
                         profile.diurnal_amplitude * std::sin(two_pi * (hour - 6.0) / 24.0) +
                         noise;
    temps[i] = std::clamp(value, WeatherTrace::kMinTemp, WeatherTrace::kMaxTemp);
    noise = kNoiseCorrelation * noise + innovation(rng);
  }
  return WeatherTrace(std::string(tag), 0.0, std::move(temps));
}

WeatherTrace weather_parse_csv(std::string_view text, const std::string& origin) {
  std::vector<double> times;
  std::vector<double> temps;
  std::size_t line_no = 0;
  bool header_seen = false;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != "time_s,t_outdoor_c") {
        throw Error(ErrorCode::kParse,
                    fmt::format("{}:{}: expected header 'time_s,t_outdoor_c'", origin, line_no));
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.find(',');
    double time = 0.0;
    double temp = 0.0;
    if (comma == std::string_view::npos || !parse_double(line.substr(0, comma), time) ||
        !parse_double(line.substr(comma + 1), temp)) {
      throw Error(ErrorCode::kParse,
                  fmt::format("{}:{}: cannot parse row '{}'", origin, line_no, line));
    }
    if (!std::isfinite(temp) || temp < WeatherTrace::kMinTemp || temp > WeatherTrace::kMaxTemp) {
      throw Error(ErrorCode::kRange,
                  fmt::format("{}:{}: temperature {} C outside [{}, {}] C", origin, line_no,
                              temp, WeatherTrace::kMinTemp, WeatherTrace::kMaxTemp));
    }
    if (!times.empty() && time - times.back() != WeatherTrace::kSpacing) {
      throw Error(ErrorCode::kSpacing,
                  fmt::format("{}:{}: spacing {} s, expected uniform {} s", origin, line_no,
                              time - times.back(), WeatherTrace::kSpacing));
    }
    times.push_back(time);
    temps.push_back(temp);
  }
  if (!header_seen) {
    throw Error(ErrorCode::kParse, fmt::format("{}: empty weather file", origin));
  }
  if (temps.empty()) {
    throw Error(ErrorCode::kParse, fmt::format("{}: no weather samples", origin));
  }
  return WeatherTrace("custom", times.front(), std::move(temps));
}

WeatherTrace weather_load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open weather file '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return weather_parse_csv(buffer.str(), path);
}

std::string weather_to_csv(const WeatherTrace& trace) {
  std::string out = "time_s,t_outdoor_c\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += fmt::format("{},{}\n", format_exact(trace.time_at(i)),
                       format_exact(trace.temperatures()[i]));
  }
  return out;
}

void weather_save_csv(const WeatherTrace& trace, const std::string& path) {
  write_text_file(path, weather_to_csv(trace));
}

}  // namespace dcrl
