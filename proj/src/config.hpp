#ifndef DCRL_CONFIG_HPP_
#define DCRL_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "baseline.hpp"
#include "envsdk.hpp"
#include "sim_core.hpp"

namespace dcrl {

// Minimal INI document: `[section]` headers, `key = value` lines, `#` or `;`
// comments. Order of sections and keys is preserved so serialisation is
// deterministic.
class IniDocument {
 public:
  static IniDocument parse(std::string_view text, const std::string& origin = "<memory>");
  static IniDocument load(const std::string& path);

  std::optional<std::string> get(std::string_view section, std::string_view key) const;
  // Typed getters return `fallback` when the key is absent and throw kConfig
  // naming `section.key` when the value does not parse.
  double get_double(std::string_view section, std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view section, std::string_view key,
                       std::int64_t fallback) const;
  std::string get_string(std::string_view section, std::string_view key,
                         std::string fallback) const;

  void set(std::string_view section, std::string_view key, std::string value);
  void set(std::string_view section, std::string_view key, double value);
  void set_int(std::string_view section, std::string_view key, std::int64_t value);

  // Throws kConfig for any section or key not listed in `schema`.
  void check_known(
      const std::vector<std::pair<std::string, std::vector<std::string>>>& schema) const;

  std::string to_string() const;

 private:
  using Section = std::pair<std::string, std::vector<std::pair<std::string, std::string>>>;
  std::vector<Section> sections_;
  std::string origin_ = "<memory>";
};

// Each reader starts from the defaults and overrides keys present in `doc`.
SimConfig read_sim_config(const IniDocument& doc);
RewardParams read_reward_params(const IniDocument& doc);
ThermostatConfig read_thermostat_config(const IniDocument& doc);
int read_episode_days(const IniDocument& doc, int fallback);

void write_sim_config(IniDocument& doc, const SimConfig& sim);
void write_reward_params(IniDocument& doc, const RewardParams& reward);

// Keys understood by the sim/reward/episode readers.
std::vector<std::pair<std::string, std::vector<std::string>>> episode_schema();

// Serialises everything but the weather trace (which travels as CSV).
IniDocument episode_to_ini(const EpisodeConfig& cfg);
EpisodeConfig episode_from_ini(const IniDocument& doc, WeatherTrace weather);

}  // namespace dcrl

#endif  // DCRL_CONFIG_HPP_
