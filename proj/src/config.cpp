#include "config.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "errors.hpp"
#include "util.hpp"

namespace dcrl {

IniDocument IniDocument::parse(std::string_view text, const std::string& origin) {
  IniDocument doc;
  doc.origin_ = origin;
  std::string section;
  std::size_t line_no = 0;
  for (std::string_view raw : split_lines(text)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(ErrorCode::kConfig,
                    fmt::format("{}:{}: malformed section header '{}'", origin, line_no, line));
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || section.empty()) {
      throw Error(ErrorCode::kConfig,
                  fmt::format("{}:{}: expected 'key = value' inside a section", origin, line_no));
    }
    doc.set(section, trim(line.substr(0, eq)), std::string(trim(line.substr(eq + 1))));
  }
  return doc;
}

IniDocument IniDocument::load(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error&) {
    throw Error(ErrorCode::kConfig, fmt::format("cannot read config file '{}'", path));
  }
  return parse(text, path);
}

std::optional<std::string> IniDocument::get(std::string_view section,
                                            std::string_view key) const {
  for (const auto& [name, entries] : sections_) {
    if (name != section) continue;
    for (const auto& [k, v] : entries) {
      if (k == key) return v;
    }
  }
  return std::nullopt;
}

double IniDocument::get_double(std::string_view section, std::string_view key,
                               double fallback) const {
  const auto value = get(section, key);
  if (!value) return fallback;
  double out = 0.0;
  if (!parse_double(*value, out)) {
    throw Error(ErrorCode::kConfig, fmt::format("{}: invalid {}.{}: '{}' is not a number",
                                                origin_, section, key, *value));
  }
  return out;
}

std::int64_t IniDocument::get_int(std::string_view section, std::string_view key,
                                  std::int64_t fallback) const {
  const auto value = get(section, key);
  if (!value) return fallback;
  std::int64_t out = 0;
  if (!parse_int(*value, out)) {
    throw Error(ErrorCode::kConfig, fmt::format("{}: invalid {}.{}: '{}' is not an integer",
                                                origin_, section, key, *value));
  }
  return out;
}

std::string IniDocument::get_string(std::string_view section, std::string_view key,
                                    std::string fallback) const {
  auto value = get(section, key);
  return value ? *value : std::move(fallback);
}

void IniDocument::set(std::string_view section, std::string_view key, std::string value) {
  auto sec = std::find_if(sections_.begin(), sections_.end(),
                          [&](const Section& s) { return s.first == section; });
  if (sec == sections_.end()) {
    sections_.push_back({std::string(section), {}});
    sec = sections_.end() - 1;
  }
  for (auto& [k, v] : sec->second) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  sec->second.emplace_back(std::string(key), std::move(value));
}

void IniDocument::set(std::string_view section, std::string_view key, double value) {
  set(section, key, format_exact(value));
}

void IniDocument::set_int(std::string_view section, std::string_view key, std::int64_t value) {
  set(section, key, std::to_string(value));
}

void IniDocument::check_known(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& schema) const {
  for (const auto& [name, entries] : sections_) {
    auto known = std::find_if(schema.begin(), schema.end(),
                              [&](const auto& s) { return s.first == name; });
    if (known == schema.end()) {
      throw Error(ErrorCode::kConfig, fmt::format("{}: unknown section [{}]", origin_, name));
    }
    for (const auto& entry : entries) {
      const auto& keys = known->second;
      if (std::find(keys.begin(), keys.end(), entry.first) == keys.end()) {
        throw Error(ErrorCode::kConfig,
                    fmt::format("{}: unknown key {}.{}", origin_, name, entry.first));
      }
    }
  }
}

std::string IniDocument::to_string() const {
  std::string out;
  for (const auto& [name, entries] : sections_) {
    if (!out.empty()) out += '\n';
    out += fmt::format("[{}]\n", name);
    for (const auto& [k, v] : entries) out += fmt::format("{} = {}\n", k, v);
  }
  return out;
}

namespace {

void read_zone(const IniDocument& doc, const std::string& prefix, ZoneConfig& zone) {
  zone.floor_area = doc.get_double("sim", prefix + "_floor_area", zone.floor_area);
  zone.thermal_capacitance =
      doc.get_double("sim", prefix + "_capacitance", zone.thermal_capacitance);
  zone.envelope_conductance =
      doc.get_double("sim", prefix + "_conductance", zone.envelope_conductance);
  zone.it_load = doc.get_double("sim", prefix + "_it_load", zone.it_load);
}

void write_zone(IniDocument& doc, const std::string& prefix, const ZoneConfig& zone) {
  doc.set("sim", prefix + "_floor_area", zone.floor_area);
  doc.set("sim", prefix + "_capacitance", zone.thermal_capacitance);
  doc.set("sim", prefix + "_conductance", zone.envelope_conductance);
  doc.set("sim", prefix + "_it_load", zone.it_load);
}

}  // namespace

SimConfig read_sim_config(const IniDocument& doc) {
  SimConfig sim = SimConfig::defaults();
  read_zone(doc, "west", sim.zones[0]);
  read_zone(doc, "east", sim.zones[1]);
  sim.system_timestep = doc.get_double("sim", "system_timestep", sim.system_timestep);
  sim.fan_power_coeff = doc.get_double("sim", "fan_power_coeff", sim.fan_power_coeff);
  sim.cop_nominal = doc.get_double("sim", "cop_nominal", sim.cop_nominal);
  sim.economizer_threshold =
      doc.get_double("sim", "economizer_threshold", sim.economizer_threshold);
  sim.supply_temp_floor = doc.get_double("sim", "supply_temp_floor", sim.supply_temp_floor);
  sim.rng_seed = std::uint64_t(doc.get_int("sim", "rng_seed", std::int64_t(sim.rng_seed)));
  return sim;
}

void write_sim_config(IniDocument& doc, const SimConfig& sim) {
  write_zone(doc, "west", sim.zones[0]);
  write_zone(doc, "east", sim.zones[1]);
  doc.set("sim", "system_timestep", sim.system_timestep);
  doc.set("sim", "fan_power_coeff", sim.fan_power_coeff);
  doc.set("sim", "cop_nominal", sim.cop_nominal);
  doc.set("sim", "economizer_threshold", sim.economizer_threshold);
  doc.set("sim", "supply_temp_floor", sim.supply_temp_floor);
  doc.set_int("sim", "rng_seed", std::int64_t(sim.rng_seed));
}

RewardParams read_reward_params(const IniDocument& doc) {
  RewardParams r;
  r.t_upper = doc.get_double("reward", "t_upper", r.t_upper);
  r.t_center = doc.get_double("reward", "t_center", r.t_center);
  r.t_lower = doc.get_double("reward", "t_lower", r.t_lower);
  r.lambda_p = doc.get_double("reward", "lambda_p", r.lambda_p);
  r.lambda1 = doc.get_double("reward", "lambda1", r.lambda1);
  r.lambda2 = doc.get_double("reward", "lambda2", r.lambda2);
  r.zones = int(doc.get_int("reward", "zones", r.zones));
  return r;
}

void write_reward_params(IniDocument& doc, const RewardParams& r) {
  doc.set("reward", "t_upper", r.t_upper);
  doc.set("reward", "t_center", r.t_center);
  doc.set("reward", "t_lower", r.t_lower);
  doc.set("reward", "lambda_p", r.lambda_p);
  doc.set("reward", "lambda1", r.lambda1);
  doc.set("reward", "lambda2", r.lambda2);
  doc.set_int("reward", "zones", r.zones);
}

ThermostatConfig read_thermostat_config(const IniDocument& doc) {
  ThermostatConfig t;
  t.cooling_setpoint = doc.get_double("baseline", "cooling_setpoint", t.cooling_setpoint);
  t.heating_setpoint = doc.get_double("baseline", "heating_setpoint", t.heating_setpoint);
  t.flow_gain = doc.get_double("baseline", "flow_gain", t.flow_gain);
  t.min_flow = doc.get_double("baseline", "min_flow", t.min_flow);
  t.max_flow = doc.get_double("baseline", "max_flow", t.max_flow);
  return t;
}

int read_episode_days(const IniDocument& doc, int fallback) {
  return int(doc.get_int("episode", "days", fallback));
}

std::vector<std::pair<std::string, std::vector<std::string>>> episode_schema() {
  std::vector<std::string> sim_keys = {"system_timestep",      "fan_power_coeff",
                                       "cop_nominal",          "economizer_threshold",
                                       "supply_temp_floor",    "rng_seed"};
  for (const char* zone : {"west", "east"}) {
    for (const char* field : {"_floor_area", "_capacitance", "_conductance", "_it_load"}) {
      sim_keys.push_back(std::string(zone) + field);
    }
  }
  return {
      {"episode", {"days"}},
      {"sim", sim_keys},
      {"reward", {"t_upper", "t_center", "t_lower", "lambda_p", "lambda1", "lambda2", "zones"}},
  };
}

IniDocument episode_to_ini(const EpisodeConfig& cfg) {
  IniDocument doc;
  doc.set_int("episode", "days", cfg.days);
  write_sim_config(doc, cfg.sim);
  write_reward_params(doc, cfg.reward);
  return doc;
}

EpisodeConfig episode_from_ini(const IniDocument& doc, WeatherTrace weather) {
  doc.check_known(episode_schema());
  EpisodeConfig cfg;
  cfg.days = read_episode_days(doc, cfg.days);
  cfg.sim = read_sim_config(doc);
  cfg.reward = read_reward_params(doc);
  cfg.weather = std::move(weather);
  cfg.validate();
  return cfg;
}

}  // namespace dcrl
