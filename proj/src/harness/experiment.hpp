#ifndef DCRL_HARNESS_EXPERIMENT_HPP_
#define DCRL_HARNESS_EXPERIMENT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"
#include "envsdk.hpp"
#include "trpo/trpo.hpp"

namespace dcrl {

// Training weather is a synthetic year per tag; evaluation uses a
// different year so agents are scored on weather they never saw.
inline constexpr std::uint64_t kTrainingWeatherSeed = 1;
inline constexpr std::uint64_t kEvaluationWeatherSeed = 99;
inline constexpr int kTrainingYearDays = 366;
inline constexpr int kWindowStride = 11;

struct TrainSpec {
  std::vector<std::string> tags = {"CA", "CO", "FL"};
  std::uint64_t weather_seed = kTrainingWeatherSeed;
  std::int64_t total_timesteps = 200000;
  TrpoConfig trpo;
  EpisodeConfig episode;  // weather left empty

  void validate() const;
};

// "CA,CO,FL" -> {"CA","CO","FL"}; throws kUnknownTag / kConfig.
std::vector<std::string> parse_tags(std::string_view text);
std::string join_tags(const std::vector<std::string>& tags, char sep = ',');

// [train], [trpo], [episode], [sim], [reward], [baseline].
std::vector<std::pair<std::string, std::vector<std::string>>> train_schema();
TrainSpec read_train_spec(const IniDocument& doc);
// Canonical form with every key spelled out; its hash identifies a run.
IniDocument train_spec_to_ini(const TrainSpec& spec);

// Episode `k` trains on tag k % ntags, using a `days`-long window of that
// tag's training year. Windows advance by kWindowStride positions each
// time the rotation comes back to the same tag.
WeatherTrace training_window(const WeatherTrace& year, int days, std::int64_t visit);
EnvFactory training_env_factory(const TrainSpec& spec);

struct Checkpoint {
  GaussianPolicy policy;
  Mlp value;
  ObsNormalizer normalizer;
  std::vector<std::string> tags;
  std::uint64_t seed = 0;
  std::int64_t timesteps = 0;
  std::string episode_ini;  // plant and reward the agent was trained on

  std::string label() const;  // e.g. "trpo(CA-CO-FL)"
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(std::string_view text, const std::string& origin = "<memory>");
Checkpoint load_checkpoint(const std::string& path);

std::string curve_to_csv(const std::vector<CurvePoint>& curve);

// An INI file, or a manifest.json from an earlier run (its embedded config).
IniDocument load_train_config(const std::string& path);

struct TrainOverrides {
  std::optional<std::int64_t> total_timesteps;
  std::optional<std::uint64_t> seed;
};

// Writes checkpoint.json, curve.csv and manifest.json into out_dir.
TrainResult cmd_train(const std::string& config_path, const std::string& out_dir,
                      const TrainOverrides& overrides, const ProgressCallback& progress = {});

}  // namespace dcrl

#endif  // DCRL_HARNESS_EXPERIMENT_HPP_
