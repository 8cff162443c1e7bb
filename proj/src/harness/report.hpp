#ifndef DCRL_HARNESS_REPORT_HPP_
#define DCRL_HARNESS_REPORT_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "baseline.hpp"
#include "harness/experiment.hpp"

namespace dcrl {

inline constexpr double kBandLow = 22.0;
inline constexpr double kBandHigh = 25.0;

struct TempStats {
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};

TempStats temp_stats(std::span<const double> values);

struct EvalRow {
  std::string controller;
  std::string tag;
  int days = 0;
  std::int64_t steps = 0;
  double mean_reward = 0.0;
  double mean_power_kw = 0.0;
  TempStats west;
  TempStats east;
  double band_fraction = 0.0;  // both zones in [kBandLow, kBandHigh]
};

struct EvalReport {
  std::vector<EvalRow> rows;
  const EvalRow* find(std::string_view tag) const;
};

// Recomputes one report row from an episode CSV written by EpisodeLog.
EvalRow row_from_episode_csv(std::string_view text, const std::string& origin);

std::string report_to_csv(const EvalReport& report);
EvalReport report_from_csv(std::string_view text, const std::string& origin = "<memory>");
EvalReport load_report(const std::string& path);
std::string report_to_table(const EvalReport& report);

// Either the rule-based thermostat or a trained checkpoint (policy mean).
class Controller {
 public:
  static Controller baseline(ThermostatConfig cfg = {});
  static Controller from_checkpoint(Checkpoint ckpt);
  // "baseline" or a checkpoint path.
  static Controller from_spec(const std::string& spec);

  const std::string& label() const { return label_; }
  bool is_policy() const { return ckpt_.has_value(); }
  const std::optional<Checkpoint>& checkpoint() const { return ckpt_; }
  StepResult act(Environment& env, const Observation& obs) const;

 private:
  std::string label_;
  ThermostatConfig thermostat_;
  std::optional<Checkpoint> ckpt_;
};

struct EvalOptions {
  std::optional<std::string> config_path;  // overrides [sim]/[reward]/[baseline]
  std::optional<std::string> runner_path;  // run the plant out of process
  std::uint64_t weather_seed = kEvaluationWeatherSeed;
};

// Plant configuration used to evaluate `controller` over `days` on `tag`.
EpisodeConfig evaluation_episode(const Controller& controller, const std::string& tag, int days,
                                 const EvalOptions& options);

// Runs one episode; `log_path` receives the episode CSV if given.
EvalRow run_episode(const Controller& controller, const EpisodeConfig& cfg, const std::string& tag,
                    const EvalOptions& options, const std::optional<std::string>& log_path);

// Writes report.csv, report.txt, episode_<tag>.csv, tempdist_<tag>.csv.
EvalReport cmd_evaluate(const std::string& controller_spec, const std::vector<std::string>& tags,
                        int days, const std::string& out_dir, const EvalOptions& options = {});

struct TagDelta {
  std::string tag;
  double power_a_kw = 0.0;
  double power_b_kw = 0.0;
  double delta_pct = 0.0;  // negative: b uses less power than a
  double band_a = 0.0;
  double band_b = 0.0;
};

struct Comparison {
  std::string controller_a;
  std::string controller_b;
  std::vector<TagDelta> tags;
  TagDelta average;  // tag "average": delta of the per-tag mean powers
};

// Throws kTagMismatch unless both reports cover the same tags.
Comparison compare_reports(const EvalReport& a, const EvalReport& b);
std::string comparison_to_table(const Comparison& c);
std::string cmd_compare(const std::string& report_a, const std::string& report_b);

// Plot-ready CSV derived from an episode CSV (`tempdist`, `timeseries`) or
// a learning-curve CSV (`curve`).
std::string temperature_histogram_csv(std::string_view episode_csv, const std::string& origin,
                                      double bin_width = 0.25);
std::string export_plot(const std::string& input_path, const std::string& kind);

}  // namespace dcrl

#endif  // DCRL_HARNESS_REPORT_HPP_
