#include "harness/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>

#include "bridge.hpp"
#include "errors.hpp"
#include "util.hpp"

namespace dcrl {

namespace {

constexpr const char* kReportHeader =
    "controller,tag,days,steps,mean_reward,mean_power_kw,"
    "west_mean_c,west_std_c,west_min_c,west_max_c,"
    "east_mean_c,east_std_c,east_min_c,east_max_c,band_fraction";
constexpr std::size_t kReportColumns = 15;

constexpr const char* kDeterministicNote =
    "Policies are evaluated with their deterministic mean action (no exploration noise, no "
    "updates during evaluation).";

bool in_band(double t) { return t >= kBandLow && t <= kBandHigh; }

// Columns of an EpisodeLog CSV.
struct EpisodeColumns {
  std::vector<double> time_s, t_out, t_west, t_east, p_total, p_hvac, reward;
};

EpisodeColumns parse_episode_csv(std::string_view text, const std::string& origin) {
  const auto lines = split_lines(text);
  if (lines.empty() || trim(lines[0]) != EpisodeLog::kHeader) {
    throw Error(ErrorCode::kParse, fmt::format("{}:1: not an episode CSV", origin));
  }
  EpisodeColumns c;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cells = split(lines[i], ',');
    double v[13];
    bool ok = cells.size() == 13;
    for (std::size_t k = 0; ok && k < 13; ++k) ok = parse_double(trim(cells[k]), v[k]);
    if (!ok) throw Error(ErrorCode::kParse, fmt::format("{}:{}: malformed row", origin, i + 1));
    c.time_s.push_back(v[1]);
    c.t_out.push_back(v[2]);
    c.t_west.push_back(v[3]);
    c.t_east.push_back(v[4]);
    c.p_total.push_back(v[5]);
    c.p_hvac.push_back(v[7]);
    c.reward.push_back(v[12]);
  }
  if (c.time_s.empty()) throw Error(ErrorCode::kParse, fmt::format("{}: no rows", origin));
  return c;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

EvalRow summarize(const std::string& controller, const std::string& tag, int days,
                  std::span<const double> west, std::span<const double> east,
                  std::span<const double> power_w, std::span<const double> reward) {
  EvalRow row;
  row.controller = controller;
  row.tag = tag;
  row.days = days;
  row.steps = std::int64_t(west.size());
  row.mean_reward = mean_of(reward);
  row.mean_power_kw = mean_of(power_w) / 1000.0;
  row.west = temp_stats(west);
  row.east = temp_stats(east);
  std::int64_t band = 0;
  for (std::size_t i = 0; i < west.size(); ++i) band += in_band(west[i]) && in_band(east[i]);
  row.band_fraction = double(band) / double(west.size());
  return row;
}

std::string stats_cells(const TempStats& s) {
  return fmt::format("{},{},{},{}", format_exact(s.mean), format_exact(s.std),
                     format_exact(s.min), format_exact(s.max));
}

}  // namespace

TempStats temp_stats(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kContract, "statistics of an empty series");
  TempStats s;
  s.mean = mean_of(values);
  double ss = 0.0;
  s.min = s.max = values[0];
  for (double x : values) {
    ss += (x - s.mean) * (x - s.mean);
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.std = std::sqrt(ss / double(values.size()));
  return s;
}

const EvalRow* EvalReport::find(std::string_view tag) const {
  for (const auto& r : rows) {
    if (r.tag == tag) return &r;
  }
  return nullptr;
}

EvalRow row_from_episode_csv(std::string_view text, const std::string& origin) {
  const EpisodeColumns c = parse_episode_csv(text, origin);
  return summarize("", "", 0, c.t_west, c.t_east, c.p_total, c.reward);
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.controller, r.tag, r.days, r.steps,
                       format_exact(r.mean_reward), format_exact(r.mean_power_kw),
                       stats_cells(r.west), stats_cells(r.east), format_exact(r.band_fraction));
  }
  return out;
}

EvalReport report_from_csv(std::string_view text, const std::string& origin) {
  const auto lines = split_lines(text);
  if (lines.empty() || trim(lines[0]) != kReportHeader) {
    throw Error(ErrorCode::kParse, fmt::format("{}:1: not an evaluation report", origin));
  }
  EvalReport report;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cells = split(lines[i], ',');
    auto bad = [&] {
      return Error(ErrorCode::kParse, fmt::format("{}:{}: malformed report row", origin, i + 1));
    };
    if (cells.size() != kReportColumns) throw bad();
    EvalRow r;
    r.controller = std::string(trim(cells[0]));
    r.tag = std::string(trim(cells[1]));
    std::int64_t days = 0;
    if (!parse_int(trim(cells[2]), days) || !parse_int(trim(cells[3]), r.steps)) throw bad();
    r.days = int(days);
    double* fields[] = {&r.mean_reward, &r.mean_power_kw, &r.west.mean, &r.west.std,
                        &r.west.min,    &r.west.max,      &r.east.mean, &r.east.std,
                        &r.east.min,    &r.east.max,      &r.band_fraction};
    for (std::size_t k = 0; k < std::size(fields); ++k) {
      if (!parse_double(trim(cells[4 + k]), *fields[k])) throw bad();
    }
    if (report.find(r.tag)) {
      throw Error(ErrorCode::kParse, fmt::format("{}:{}: duplicate tag {}", origin, i + 1, r.tag));
    }
    report.rows.push_back(std::move(r));
  }
  return report;
}

EvalReport load_report(const std::string& path) {
  return report_from_csv(read_text_file(path), path);
}

std::string report_to_table(const EvalReport& report) {
  std::string out = fmt::format("# {}\n", kDeterministicNote);
  out += fmt::format("{:<18} {:<4} {:>6} {:>10} {:>10} {:>23} {:>23} {:>8}\n", "controller", "tag",
                     "days", "reward", "power_kW", "west mean/std/min/max", "east mean/std/min/max",
                     "in_band");
  for (const auto& r : report.rows) {
    out += fmt::format(
        "{:<18} {:<4} {:>6} {:>10.4f} {:>10.2f} {:>5.2f}/{:>4.2f}/{:>5.2f}/{:>5.2f} "
        "{:>5.2f}/{:>4.2f}/{:>5.2f}/{:>5.2f} {:>7.2f}%\n",
        r.controller, r.tag, r.days, r.mean_reward, r.mean_power_kw, r.west.mean, r.west.std,
        r.west.min, r.west.max, r.east.mean, r.east.std, r.east.min, r.east.max,
        100.0 * r.band_fraction);
  }
  return out;
}

Controller Controller::baseline(ThermostatConfig cfg) {
  cfg.validate();
  Controller c;
  c.label_ = "baseline";
  c.thermostat_ = cfg;
  return c;
}

Controller Controller::from_checkpoint(Checkpoint ckpt) {
  Controller c;
  c.label_ = ckpt.label();
  c.ckpt_ = std::move(ckpt);
  return c;
}

Controller Controller::from_spec(const std::string& spec) {
  if (spec == "baseline") return baseline();
  return from_checkpoint(load_checkpoint(spec));
}

StepResult Controller::act(Environment& env, const Observation& obs) const {
  if (!ckpt_) return env.step_command(baseline_act(obs, thermostat_));
  const Eigen::VectorXd mu = ckpt_->policy.mean(ckpt_->normalizer.apply(obs));
  if (!mu.allFinite()) throw Error(ErrorCode::kNumericalFault, "policy mean is not finite");
  NormalizedAction a;
  for (int k = 0; k < kActionSize; ++k) a.values[std::size_t(k)] = mu(k);
  return env.step(a);
}

EpisodeConfig evaluation_episode(const Controller& controller, const std::string& tag, int days,
                                 const EvalOptions& options) {
  if (days < 1) throw Error(ErrorCode::kConfig, fmt::format("invalid days: {}", days));
  IniDocument doc;
  if (options.config_path) {
    IniDocument user = IniDocument::load(*options.config_path);
    user.check_known(train_schema());
    doc = user;
  } else if (controller.is_policy()) {
    doc = IniDocument::parse(controller.checkpoint()->episode_ini, "checkpoint episode");
  }
  EpisodeConfig cfg;
  cfg.days = days;
  cfg.sim = read_sim_config(doc);
  cfg.reward = read_reward_params(doc);
  cfg.weather = weather_synthesize(tag, options.weather_seed, days);
  cfg.validate();
  return cfg;
}

EvalRow run_episode(const Controller& controller, const EpisodeConfig& cfg, const std::string& tag,
                    const EvalOptions& options, const std::optional<std::string>& log_path) {
  std::unique_ptr<SimulatorBackend> backend;
  if (options.runner_path) backend = std::make_unique<BridgedBackend>(*options.runner_path);
  Environment env(cfg, std::move(backend));
  if (log_path) env.enable_log(*log_path);

  const auto n = std::size_t(env.steps_per_episode());
  std::vector<double> west, east, power, reward;
  west.reserve(n);
  east.reserve(n);
  power.reserve(n);
  reward.reserve(n);
  Observation obs = env.reset();
  while (!env.done()) {
    const StepResult s = controller.act(env, obs);
    obs = s.observation;
    west.push_back(obs.west_c);
    east.push_back(obs.east_c);
    power.push_back(obs.p_total_w);
    reward.push_back(s.reward);
  }
  return summarize(controller.label(), tag, cfg.days, west, east, power, reward);
}

EvalReport cmd_evaluate(const std::string& controller_spec, const std::vector<std::string>& tags,
                        int days, const std::string& out_dir, const EvalOptions& options) {
  if (tags.empty()) throw Error(ErrorCode::kConfig, "no weather tags given");
  for (const auto& t : tags) location_profile(t);
  Controller controller = Controller::from_spec(controller_spec);
  if (options.config_path && !controller.is_policy()) {
    controller = Controller::baseline(read_thermostat_config(IniDocument::load(*options.config_path)));
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("cannot create {}: {}", out_dir, ec.message()));
  const std::filesystem::path dir(out_dir);

  EvalReport report;
  for (const auto& tag : tags) {
    if (report.find(tag)) continue;
    const EpisodeConfig cfg = evaluation_episode(controller, tag, days, options);
    const std::string episode_path = (dir / fmt::format("episode_{}.csv", tag)).string();
    report.rows.push_back(run_episode(controller, cfg, tag, options, episode_path));
    write_text_file((dir / fmt::format("tempdist_{}.csv", tag)).string(),
                    temperature_histogram_csv(read_text_file(episode_path), episode_path));
  }
  write_text_file((dir / "report.csv").string(), report_to_csv(report));
  write_text_file((dir / "report.txt").string(), report_to_table(report));
  return report;
}

Comparison compare_reports(const EvalReport& a, const EvalReport& b) {
  std::vector<std::string> missing;
  for (const auto& r : a.rows) {
    if (!b.find(r.tag)) missing.push_back(r.tag + " (only in a)");
  }
  for (const auto& r : b.rows) {
    if (!a.find(r.tag)) missing.push_back(r.tag + " (only in b)");
  }
  if (!missing.empty() || a.rows.empty()) {
    throw Error(ErrorCode::kTagMismatch,
                fmt::format("reports cover different tags: {}",
                            missing.empty() ? std::string("none") : join_tags(missing, ' ')));
  }
  auto pct = [](double from, double to) { return 100.0 * (to - from) / from; };
  Comparison c;
  c.controller_a = a.rows.front().controller;
  c.controller_b = b.rows.front().controller;
  TagDelta avg{"average"};
  for (const auto& ra : a.rows) {
    const EvalRow& rb = *b.find(ra.tag);
    c.tags.push_back({ra.tag, ra.mean_power_kw, rb.mean_power_kw,
                      pct(ra.mean_power_kw, rb.mean_power_kw), ra.band_fraction,
                      rb.band_fraction});
    avg.power_a_kw += ra.mean_power_kw;
    avg.power_b_kw += rb.mean_power_kw;
    avg.band_a += ra.band_fraction;
    avg.band_b += rb.band_fraction;
  }
  const double n = double(a.rows.size());
  avg.power_a_kw /= n;
  avg.power_b_kw /= n;
  avg.band_a /= n;
  avg.band_b /= n;
  avg.delta_pct = pct(avg.power_a_kw, avg.power_b_kw);
  c.average = avg;
  return c;
}

std::string comparison_to_table(const Comparison& c) {
  std::string out = fmt::format("a = {}, b = {}; delta = (b - a) / a, negative is better for b\n",
                                c.controller_a, c.controller_b);
  out += fmt::format("{:<8} {:>10} {:>10} {:>9} {:>9} {:>9}\n", "tag", "a_kW", "b_kW", "delta",
                     "a_band", "b_band");
  auto line = [](const TagDelta& d) {
    return fmt::format("{:<8} {:>10.1f} {:>10.1f} {:>8.1f}% {:>8.1f}% {:>8.1f}%\n", d.tag,
                       d.power_a_kw, d.power_b_kw, d.delta_pct, 100.0 * d.band_a,
                       100.0 * d.band_b);
  };
  for (const auto& d : c.tags) out += line(d);
  out += line(c.average);
  return out;
}

std::string cmd_compare(const std::string& report_a, const std::string& report_b) {
  return comparison_to_table(compare_reports(load_report(report_a), load_report(report_b)));
}

std::string temperature_histogram_csv(std::string_view episode_csv, const std::string& origin,
                                      double bin_width) {
  if (!(bin_width > 0.0)) throw Error(ErrorCode::kContract, "bin width must be positive");
  const EpisodeColumns c = parse_episode_csv(episode_csv, origin);
  std::map<std::int64_t, std::pair<std::int64_t, std::int64_t>> bins;
  for (std::size_t i = 0; i < c.t_west.size(); ++i) {
    ++bins[std::int64_t(std::floor(c.t_west[i] / bin_width))].first;
    ++bins[std::int64_t(std::floor(c.t_east[i] / bin_width))].second;
  }
  const double n = double(c.t_west.size());
  std::string out = "bin_low_c,bin_high_c,west_count,east_count,west_fraction,east_fraction\n";
  for (std::int64_t k = bins.begin()->first; k <= bins.rbegin()->first; ++k) {
    const auto it = bins.find(k);
    const auto counts = it == bins.end() ? std::pair<std::int64_t, std::int64_t>{} : it->second;
    out += fmt::format("{},{},{},{},{},{}\n", format_exact(double(k) * bin_width),
                       format_exact(double(k + 1) * bin_width), counts.first, counts.second,
                       format_exact(double(counts.first) / n),
                       format_exact(double(counts.second) / n));
  }
  return out;
}

std::string export_plot(const std::string& input_path, const std::string& kind) {
  const std::string text = read_text_file(input_path);
  if (kind == "tempdist") return temperature_histogram_csv(text, input_path);
  if (kind == "timeseries") {
    const EpisodeColumns c = parse_episode_csv(text, input_path);
    std::string out = "time_h,t_out_c,t_west_c,t_east_c,p_total_kw,p_hvac_kw\n";
    for (std::size_t i = 0; i < c.time_s.size(); ++i) {
      out += fmt::format("{},{},{},{},{},{}\n", format_exact(c.time_s[i] / 3600.0),
                         format_exact(c.t_out[i]), format_exact(c.t_west[i]),
                         format_exact(c.t_east[i]), format_exact(c.p_total[i] / 1000.0),
                         format_exact(c.p_hvac[i] / 1000.0));
    }
    return out;
  }
  if (kind == "curve") {
    const auto lines = split_lines(text);
    if (lines.empty() || trim(lines[0]) != "batch,timesteps,mean_reward,kl,surrogate,value_loss") {
      throw Error(ErrorCode::kParse, fmt::format("{}:1: not a learning-curve CSV", input_path));
    }
    // Trailing mean over the last 10 batches alongside the raw series.
    constexpr std::size_t kWindow = 10;
    std::vector<double> rewards;
    std::string out = "timesteps,mean_reward,smoothed_reward\n";
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      const auto cells = split(lines[i], ',');
      double ts = 0.0, r = 0.0;
      if (cells.size() != 6 || !parse_double(trim(cells[1]), ts) ||
          !parse_double(trim(cells[2]), r)) {
        throw Error(ErrorCode::kParse, fmt::format("{}:{}: malformed row", input_path, i + 1));
      }
      rewards.push_back(r);
      const std::size_t lo = rewards.size() > kWindow ? rewards.size() - kWindow : 0;
      double s = 0.0;
      for (std::size_t k = lo; k < rewards.size(); ++k) s += rewards[k];
      out += fmt::format("{},{},{}\n", format_exact(ts), format_exact(r),
                         format_exact(s / double(rewards.size() - lo)));
    }
    return out;
  }
  throw Error(ErrorCode::kConfig,
              fmt::format("unknown plot kind '{}' (expected curve, tempdist or timeseries)", kind));
}

}  // namespace dcrl
