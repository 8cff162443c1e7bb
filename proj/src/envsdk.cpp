#include "envsdk.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "util.hpp"

namespace dcrl {

namespace {

constexpr double kSetpointMid = 25.0;
constexpr double kSetpointHalf = 15.0;
constexpr double kFlowMid = 4.375;
constexpr double kFlowHalf = 2.625;

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

Observation Observation::clamped() const {
  auto t = [](double v) { return std::clamp(v, kTempLow, kTempHigh); };
  auto p = [](double v) { return std::clamp(v, kPowerLow, kPowerHigh); };
  return {t(outdoor_c), t(west_c), t(east_c), p(p_total_w), p(p_it_w), p(p_hvac_w)};
}

bool Observation::in_range() const { return clamped() == *this; }

NormalizedAction NormalizedAction::clamped() const {
  NormalizedAction out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    // NaN propagates so the simulator can report the numerical fault.
    out.values[i] = std::isnan(values[i]) ? values[i] : std::clamp(values[i], -1.0, 1.0);
  }
  return out;
}

void RewardParams::validate() const {
  if (!(t_lower < t_center && t_center < t_upper)) {
    throw Error(ErrorCode::kConfig,
                "invalid reward temperatures: need t_lower < t_center < t_upper");
  }
  if (lambda_p < 0.0 || lambda1 < 0.0 || lambda2 < 0.0) {
    throw Error(ErrorCode::kConfig, "invalid reward weights: lambdas must be >= 0");
  }
  if (zones < 1 || zones > 2) {
    throw Error(ErrorCode::kConfig, fmt::format("invalid reward zones: {}", zones));
  }
}

double temperature_reward(const Observation& obs, const RewardParams& params) {
  const double temps[2] = {obs.west_c, obs.east_c};
  double bonus = 0.0;
  double penalty = 0.0;
  for (int i = 0; i < params.zones; ++i) {
    const double d = temps[i] - params.t_center;
    bonus += std::exp(-params.lambda1 * d * d);
    penalty += positive_part(temps[i] - params.t_upper) + positive_part(params.t_lower - temps[i]);
  }
  return bonus - params.lambda2 * penalty;
}

double compute_reward(const Observation& obs, const RewardParams& params) {
  return temperature_reward(obs, params) + params.lambda_p * (-obs.p_total_w);
}

HvacCommand denormalize_action(const NormalizedAction& action) {
  const NormalizedAction a = action.clamped();
  return {kSetpointMid + kSetpointHalf * a[0], kSetpointMid + kSetpointHalf * a[1],
          kFlowMid + kFlowHalf * a[2], kFlowMid + kFlowHalf * a[3]};
}

NormalizedAction normalize_command(const HvacCommand& cmd) {
  return {{(cmd.setpoint_west - kSetpointMid) / kSetpointHalf,
           (cmd.setpoint_east - kSetpointMid) / kSetpointHalf,
           (cmd.flow_west - kFlowMid) / kFlowHalf, (cmd.flow_east - kFlowMid) / kFlowHalf}};
}

std::int64_t EpisodeConfig::steps_per_episode() const {
  return std::int64_t(std::llround(double(days) * 86400.0 / sim.system_timestep));
}

void EpisodeConfig::validate() const {
  sim.validate();
  reward.validate();
  if (days < 1) throw Error(ErrorCode::kConfig, fmt::format("invalid days: {}", days));
  const double steps = double(days) * 86400.0 / sim.system_timestep;
  if (steps != std::floor(steps)) {
    throw Error(ErrorCode::kConfig,
                fmt::format("invalid system_timestep: {} days is not a whole number of {} s steps",
                            days, sim.system_timestep));
  }
  if (weather.empty() || weather.horizon() < double(days) * 86400.0) {
    throw Error(ErrorCode::kConfig,
                fmt::format("invalid weather: trace covers {} s, episode needs {} s",
                            weather.horizon(), double(days) * 86400.0));
  }
}

Observation InProcessBackend::reset(const EpisodeConfig& cfg) {
  cfg_ = &cfg;
  state_ = sim_reset(cfg.sim, cfg.weather);
  return sim_observe(state_);
}

Observation InProcessBackend::step(const HvacCommand& cmd) {
  state_ = sim_step(state_, cmd, cfg_->weather, cfg_->sim);
  return sim_observe(state_);
}

EpisodeLog::EpisodeLog(const std::string& path) : path_(path), out_(path, std::ios::trunc) {
  if (!out_) throw Error(ErrorCode::kIo, fmt::format("cannot write episode log '{}'", path));
  out_ << kHeader << '\n';
}

void EpisodeLog::append(std::int64_t step, double time_s, const Observation& obs,
                        const HvacCommand& cmd, double reward) {
  out_ << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", step, format_exact(time_s),
                      format_exact(obs.outdoor_c), format_exact(obs.west_c),
                      format_exact(obs.east_c), format_exact(obs.p_total_w),
                      format_exact(obs.p_it_w), format_exact(obs.p_hvac_w),
                      format_exact(cmd.setpoint_west), format_exact(cmd.setpoint_east),
                      format_exact(cmd.flow_west), format_exact(cmd.flow_east),
                      format_exact(reward));
}

void EpisodeLog::flush() {
  out_.flush();
  if (!out_) throw Error(ErrorCode::kIo, fmt::format("write to '{}' failed", path_));
}

Environment::Environment(EpisodeConfig cfg, std::unique_ptr<SimulatorBackend> backend)
    : cfg_(std::move(cfg)), backend_(std::move(backend)) {
  cfg_.validate();
  if (!backend_) backend_ = std::make_unique<InProcessBackend>();
  steps_per_episode_ = cfg_.steps_per_episode();
}

void Environment::enable_log(const std::string& path) { log_path_ = path; }

Observation Environment::reset() {
  if (log_) log_->flush();
  log_.reset();
  steps_ = 0;
  last_obs_ = backend_->reset(cfg_).clamped();
  reset_called_ = true;
  if (log_path_) log_ = std::make_unique<EpisodeLog>(*log_path_);
  return last_obs_;
}

StepResult Environment::step(const NormalizedAction& action) {
  return step_command(denormalize_action(action));
}

StepResult Environment::step_command(const HvacCommand& raw_cmd) {
  if (!reset_called_) throw Error(ErrorCode::kContract, "step() called before reset()");
  if (done()) throw Error(ErrorCode::kContract, "step() called after the episode finished");
  const HvacCommand cmd = raw_cmd.clamped();
  StepResult result;
  result.observation = backend_->step(cmd).clamped();
  ++steps_;
  result.reward = compute_reward(result.observation, cfg_.reward);
  result.done = done();
  last_obs_ = result.observation;
  if (log_) {
    log_->append(steps_, double(steps_) * cfg_.sim.system_timestep, result.observation, cmd,
                 result.reward);
    if (result.done) log_->flush();
  }
  return result;
}

}  // namespace dcrl
