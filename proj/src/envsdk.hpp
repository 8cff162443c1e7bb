#ifndef DCRL_ENVSDK_HPP_
#define DCRL_ENVSDK_HPP_

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include "sim_core.hpp"
#include "spaces.hpp"
#include "weather.hpp"

namespace dcrl {

struct RewardParams {
  double t_upper = 24.0;
  double t_center = 23.5;
  double t_lower = 23.0;
  double lambda_p = 1.0 / 100000.0;
  double lambda1 = 0.5;
  double lambda2 = 0.1;
  int zones = 2;

  void validate() const;
};

// Temperature term: a Gaussian bonus peaking at 1.0 per zone at t_center,
// minus a linear penalty outside [t_lower, t_upper]. Power term: -p_total.
double temperature_reward(const Observation& obs, const RewardParams& params);
double compute_reward(const Observation& obs, const RewardParams& params);

// setpoint = 25 + 15 a, flow = 4.375 + 2.625 a (after clamping to [-1, 1]).
HvacCommand denormalize_action(const NormalizedAction& action);
// Exact algebraic inverse of denormalize_action on the physical box.
NormalizedAction normalize_command(const HvacCommand& cmd);

struct EpisodeConfig {
  int days = 14;
  WeatherTrace weather;
  SimConfig sim = SimConfig::defaults();
  RewardParams reward;

  std::int64_t steps_per_episode() const;
  // Throws kConfig for non-integral episode length or weather shorter than
  // the horizon.
  void validate() const;
};

// Source of raw (unclamped) observations. Implemented in-process over
// sim-core and out-of-process over the bridge.
class SimulatorBackend {
 public:
  virtual ~SimulatorBackend() = default;
  virtual Observation reset(const EpisodeConfig& cfg) = 0;
  virtual Observation step(const HvacCommand& cmd) = 0;
};

class InProcessBackend final : public SimulatorBackend {
 public:
  Observation reset(const EpisodeConfig& cfg) override;
  Observation step(const HvacCommand& cmd) override;
  const SimState& state() const { return state_; }

 private:
  const EpisodeConfig* cfg_ = nullptr;
  SimState state_;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

// Episode log CSV writer (one row per completed step).
class EpisodeLog {
 public:
  static constexpr const char* kHeader =
      "step,time_s,t_out_c,t_west_c,t_east_c,p_total_w,p_it_w,p_hvac_w,"
      "sp_west_c,sp_east_c,flow_west_kgs,flow_east_kgs,reward";

  explicit EpisodeLog(const std::string& path);
  void append(std::int64_t step, double time_s, const Observation& obs, const HvacCommand& cmd,
              double reward);
  void flush();

 private:
  std::string path_;
  std::ofstream out_;
};

// Reset/step contract over a simulator backend. Observations are clamped to
// their declared ranges; reward is computed on the post-step observation.
class Environment {
 public:
  explicit Environment(EpisodeConfig cfg,
                       std::unique_ptr<SimulatorBackend> backend = nullptr);
  // The in-process backend keeps a pointer to cfg_.
  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;

  Observation reset();
  StepResult step(const NormalizedAction& action);
  // Physical command path used by the baseline controller.
  StepResult step_command(const HvacCommand& cmd);

  // Writes subsequent steps to `path`; call before reset().
  void enable_log(const std::string& path);

  const EpisodeConfig& config() const { return cfg_; }
  std::int64_t steps() const { return steps_; }
  std::int64_t steps_per_episode() const { return steps_per_episode_; }
  bool done() const { return steps_ >= steps_per_episode_; }
  const Observation& last_observation() const { return last_obs_; }

 private:
  EpisodeConfig cfg_;
  std::unique_ptr<SimulatorBackend> backend_;
  std::optional<std::string> log_path_;
  std::unique_ptr<EpisodeLog> log_;
  std::int64_t steps_per_episode_ = 0;
  std::int64_t steps_ = 0;
  bool reset_called_ = false;
  Observation last_obs_;
};

}  // namespace dcrl

#endif  // DCRL_ENVSDK_HPP_
