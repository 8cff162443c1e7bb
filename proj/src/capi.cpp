#include "dcrl/dcrl.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "baseline.hpp"
#include "bridge.hpp"
#include "config.hpp"
#include "envsdk.hpp"
#include "errors.hpp"
#include "harness/experiment.hpp"
#include "harness/report.hpp"

struct dcrl_weather {
  dcrl::WeatherTrace trace;
};

struct dcrl_env {
  std::unique_ptr<dcrl::Environment> env;
};

struct dcrl_policy {
  dcrl::Checkpoint ckpt;
};

namespace {

thread_local std::string g_last_error;

dcrl_status to_status(dcrl::ErrorCode code) {
  return static_cast<dcrl_status>(static_cast<int>(code) + 1);
}

template <typename F>
dcrl_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return DCRL_OK;
  } catch (const dcrl::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DCRL_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DCRL_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return DCRL_E_INTERNAL;
  }
}

dcrl_status invalid(const char* what) {
  g_last_error = std::string(what) + " must not be NULL";
  return DCRL_E_INVALID_ARGUMENT;
}

dcrl::Observation read_obs(const double* v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

void write_obs(const dcrl::Observation& o, double* out) {
  const auto a = o.to_array();
  std::memcpy(out, a.data(), sizeof(double) * a.size());
}

void write_command(const dcrl::HvacCommand& c, double* out) {
  out[0] = c.setpoint_west;
  out[1] = c.setpoint_east;
  out[2] = c.flow_west;
  out[3] = c.flow_east;
}

char* copy_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void write_step(const dcrl::StepResult& s, double* obs, double* reward, int* done) {
  write_obs(s.observation, obs);
  if (reward) *reward = s.reward;
  if (done) *done = s.done ? 1 : 0;
}

}  // namespace

extern "C" {

const char* dcrl_version(void) { return "0.1.0"; }

const char* dcrl_status_name(dcrl_status status) {
  switch (status) {
    case DCRL_OK: return "ok";
    case DCRL_E_CONFIG: return "config";
    case DCRL_E_NUMERICAL_FAULT: return "numerical_fault";
    case DCRL_E_CONTRACT: return "contract";
    case DCRL_E_IO: return "io";
    case DCRL_E_PARSE: return "parse";
    case DCRL_E_SPACING: return "spacing";
    case DCRL_E_RANGE: return "range";
    case DCRL_E_UNKNOWN_TAG: return "unknown_tag";
    case DCRL_E_PROTOCOL: return "protocol";
    case DCRL_E_TRUNCATED: return "truncated";
    case DCRL_E_CHILD_EXIT: return "child_exit";
    case DCRL_E_TIMEOUT: return "timeout";
    case DCRL_E_SPAWN: return "spawn";
    case DCRL_E_TAG_MISMATCH: return "tag_mismatch";
    case DCRL_E_INVALID_ARGUMENT: return "invalid_argument";
    case DCRL_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* dcrl_last_error(void) { return g_last_error.c_str(); }

int dcrl_status_is_input_error(dcrl_status status) {
  switch (status) {
    case DCRL_E_CONFIG:
    case DCRL_E_PARSE:
    case DCRL_E_SPACING:
    case DCRL_E_RANGE:
    case DCRL_E_UNKNOWN_TAG:
    case DCRL_E_TAG_MISMATCH:
    case DCRL_E_INVALID_ARGUMENT:
      return 1;
    default:
      return 0;
  }
}

dcrl_status dcrl_weather_synthesize(const char* tag, uint64_t seed, int days, dcrl_weather** out) {
  if (!tag) return invalid("tag");
  if (!out) return invalid("out");
  return guarded([&] { *out = new dcrl_weather{dcrl::weather_synthesize(tag, seed, days)}; });
}

dcrl_status dcrl_weather_load_csv(const char* path, dcrl_weather** out) {
  if (!path) return invalid("path");
  if (!out) return invalid("out");
  return guarded([&] { *out = new dcrl_weather{dcrl::weather_load_csv(path)}; });
}

dcrl_status dcrl_weather_save_csv(const dcrl_weather* weather, const char* path) {
  if (!weather) return invalid("weather");
  if (!path) return invalid("path");
  return guarded([&] { dcrl::weather_save_csv(weather->trace, path); });
}

dcrl_status dcrl_weather_size(const dcrl_weather* weather, size_t* out) {
  if (!weather) return invalid("weather");
  if (!out) return invalid("out");
  *out = weather->trace.size();
  return DCRL_OK;
}

dcrl_status dcrl_weather_at(const dcrl_weather* weather, double clock_s, double* out) {
  if (!weather) return invalid("weather");
  if (!out) return invalid("out");
  return guarded([&] { *out = weather->trace.at(clock_s); });
}

void dcrl_weather_free(dcrl_weather* weather) { delete weather; }

dcrl_status dcrl_compute_reward(const double obs[DCRL_OBS_SIZE], double* out) {
  if (!obs) return invalid("obs");
  if (!out) return invalid("out");
  return guarded([&] { *out = dcrl::compute_reward(read_obs(obs), dcrl::RewardParams{}); });
}

dcrl_status dcrl_denormalize_action(const double action[DCRL_ACTION_SIZE],
                                    double command[DCRL_ACTION_SIZE]) {
  if (!action) return invalid("action");
  if (!command) return invalid("command");
  return guarded([&] {
    dcrl::NormalizedAction a;
    std::memcpy(a.values.data(), action, sizeof(double) * DCRL_ACTION_SIZE);
    write_command(dcrl::denormalize_action(a), command);
  });
}

dcrl_status dcrl_baseline_act(const double obs[DCRL_OBS_SIZE], double command[DCRL_ACTION_SIZE]) {
  if (!obs) return invalid("obs");
  if (!command) return invalid("command");
  return guarded([&] { write_command(dcrl::baseline_act(read_obs(obs)), command); });
}

dcrl_status dcrl_env_create(const dcrl_weather* weather, int days, const char* config_path,
                            const char* runner_path, dcrl_env** out) {
  if (!weather) return invalid("weather");
  if (!out) return invalid("out");
  return guarded([&] {
    dcrl::IniDocument doc;
    if (config_path) doc = dcrl::IniDocument::load(config_path);
    doc.check_known(dcrl::train_schema());
    dcrl::EpisodeConfig cfg;
    cfg.days = days;
    cfg.sim = dcrl::read_sim_config(doc);
    cfg.reward = dcrl::read_reward_params(doc);
    cfg.weather = weather->trace;
    std::unique_ptr<dcrl::SimulatorBackend> backend;
    if (runner_path) backend = std::make_unique<dcrl::BridgedBackend>(runner_path);
    auto handle = std::make_unique<dcrl_env>();
    handle->env = std::make_unique<dcrl::Environment>(std::move(cfg), std::move(backend));
    *out = handle.release();
  });
}

dcrl_status dcrl_env_enable_log(dcrl_env* env, const char* csv_path) {
  if (!env) return invalid("env");
  if (!csv_path) return invalid("csv_path");
  return guarded([&] { env->env->enable_log(csv_path); });
}

dcrl_status dcrl_env_reset(dcrl_env* env, double obs[DCRL_OBS_SIZE]) {
  if (!env) return invalid("env");
  if (!obs) return invalid("obs");
  return guarded([&] { write_obs(env->env->reset(), obs); });
}

dcrl_status dcrl_env_step(dcrl_env* env, const double action[DCRL_ACTION_SIZE],
                          double obs[DCRL_OBS_SIZE], double* reward, int* done) {
  if (!env) return invalid("env");
  if (!action) return invalid("action");
  if (!obs) return invalid("obs");
  return guarded([&] {
    dcrl::NormalizedAction a;
    std::memcpy(a.values.data(), action, sizeof(double) * DCRL_ACTION_SIZE);
    write_step(env->env->step(a), obs, reward, done);
  });
}

dcrl_status dcrl_env_step_command(dcrl_env* env, const double command[DCRL_ACTION_SIZE],
                                  double obs[DCRL_OBS_SIZE], double* reward, int* done) {
  if (!env) return invalid("env");
  if (!command) return invalid("command");
  if (!obs) return invalid("obs");
  return guarded([&] {
    const dcrl::HvacCommand cmd{command[0], command[1], command[2], command[3]};
    write_step(env->env->step_command(cmd), obs, reward, done);
  });
}

void dcrl_env_free(dcrl_env* env) { delete env; }

dcrl_status dcrl_policy_load(const char* checkpoint_path, dcrl_policy** out) {
  if (!checkpoint_path) return invalid("checkpoint_path");
  if (!out) return invalid("out");
  return guarded([&] { *out = new dcrl_policy{dcrl::load_checkpoint(checkpoint_path)}; });
}

dcrl_status dcrl_policy_act(const dcrl_policy* policy, const double obs[DCRL_OBS_SIZE],
                            double action[DCRL_ACTION_SIZE]) {
  if (!policy) return invalid("policy");
  if (!obs) return invalid("obs");
  if (!action) return invalid("action");
  return guarded([&] {
    const Eigen::VectorXd mu = policy->ckpt.policy.mean(policy->ckpt.normalizer.apply(read_obs(obs)));
    if (!mu.allFinite()) {
      throw dcrl::Error(dcrl::ErrorCode::kNumericalFault, "policy mean is not finite");
    }
    for (int k = 0; k < DCRL_ACTION_SIZE; ++k) action[k] = mu(k);
  });
}

void dcrl_policy_free(dcrl_policy* policy) { delete policy; }

dcrl_status dcrl_train(const char* config_path, const char* out_dir, int64_t timesteps,
                       const uint64_t* seed, dcrl_progress_fn progress, void* user_data) {
  if (!config_path) return invalid("config_path");
  if (!out_dir) return invalid("out_dir");
  return guarded([&] {
    dcrl::TrainOverrides overrides;
    if (timesteps >= 0) overrides.total_timesteps = timesteps;
    if (seed) overrides.seed = *seed;
    dcrl::ProgressCallback callback;
    if (progress) {
      callback = [&](const dcrl::CurvePoint& p, const dcrl::UpdateStats& s) {
        const dcrl_progress info{p.batch,       p.timesteps,  p.mean_reward,
                                 p.kl,          p.surrogate,  p.value_loss,
                                 s.backtracks,  s.accepted ? 1 : 0};
        progress(&info, user_data);
      };
    }
    dcrl::cmd_train(config_path, out_dir, overrides, callback);
  });
}

dcrl_status dcrl_evaluate(const char* controller, const char* tags, int days, const char* out_dir,
                          const char* config_path, const char* runner_path) {
  if (!controller) return invalid("controller");
  if (!tags) return invalid("tags");
  if (!out_dir) return invalid("out_dir");
  return guarded([&] {
    dcrl::EvalOptions options;
    if (config_path) options.config_path = config_path;
    if (runner_path) options.runner_path = runner_path;
    dcrl::cmd_evaluate(controller, dcrl::parse_tags(tags), days, out_dir, options);
  });
}

dcrl_status dcrl_compare(const char* report_a, const char* report_b, char** out_text) {
  if (!report_a) return invalid("report_a");
  if (!report_b) return invalid("report_b");
  if (!out_text) return invalid("out_text");
  return guarded([&] { *out_text = copy_string(dcrl::cmd_compare(report_a, report_b)); });
}

dcrl_status dcrl_export_plot(const char* input_path, const char* kind, char** out_text) {
  if (!input_path) return invalid("input_path");
  if (!kind) return invalid("kind");
  if (!out_text) return invalid("out_text");
  return guarded([&] { *out_text = copy_string(dcrl::export_plot(input_path, kind)); });
}

void dcrl_string_free(char* text) { std::free(text); }

dcrl_status dcrl_sim_runner_serve(const char* obs_channel, const char* act_channel,
                                  const char* config_path, const char* weather_path,
                                  int* exit_code) {
  if (!obs_channel) return invalid("obs_channel");
  if (!act_channel) return invalid("act_channel");
  if (!config_path) return invalid("config_path");
  if (!weather_path) return invalid("weather_path");
  if (!exit_code) return invalid("exit_code");
  return guarded([&] {
    const dcrl::EpisodeConfig cfg = dcrl::episode_from_ini(
        dcrl::IniDocument::load(config_path), dcrl::weather_load_csv(weather_path));
    const int obs_fd = dcrl::open_channel(obs_channel, true);
    const int act_fd = dcrl::open_channel(act_channel, false);
    *exit_code = dcrl::serve_simulation(obs_fd, act_fd, cfg);
  });
}

}  // extern "C"
