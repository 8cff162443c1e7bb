/* C interface to the dcrl data-center cooling testbed.
 *
 * Every function returns a dcrl_status; on failure dcrl_last_error() gives
 * a message for the calling thread. Handles are opaque and owned by the
 * caller, who releases them with the matching *_free function (NULL is
 * accepted). Observation arrays hold DCRL_OBS_SIZE values in the order
 * outdoor, west, east temperature (C), total, IT, HVAC power (W); action
 * arrays hold DCRL_ACTION_SIZE values in [-1, 1], command arrays the
 * physical west/east setpoints (C) and west/east fan flows (kg/s). */
#ifndef DCRL_DCRL_H_
#define DCRL_DCRL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(DCRL_BUILDING_LIBRARY)
#define DCRL_API __attribute__((visibility("default")))
#else
#define DCRL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define DCRL_OBS_SIZE 6
#define DCRL_ACTION_SIZE 4

typedef enum dcrl_status {
  DCRL_OK = 0,
  DCRL_E_CONFIG = 1,
  DCRL_E_NUMERICAL_FAULT = 2,
  DCRL_E_CONTRACT = 3,
  DCRL_E_IO = 4,
  DCRL_E_PARSE = 5,
  DCRL_E_SPACING = 6,
  DCRL_E_RANGE = 7,
  DCRL_E_UNKNOWN_TAG = 8,
  DCRL_E_PROTOCOL = 9,
  DCRL_E_TRUNCATED = 10,
  DCRL_E_CHILD_EXIT = 11,
  DCRL_E_TIMEOUT = 12,
  DCRL_E_SPAWN = 13,
  DCRL_E_TAG_MISMATCH = 14,
  DCRL_E_INVALID_ARGUMENT = 15, /* NULL handle or pointer */
  DCRL_E_INTERNAL = 16
} dcrl_status;

typedef struct dcrl_weather dcrl_weather;
typedef struct dcrl_env dcrl_env;
typedef struct dcrl_policy dcrl_policy;

DCRL_API const char* dcrl_version(void);
DCRL_API const char* dcrl_status_name(dcrl_status status);
/* Message of the last failed call on this thread ("" if none). */
DCRL_API const char* dcrl_last_error(void);
/* Nonzero for statuses caused by bad user input rather than a runtime fault. */
DCRL_API int dcrl_status_is_input_error(dcrl_status status);

/* Weather traces (15-minute samples). */
DCRL_API dcrl_status dcrl_weather_synthesize(const char* tag, uint64_t seed, int days,
                                             dcrl_weather** out);
DCRL_API dcrl_status dcrl_weather_load_csv(const char* path, dcrl_weather** out);
DCRL_API dcrl_status dcrl_weather_save_csv(const dcrl_weather* weather, const char* path);
DCRL_API dcrl_status dcrl_weather_size(const dcrl_weather* weather, size_t* out);
DCRL_API dcrl_status dcrl_weather_at(const dcrl_weather* weather, double clock_s, double* out);
DCRL_API void dcrl_weather_free(dcrl_weather* weather);

/* Stateless helpers with default parameters. */
DCRL_API dcrl_status dcrl_compute_reward(const double obs[DCRL_OBS_SIZE], double* out);
DCRL_API dcrl_status dcrl_denormalize_action(const double action[DCRL_ACTION_SIZE],
                                             double command[DCRL_ACTION_SIZE]);
DCRL_API dcrl_status dcrl_baseline_act(const double obs[DCRL_OBS_SIZE],
                                       double command[DCRL_ACTION_SIZE]);

/* Episode environment. `config_path` (INI, may be NULL) supplies [sim] and
 * [reward] overrides; `runner_path` (may be NULL) runs the simulator in a
 * child process through the bridge instead of in process. The weather is
 * copied. */
DCRL_API dcrl_status dcrl_env_create(const dcrl_weather* weather, int days,
                                     const char* config_path, const char* runner_path,
                                     dcrl_env** out);
DCRL_API dcrl_status dcrl_env_enable_log(dcrl_env* env, const char* csv_path);
DCRL_API dcrl_status dcrl_env_reset(dcrl_env* env, double obs[DCRL_OBS_SIZE]);
DCRL_API dcrl_status dcrl_env_step(dcrl_env* env, const double action[DCRL_ACTION_SIZE],
                                   double obs[DCRL_OBS_SIZE], double* reward, int* done);
DCRL_API dcrl_status dcrl_env_step_command(dcrl_env* env, const double command[DCRL_ACTION_SIZE],
                                           double obs[DCRL_OBS_SIZE], double* reward, int* done);
DCRL_API void dcrl_env_free(dcrl_env* env);

/* Trained policy (deterministic mean action). */
DCRL_API dcrl_status dcrl_policy_load(const char* checkpoint_path, dcrl_policy** out);
DCRL_API dcrl_status dcrl_policy_act(const dcrl_policy* policy, const double obs[DCRL_OBS_SIZE],
                                     double action[DCRL_ACTION_SIZE]);
DCRL_API void dcrl_policy_free(dcrl_policy* policy);

/* Experiment harness. */
typedef struct dcrl_progress {
  int64_t batch;
  int64_t timesteps;
  double mean_reward;
  double kl;
  double surrogate;
  double value_loss;
  int backtracks;
  int accepted;
} dcrl_progress;
typedef void (*dcrl_progress_fn)(const dcrl_progress* progress, void* user_data);

/* timesteps < 0 and seed == NULL keep the values from the config. */
DCRL_API dcrl_status dcrl_train(const char* config_path, const char* out_dir, int64_t timesteps,
                                const uint64_t* seed, dcrl_progress_fn progress, void* user_data);
/* controller: "baseline" or a checkpoint path; tags: comma separated.
 * config_path and runner_path may be NULL. */
DCRL_API dcrl_status dcrl_evaluate(const char* controller, const char* tags, int days,
                                   const char* out_dir, const char* config_path,
                                   const char* runner_path);
/* *out_text is allocated by the library; release it with dcrl_string_free. */
DCRL_API dcrl_status dcrl_compare(const char* report_a, const char* report_b, char** out_text);
DCRL_API dcrl_status dcrl_export_plot(const char* input_path, const char* kind, char** out_text);
DCRL_API void dcrl_string_free(char* text);

/* Simulator side of the bridge: serves one episode over the named channels
 * ("fd:N" or a FIFO path). *exit_code receives the process exit status to
 * use. */
DCRL_API dcrl_status dcrl_sim_runner_serve(const char* obs_channel, const char* act_channel,
                                           const char* config_path, const char* weather_path,
                                           int* exit_code);

#ifdef __cplusplus
}
#endif

#endif /* DCRL_DCRL_H_ */
