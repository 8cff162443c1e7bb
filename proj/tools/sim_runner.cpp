// sim-runner: simulator side of the bridge, spawned by the agent.
#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <string>

#include "dcrl/dcrl.h"

int main(int argc, char** argv) {
  // A vanished agent shows up as EPIPE on write, not as a fatal signal.
  std::signal(SIGPIPE, SIG_IGN);

  CLI::App app{"Serve one simulated episode over the bridge protocol"};
  std::string obs_channel, act_channel, config, weather;
  app.add_option("--obs-channel", obs_channel, "fd:N or FIFO path for observations")->required();
  app.add_option("--act-channel", act_channel, "fd:N or FIFO path for actions")->required();
  app.add_option("--config", config, "Episode INI")->required();
  app.add_option("--weather", weather, "Weather CSV")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  int exit_code = 0;
  const dcrl_status st = dcrl_sim_runner_serve(obs_channel.c_str(), act_channel.c_str(),
                                               config.c_str(), weather.c_str(), &exit_code);
  if (st != DCRL_OK) {
    std::fprintf(stderr, "sim-runner: %s error: %s\n", dcrl_status_name(st), dcrl_last_error());
    return dcrl_status_is_input_error(st) ? 2 : 3;
  }
  return exit_code;
}
