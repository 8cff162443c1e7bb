// dcrl: train, evaluate, compare and export plot data.
#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>

#include "dcrl/dcrl.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int report(dcrl_status status) {
  if (status == DCRL_OK) return 0;
  std::fprintf(stderr, "dcrl: %s error: %s\n", dcrl_status_name(status), dcrl_last_error());
  return dcrl_status_is_input_error(status) ? kExitConfig : kExitRuntime;
}

void print_progress(const dcrl_progress* p, void* user_data) {
  if (*static_cast<bool*>(user_data)) return;
  std::fprintf(stderr,
               "batch %4lld  steps %9lld  reward %9.4f  kl %.5f  surr %+.5f  vloss %9.3f%s\n",
               static_cast<long long>(p->batch), static_cast<long long>(p->timesteps),
               p->mean_reward, p->kl, p->surrogate, p->value_loss,
               p->accepted ? "" : "  (rejected)");
}

int emit_text(dcrl_status status, char* text, const std::string& out_path) {
  if (status != DCRL_OK) return report(status);
  int rc = 0;
  if (out_path.empty()) {
    std::fputs(text, stdout);
  } else if (FILE* f = std::fopen(out_path.c_str(), "w")) {
    std::fputs(text, f);
    if (std::fclose(f) != 0) rc = kExitRuntime;
  } else {
    std::fprintf(stderr, "dcrl: cannot write %s\n", out_path.c_str());
    rc = kExitRuntime;
  }
  dcrl_string_free(text);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-center cooling RL testbed"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dcrl_version());

  std::string config, out, controller = "baseline", tags = "CA,CO,FL,IL,VA", runner;
  std::string report_a, report_b, episode, kind;
  std::optional<long long> timesteps;
  std::optional<unsigned long long> seed;
  int days = 365;
  bool quiet = false;

  auto* train = app.add_subcommand("train", "Train a TRPO agent");
  train->add_option("--config", config, "INI config, or manifest.json of an earlier run")
      ->required();
  train->add_option("--out", out, "Output directory")->required();
  train->add_option("--timesteps", timesteps, "Override train.total_timesteps");
  train->add_option("--seed", seed, "Override trpo.seed");
  train->add_flag("--quiet", quiet, "No per-batch progress");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a controller on weather tags");
  evaluate->add_option("--controller", controller, "baseline or a checkpoint path")
      ->capture_default_str();
  evaluate->add_option("--weather", tags, "Comma-separated tags")->capture_default_str();
  evaluate->add_option("--days", days, "Episode length in days")->capture_default_str();
  evaluate->add_option("--out", out, "Output directory")->required();
  evaluate->add_option("--config", config, "INI overrides for [sim], [reward], [baseline]");
  evaluate->add_option("--runner", runner, "Run the simulator through this sim-runner");

  auto* compare = app.add_subcommand("compare", "Compare two evaluation reports");
  compare->add_option("report_a", report_a, "Reference report.csv")->required();
  compare->add_option("report_b", report_b, "Candidate report.csv")->required();

  auto* plot = app.add_subcommand("export-plot", "Write plot-ready CSV");
  plot->add_option("--episode", episode, "Episode or learning-curve CSV")->required();
  plot->add_option("--kind", kind, "curve, tempdist or timeseries")
      ->required()
      ->check(CLI::IsMember({"curve", "tempdist", "timeseries"}));
  plot->add_option("--out", out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (*train) {
    const uint64_t seed_value = seed.value_or(0);
    return report(dcrl_train(config.c_str(), out.c_str(), timesteps ? *timesteps : -1,
                             seed ? &seed_value : nullptr, print_progress, &quiet));
  }
  if (*evaluate) {
    const dcrl_status st =
        dcrl_evaluate(controller.c_str(), tags.c_str(), days, out.c_str(),
                      config.empty() ? nullptr : config.c_str(),
                      runner.empty() ? nullptr : runner.c_str());
    if (st == DCRL_OK) std::printf("report written to %s/report.csv\n", out.c_str());
    return report(st);
  }
  if (*compare) {
    char* text = nullptr;
    const dcrl_status st = dcrl_compare(report_a.c_str(), report_b.c_str(), &text);
    return emit_text(st, text, "");
  }
  char* text = nullptr;
  const dcrl_status st = dcrl_export_plot(episode.c_str(), kind.c_str(), &text);
  return emit_text(st, text, out);
}
