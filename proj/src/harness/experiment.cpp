#include "harness/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <memory>

#include "errors.hpp"
#include "util.hpp"

namespace dcrl {

namespace {

using Json = nlohmann::json;

constexpr int kCheckpointVersion = 1;

}  // namespace

std::vector<std::pair<std::string, std::vector<std::string>>> train_schema() {
  auto schema = episode_schema();
  schema.push_back({"train", {"weather", "weather_seed", "total_timesteps"}});
  schema.push_back({"trpo",
                    {"max_kl", "timesteps_per_batch", "cg_iters", "cg_damping", "gamma", "lam",
                     "vf_iters", "vf_stepsize", "vf_minibatch", "backtrack_coeff",
                     "max_backtracks", "hidden", "seed"}});
  schema.push_back({"baseline",
                    {"cooling_setpoint", "heating_setpoint", "flow_gain", "min_flow", "max_flow"}});
  return schema;
}

namespace {

std::vector<int> parse_hidden(const std::string& text) {
  std::vector<int> sizes;
  for (const auto& part : split(text, ',')) {
    std::int64_t v = 0;
    if (!parse_int(trim(part), v) || v < 1 || v > 4096) {
      throw Error(ErrorCode::kConfig, fmt::format("trpo.hidden: bad layer size '{}'", part));
    }
    sizes.push_back(int(v));
  }
  if (sizes.empty()) throw Error(ErrorCode::kConfig, "trpo.hidden: empty");
  return sizes;
}

std::string hidden_to_string(const std::vector<int>& hidden) {
  std::string out;
  for (int h : hidden) out += (out.empty() ? "" : ",") + std::to_string(h);
  return out;
}

Json vector_json(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd json_vector(const Json& j, Eigen::Index expected, const char* what) {
  const auto values = j.get<std::vector<double>>();
  if (Eigen::Index(values.size()) != expected) {
    throw Error(ErrorCode::kParse, fmt::format("checkpoint {}: expected {} values, got {}", what,
                                               expected, values.size()));
  }
  Eigen::VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    if (!std::isfinite(values[std::size_t(i)])) {
      throw Error(ErrorCode::kParse, fmt::format("checkpoint {}: non-finite value", what));
    }
    v(i) = values[std::size_t(i)];
  }
  return v;
}

std::string hex64(std::uint64_t h) { return fmt::format("{:016x}", h); }

}  // namespace

std::vector<std::string> parse_tags(std::string_view text) {
  std::vector<std::string> tags;
  for (const auto& part : split(text, ',')) {
    std::string tag(trim(part));
    if (tag.empty()) continue;
    location_profile(tag);
    tags.push_back(std::move(tag));
  }
  if (tags.empty()) throw Error(ErrorCode::kConfig, "no weather tags given");
  return tags;
}

std::string join_tags(const std::vector<std::string>& tags, char sep) {
  std::string out;
  for (const auto& t : tags) {
    if (!out.empty()) out += sep;
    out += t;
  }
  return out;
}

void TrainSpec::validate() const {
  if (tags.empty()) throw Error(ErrorCode::kConfig, "train.weather: no tags");
  for (const auto& t : tags) location_profile(t);
  if (total_timesteps < 0) throw Error(ErrorCode::kConfig, "train.total_timesteps must be >= 0");
  trpo.validate();
  if (episode.days < 1 || episode.days > kTrainingYearDays) {
    throw Error(ErrorCode::kConfig,
                fmt::format("episode.days must be in [1, {}]", kTrainingYearDays));
  }
  EpisodeConfig probe = episode;
  probe.weather = WeatherTrace("custom", 0.0, std::vector<double>(std::size_t(episode.days) * 96 + 1, 20.0));
  probe.validate();
}

TrainSpec read_train_spec(const IniDocument& doc) {
  doc.check_known(train_schema());
  TrainSpec s;
  if (auto w = doc.get("train", "weather")) s.tags = parse_tags(*w);
  const std::int64_t ws = doc.get_int("train", "weather_seed", std::int64_t(s.weather_seed));
  if (ws < 0) throw Error(ErrorCode::kConfig, "train.weather_seed must be >= 0");
  s.weather_seed = std::uint64_t(ws);
  s.total_timesteps = doc.get_int("train", "total_timesteps", s.total_timesteps);

  TrpoConfig& t = s.trpo;
  t.max_kl = doc.get_double("trpo", "max_kl", t.max_kl);
  t.timesteps_per_batch = doc.get_int("trpo", "timesteps_per_batch", t.timesteps_per_batch);
  t.cg_iters = int(doc.get_int("trpo", "cg_iters", t.cg_iters));
  t.cg_damping = doc.get_double("trpo", "cg_damping", t.cg_damping);
  t.gamma = doc.get_double("trpo", "gamma", t.gamma);
  t.lam = doc.get_double("trpo", "lam", t.lam);
  t.vf_iters = int(doc.get_int("trpo", "vf_iters", t.vf_iters));
  t.vf_stepsize = doc.get_double("trpo", "vf_stepsize", t.vf_stepsize);
  t.vf_minibatch = int(doc.get_int("trpo", "vf_minibatch", t.vf_minibatch));
  t.backtrack_coeff = doc.get_double("trpo", "backtrack_coeff", t.backtrack_coeff);
  t.max_backtracks = int(doc.get_int("trpo", "max_backtracks", t.max_backtracks));
  if (auto h = doc.get("trpo", "hidden")) t.hidden = parse_hidden(*h);
  const std::int64_t seed = doc.get_int("trpo", "seed", std::int64_t(t.seed));
  if (seed < 0) throw Error(ErrorCode::kConfig, "trpo.seed must be >= 0");
  t.seed = std::uint64_t(seed);

  s.episode.days = read_episode_days(doc, s.episode.days);
  s.episode.sim = read_sim_config(doc);
  s.episode.reward = read_reward_params(doc);
  s.validate();
  return s;
}

IniDocument train_spec_to_ini(const TrainSpec& spec) {
  IniDocument doc;
  doc.set("train", "weather", join_tags(spec.tags));
  doc.set_int("train", "weather_seed", std::int64_t(spec.weather_seed));
  doc.set_int("train", "total_timesteps", spec.total_timesteps);
  const TrpoConfig& t = spec.trpo;
  doc.set("trpo", "max_kl", t.max_kl);
  doc.set_int("trpo", "timesteps_per_batch", t.timesteps_per_batch);
  doc.set_int("trpo", "cg_iters", t.cg_iters);
  doc.set("trpo", "cg_damping", t.cg_damping);
  doc.set("trpo", "gamma", t.gamma);
  doc.set("trpo", "lam", t.lam);
  doc.set_int("trpo", "vf_iters", t.vf_iters);
  doc.set("trpo", "vf_stepsize", t.vf_stepsize);
  doc.set_int("trpo", "vf_minibatch", t.vf_minibatch);
  doc.set("trpo", "backtrack_coeff", t.backtrack_coeff);
  doc.set_int("trpo", "max_backtracks", t.max_backtracks);
  doc.set("trpo", "hidden", hidden_to_string(t.hidden));
  doc.set_int("trpo", "seed", std::int64_t(t.seed));
  doc.set_int("episode", "days", spec.episode.days);
  write_sim_config(doc, spec.episode.sim);
  write_reward_params(doc, spec.episode.reward);
  return doc;
}

WeatherTrace training_window(const WeatherTrace& year, int days, std::int64_t visit) {
  const std::size_t len = std::size_t(days) * 96;
  if (year.size() < len + 1) {
    throw Error(ErrorCode::kContract, "training year shorter than one episode");
  }
  const std::int64_t windows = std::int64_t((year.size() - 1) / len);
  const std::int64_t w = (visit * kWindowStride) % windows;
  return year.slice(std::size_t(w) * len, len + 1);
}

EnvFactory training_env_factory(const TrainSpec& spec) {
  auto years = std::make_shared<std::vector<WeatherTrace>>();
  for (const auto& tag : spec.tags) {
    years->push_back(weather_synthesize(tag, spec.weather_seed, kTrainingYearDays));
  }
  EpisodeConfig base = spec.episode;
  return [years, base](std::int64_t episode) {
    const auto n = std::int64_t(years->size());
    EpisodeConfig cfg = base;
    cfg.weather = training_window((*years)[std::size_t(episode % n)], cfg.days, episode / n);
    return std::make_unique<Environment>(std::move(cfg));
  };
}

std::string Checkpoint::label() const { return fmt::format("trpo({})", join_tags(tags, '-')); }

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  Json j;
  j["format"] = "dcrl-checkpoint";
  j["version"] = kCheckpointVersion;
  j["tags"] = ckpt.tags;
  j["seed"] = ckpt.seed;
  j["timesteps"] = ckpt.timesteps;
  j["normalizer"] = {{"temp_offset", ckpt.normalizer.temp_offset},
                     {"temp_scale", ckpt.normalizer.temp_scale},
                     {"power_scale", ckpt.normalizer.power_scale}};
  j["policy"] = {{"sizes", ckpt.policy.mean_net().sizes()},
                 {"params", vector_json(ckpt.policy.mean_net().params())},
                 {"log_std", vector_json(ckpt.policy.log_std())}};
  j["value"] = {{"sizes", ckpt.value.sizes()}, {"params", vector_json(ckpt.value.params())}};
  j["episode"] = ckpt.episode_ini;
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text, const std::string& origin) {
  Checkpoint c;
  try {
    const Json j = Json::parse(text);
    if (j.at("format") != "dcrl-checkpoint" || j.at("version") != kCheckpointVersion) {
      throw Error(ErrorCode::kParse, fmt::format("{}: not a version {} checkpoint", origin,
                                                 kCheckpointVersion));
    }
    c.tags = j.at("tags").get<std::vector<std::string>>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.timesteps = j.at("timesteps").get<std::int64_t>();
    const Json& n = j.at("normalizer");
    c.normalizer = {n.at("temp_offset").get<double>(), n.at("temp_scale").get<double>(),
                    n.at("power_scale").get<double>()};

    const auto psizes = j.at("policy").at("sizes").get<std::vector<int>>();
    if (psizes.size() < 2 || psizes.front() != kObservationSize ||
        psizes.back() != kActionSize) {
      throw Error(ErrorCode::kParse, fmt::format("{}: policy has the wrong shape", origin));
    }
    c.policy = GaussianPolicy(kObservationSize, kActionSize,
                              std::vector<int>(psizes.begin() + 1, psizes.end() - 1));
    c.policy.mean_net().params() = json_vector(
        j.at("policy").at("params"), c.policy.mean_net().num_params(), "policy.params");
    c.policy.log_std() = json_vector(j.at("policy").at("log_std"), kActionSize, "policy.log_std");

    const auto vsizes = j.at("value").at("sizes").get<std::vector<int>>();
    if (vsizes.size() < 2 || vsizes.front() != kObservationSize || vsizes.back() != 1) {
      throw Error(ErrorCode::kParse, fmt::format("{}: value network has the wrong shape", origin));
    }
    c.value = Mlp(vsizes);
    c.value.params() = json_vector(j.at("value").at("params"), c.value.num_params(), "value.params");
    c.episode_ini = j.at("episode").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("{}: {}", origin, e.what()));
  }
  return c;
}

Checkpoint load_checkpoint(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::kConfig, fmt::format("checkpoint not found: {}", path));
  }
  return checkpoint_from_json(read_text_file(path), path);
}

IniDocument load_train_config(const std::string& path) {
  if (std::filesystem::path(path).extension() != ".json") return IniDocument::load(path);
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  try {
    return IniDocument::parse(Json::parse(text).at("config").get<std::string>(), path);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig, fmt::format("{}: not a training manifest ({})", path, e.what()));
  }
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "batch,timesteps,mean_reward,kl,surrogate,value_loss\n";
  for (const auto& p : curve) {
    out += fmt::format("{},{},{},{},{},{}\n", p.batch, p.timesteps, format_exact(p.mean_reward),
                       format_exact(p.kl), format_exact(p.surrogate),
                       format_exact(p.value_loss));
  }
  return out;
}

TrainResult cmd_train(const std::string& config_path, const std::string& out_dir,
                      const TrainOverrides& overrides, const ProgressCallback& progress) {
  TrainSpec spec = read_train_spec(load_train_config(config_path));
  if (overrides.total_timesteps) spec.total_timesteps = *overrides.total_timesteps;
  if (overrides.seed) spec.trpo.seed = *overrides.seed;
  spec.validate();

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("cannot create {}: {}", out_dir, ec.message()));

  const std::string config_text = train_spec_to_ini(spec).to_string();
  TrainResult result =
      train(training_env_factory(spec), spec.trpo, spec.total_timesteps, progress);

  Checkpoint ckpt{result.policy, result.value, result.normalizer, spec.tags, spec.trpo.seed,
                  spec.total_timesteps, episode_to_ini(spec.episode).to_string()};
  const std::string ckpt_text = checkpoint_to_json(ckpt);
  const std::string curve_text = curve_to_csv(result.curve);
  const std::filesystem::path dir(out_dir);
  write_text_file((dir / "checkpoint.json").string(), ckpt_text);
  write_text_file((dir / "curve.csv").string(), curve_text);

  Json manifest;
  manifest["seed"] = spec.trpo.seed;
  manifest["config_hash"] = hex64(fnv1a64(config_text));
  manifest["config"] = config_text;
  manifest["outputs"] = {{"checkpoint.json", hex64(fnv1a64(ckpt_text))},
                         {"curve.csv", hex64(fnv1a64(curve_text))}};
  write_text_file((dir / "manifest.json").string(), manifest.dump(1) + "\n");
  return result;
}

}  // namespace dcrl
