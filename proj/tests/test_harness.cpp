#include <doctest.h>
#include <json.hpp>

#include <unistd.h>

#include <cmath>
#include <filesystem>

#include "errors.hpp"
#include "harness/experiment.hpp"
#include "harness/report.hpp"
#include "util.hpp"

using namespace dcrl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / fmt_name(name);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
  static std::string fmt_name(const std::string& n) {
    return "dcrl-test-" + n + "-" + std::to_string(::getpid());
  }
};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kConfig;
}

constexpr const char* kSmallConfig =
    "[train]\nweather = CA,CO\ntotal_timesteps = 1024\n"
    "[trpo]\ntimesteps_per_batch = 512\nhidden = 8\nseed = 3\n"
    "[episode]\ndays = 1\n";

EvalRow row(const std::string& tag, double kw) {
  EvalRow r;
  r.controller = "x";
  r.tag = tag;
  r.mean_power_kw = kw;
  return r;
}

// Independent summary of an episode CSV: column lookup by name, long double
// accumulation, Welford variance.
struct Oracle {
  long double mean = 0, m2 = 0, min = 1e300, max = -1e300;
  std::int64_t n = 0;
  void add(long double x) {
    ++n;
    const long double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
    min = std::min(min, x);
    max = std::max(max, x);
  }
  double std() const { return double(std::sqrt(m2 / n)); }
};

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("weather tag lists") {
  CHECK(parse_tags("CA, CO ,FL") == std::vector<std::string>{"CA", "CO", "FL"});
  CHECK(code_of([] { parse_tags("CA,XX"); }) == ErrorCode::kUnknownTag);
  CHECK(code_of([] { parse_tags(""); }) == ErrorCode::kConfig);
  CHECK(join_tags({"CA", "CO"}, '-') == "CA-CO");
}

TEST_CASE("training episodes rotate through tags and advance windows") {
  TrainSpec s;
  s.episode.days = 2;
  const EnvFactory f = training_env_factory(s);
  const char* expect[] = {"CA", "CO", "FL", "CA", "CO"};
  for (int k = 0; k < 5; ++k) {
    const WeatherTrace year = weather_synthesize(expect[k], kTrainingWeatherSeed, kTrainingYearDays);
    const WeatherTrace want = training_window(year, 2, k / 3);
    const auto env = f(k);
    CHECK(env->config().weather.temperatures() == want.temperatures());
  }
  const WeatherTrace year = weather_synthesize("CA", 1, kTrainingYearDays);
  CHECK(training_window(year, 2, 1).temperatures()[0] == year.temperatures()[kWindowStride * 2 * 96]);
  // 183 windows of two days; visit 17 wraps to window 187 % 183 = 4.
  CHECK(training_window(year, 2, 17).temperatures()[0] == year.temperatures()[4 * 2 * 96]);
  CHECK(code_of([&] { training_window(year, 400, 0); }) == ErrorCode::kContract);
}

TEST_CASE("train config errors") {
  CHECK(code_of([] { read_train_spec(IniDocument::parse("[trpo]\nmax_kl = -1\n")).validate(); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] { read_train_spec(IniDocument::parse("[trpo]\nhidden = 32,x\n")); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] { read_train_spec(IniDocument::parse("[train]\nweather = MARS\n")); }) ==
        ErrorCode::kUnknownTag);
  CHECK(code_of([] { read_train_spec(IniDocument::parse("[trpo]\nlearning_rate = 1\n")); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] { load_train_config("/nonexistent/train.ini"); }) == ErrorCode::kConfig);
  const TrainSpec s = read_train_spec(IniDocument::parse(kSmallConfig));
  const TrainSpec back = read_train_spec(train_spec_to_ini(s));
  CHECK(train_spec_to_ini(back).to_string() == train_spec_to_ini(s).to_string());
  CHECK(back.trpo.hidden == std::vector<int>{8});
}

TEST_CASE("training runs are reproducible from config or manifest") {
  TempDir dir("train");
  write_text_file(dir / "train.ini", kSmallConfig);
  cmd_train(dir / "train.ini", dir / "a", {});
  cmd_train(dir / "train.ini", dir / "b", {});
  cmd_train(dir / "a/manifest.json", dir / "c", {});
  const std::string a = read_text_file(dir / "a/checkpoint.json");
  CHECK(a == read_text_file(dir / "b/checkpoint.json"));
  CHECK(a == read_text_file(dir / "c/checkpoint.json"));
  CHECK(read_text_file(dir / "a/manifest.json") == read_text_file(dir / "c/manifest.json"));

  const auto manifest = nlohmann::json::parse(read_text_file(dir / "a/manifest.json"));
  CHECK(manifest.at("seed") == 3);
  CHECK(manifest.at("outputs").at("checkpoint.json").get<std::string>().size() == 16);

  const Checkpoint ck = load_checkpoint(dir / "a/checkpoint.json");
  CHECK(ck.label() == "trpo(CA-CO)");
  CHECK(ck.timesteps == 1024);
  CHECK(checkpoint_to_json(ck) == a);

  cmd_train(dir / "train.ini", dir / "d", {std::nullopt, 4});
  CHECK(read_text_file(dir / "d/checkpoint.json") != a);

  const std::string curve = read_text_file(dir / "a/curve.csv");
  CHECK(split_lines(curve).size() == 3);
  CHECK(curve.rfind("batch,timesteps,mean_reward,kl,surrogate,value_loss", 0) == 0);
}

TEST_CASE("checkpoint parse errors") {
  CHECK(code_of([] { checkpoint_from_json("{"); }) == ErrorCode::kParse);
  CHECK(code_of([] { checkpoint_from_json(R"({"format":"other"})"); }) == ErrorCode::kParse);
  CHECK(code_of([] { load_checkpoint("/nonexistent/checkpoint.json"); }) == ErrorCode::kConfig);
}

TEST_CASE("baseline evaluation report agrees with an independent recomputation") {
  TempDir dir("eval");
  const EvalReport rep = cmd_evaluate("baseline", parse_tags("CA,CO,FL,IL,VA"), 365, dir.path.string());
  REQUIRE(rep.rows.size() == 5);
  CHECK(report_from_csv(read_text_file(dir / "report.csv")).rows.size() == 5);
  for (const EvalRow& r : rep.rows) {
    INFO(r.tag);
    CHECK(r.controller == "baseline");
    CHECK(r.steps == 365 * 96);
    const std::string csv = read_text_file(dir / ("episode_" + r.tag + ".csv"));
    const auto lines = split_lines(csv);
    const auto header = split(lines[0], ',');
    auto col = [&](const char* name) {
      return std::size_t(std::find(header.begin(), header.end(), name) - header.begin());
    };
    const std::size_t cw = col("t_west_c"), ce = col("t_east_c"), cp = col("p_total_w"),
                      cr = col("reward");
    Oracle west, east;
    long double power = 0, reward = 0;
    std::int64_t in_band = 0, n = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto cells = split(lines[i], ',');
      const double w = std::stod(cells[cw]), e = std::stod(cells[ce]);
      west.add(w);
      east.add(e);
      power += std::stold(cells[cp]);
      reward += std::stold(cells[cr]);
      in_band += w >= 22.0 && w <= 25.0 && e >= 22.0 && e <= 25.0;
      ++n;
    }
    REQUIRE(n == r.steps);
    const double tol = 1e-9;
    CHECK(std::abs(r.mean_power_kw - double(power / n / 1000)) < tol * r.mean_power_kw);
    CHECK(std::abs(r.mean_reward - double(reward / n)) < tol * std::abs(r.mean_reward));
    CHECK(std::abs(r.west.mean - double(west.mean)) < tol);
    CHECK(std::abs(r.east.std - east.std()) < tol);
    CHECK(r.west.min == double(west.min));
    CHECK(r.east.max == double(east.max));
    CHECK(r.band_fraction == doctest::Approx(double(in_band) / double(n)));
    // Summary statistics are mutually consistent.
    CHECK(r.west.min <= r.west.mean);
    CHECK(r.west.mean <= r.west.max);
    CHECK(r.west.std <= 0.5 * (r.west.max - r.west.min) + 1e-12);
    CHECK(r.west.min <= r.west.mean - r.west.std);
    CHECK(r.east.min <= r.east.mean - r.east.std);
    CHECK(r.band_fraction >= 0.0);
    CHECK(r.band_fraction <= 1.0);
  }
  CHECK(fs::exists(dir / "tempdist_CA.csv"));
  CHECK(fs::exists(dir / "report.txt"));
}

TEST_CASE("temperature statistics") {
  const double v[] = {1.0, 2.0, 3.0, 4.0};
  const TempStats s = temp_stats(v);
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(1.25)));
  CHECK(s.min == 1.0);
  CHECK(s.max == 4.0);
}

TEST_CASE("report comparison") {
  EvalReport a{{row("CA", 126.2)}}, b{{row("CA", 98.3)}};
  const Comparison c = compare_reports(a, b);
  CHECK(c.tags.at(0).delta_pct == doctest::Approx(-22.1078).epsilon(1e-4));
  CHECK(c.average.delta_pct == c.tags[0].delta_pct);
  CHECK(compare_reports(a, a).average.delta_pct == 0.0);

  EvalReport two_a{{row("CA", 100), row("FL", 300)}}, two_b{{row("FL", 150), row("CA", 150)}};
  const Comparison t = compare_reports(two_a, two_b);
  CHECK(t.average.power_a_kw == 200.0);
  CHECK(t.average.delta_pct == doctest::Approx(-25.0));
  CHECK(t.tags[0].delta_pct == doctest::Approx(50.0));

  EvalReport other{{row("CO", 1.0)}};
  CHECK(code_of([&] { compare_reports(a, other); }) == ErrorCode::kTagMismatch);
  CHECK(code_of([&] { compare_reports(a, two_b); }) == ErrorCode::kTagMismatch);
  CHECK(comparison_to_table(c).find("CA") != std::string::npos);
}

TEST_CASE("report CSV round trip and errors") {
  EvalRow r = row("VA", 1.0 / 3.0);
  r.days = 7;
  r.steps = 672;
  r.west = {23.1, 0.4, 22.0, 24.9};
  r.band_fraction = 0.875;
  const EvalReport rep{{r}};
  const EvalReport back = report_from_csv(report_to_csv(rep));
  REQUIRE(back.rows.size() == 1);
  CHECK(back.rows[0].mean_power_kw == 1.0 / 3.0);
  CHECK(back.rows[0].west.std == 0.4);
  CHECK(report_to_csv(back) == report_to_csv(rep));
  CHECK(code_of([] { report_from_csv("nope\n"); }) == ErrorCode::kParse);
  CHECK(code_of([&] { report_from_csv(report_to_csv(EvalReport{{r, r}})); }) == ErrorCode::kParse);
}

TEST_CASE("plot export") {
  TempDir dir("plot");
  cmd_evaluate("baseline", {"CO"}, 2, dir.path.string());
  const std::string ep = dir / "episode_CO.csv";

  const std::string hist_text = export_plot(ep, "tempdist");
  const auto hist = split_lines(hist_text);
  CHECK(hist[0] == "bin_low_c,bin_high_c,west_count,east_count,west_fraction,east_fraction");
  double west_total = 0.0;
  for (std::size_t i = 1; i < hist.size(); ++i) {
    if (hist[i].empty()) continue;
    const auto cells = split(hist[i], ',');
    CHECK(std::stod(cells[1]) - std::stod(cells[0]) == doctest::Approx(0.25));
    west_total += std::stod(cells[2]);
  }
  CHECK(west_total == 192.0);

  const std::string ts_text = export_plot(ep, "timeseries");
  const auto ts = split_lines(ts_text);
  CHECK(ts[0] == "time_h,t_out_c,t_west_c,t_east_c,p_total_kw,p_hvac_kw");
  CHECK(std::count_if(ts.begin() + 1, ts.end(), [](auto l) { return !l.empty(); }) == 192);

  write_text_file(dir / "curve.csv",
                  "batch,timesteps,mean_reward,kl,surrogate,value_loss\n1,10,1,0,0,0\n2,20,3,0,0,0\n");
  const std::string curve_text = export_plot(dir / "curve.csv", "curve");
  const auto curve = split_lines(curve_text);
  CHECK(curve[0] == "timesteps,mean_reward,smoothed_reward");
  CHECK(curve[2] == "20,3,2");

  CHECK(code_of([&] { export_plot(ep, "violin"); }) == ErrorCode::kConfig);
  CHECK(code_of([&] { export_plot(dir / "missing.csv", "curve"); }) != ErrorCode::kConfig);
}

}  // TEST_SUITE
