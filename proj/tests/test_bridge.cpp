#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "bridge.hpp"
#include "config.hpp"
#include "util.hpp"

using namespace dcrl;

namespace {

std::vector<std::uint8_t> hex(std::initializer_list<int> bytes) {
  return std::vector<std::uint8_t>(bytes.begin(), bytes.end());
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kConfig;
}

std::vector<std::string> fuzz_args(const std::string& mode, int steps = 3) {
  return {"--mode", mode, "--steps", std::to_string(steps)};
}

BridgeSession::Options quick() {
  BridgeSession::Options o;
  o.handshake_timeout_ms = 2000;
  o.exchange_timeout_ms = 2000;
  o.teardown_grace_ms = 300;
  return o;
}

FloatMessage action(double v) { return FloatMessage{{v, 0.0, 0.0, 0.0}}; }

struct RunnerFiles {
  std::filesystem::path dir;
  std::string config, weather;

  explicit RunnerFiles(int days) {
    dir = std::filesystem::temp_directory_path() / ("dcrl-test-bridge-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    EpisodeConfig cfg;
    cfg.days = days;
    config = (dir / "episode.ini").string();
    weather = (dir / "weather.csv").string();
    write_text_file(config, episode_to_ini(cfg).to_string());
    weather_save_csv(weather_synthesize("CA", 0, days), weather);
  }
  ~RunnerFiles() {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }
};

}  // namespace

TEST_SUITE("bridge") {

TEST_CASE("encoding is little-endian count then binary64 values") {
  CHECK(encode_message({}) == hex({0, 0, 0, 0}));
  const double one[] = {1.0};
  CHECK(encode_message(one) == hex({1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0xF0, 0x3F}));
}

TEST_CASE("decoding a hand-built message") {
  auto bytes = hex({2, 0, 0, 0});
  for (double v : {13.8, 23.5}) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) bytes.push_back(std::uint8_t(bits >> (8 * i)));
  }
  const auto msg = decode_message(bytes);
  REQUIRE(msg);
  CHECK(msg->values == std::vector<double>{13.8, 23.5});
}

TEST_CASE("round trip is bit exact") {
  const std::vector<double> values = {-0.0, 1e-310, std::numeric_limits<double>::infinity(),
                                      -1.0 / 3.0, 6.02214076e23};
  const auto msg = decode_message(encode_message(values));
  REQUIRE(msg);
  REQUIRE(msg->count() == values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    CHECK(std::memcmp(&msg->values[i], &values[i], 8) == 0);
  }
  const std::vector<double> full(kMaxMessageValues, 2.5);
  CHECK(decode_message(encode_message(full))->values == full);
}

TEST_CASE("encoder rejects NaN and oversize messages") {
  const double nan[] = {1.0, std::nan("")};
  CHECK(code_of([&] { encode_message(nan); }) == ErrorCode::kProtocol);
  const std::vector<double> big(kMaxMessageValues + 1, 0.0);
  CHECK(code_of([&] { encode_message(big); }) == ErrorCode::kProtocol);
}

TEST_CASE("decoder framing errors") {
  CHECK_FALSE(decode_message(std::span<const std::uint8_t>{}).has_value());
  CHECK(code_of([] { decode_message(hex({5, 0, 0, 0})); }) == ErrorCode::kTruncated);
  CHECK(code_of([] { decode_message(hex({1, 0})); }) == ErrorCode::kTruncated);
  CHECK(code_of([] { decode_message(hex({0xFF, 0xFF, 0, 0})); }) == ErrorCode::kProtocol);
}

TEST_CASE("stream of messages ends cleanly at a boundary") {
  auto bytes = encode_message(std::vector<double>{1.0});
  const auto second = encode_message(std::vector<double>{2.0, 3.0});
  bytes.insert(bytes.end(), second.begin(), second.end());
  MemorySource src(bytes);
  CHECK(decode_message(src)->values.size() == 1);
  CHECK(decode_message(src)->values.size() == 2);
  CHECK_FALSE(decode_message(src).has_value());
}

TEST_CASE("sim-runner handshake and full episode") {
  RunnerFiles files(1);
  BridgeSession s = BridgeSession::spawn(DCRL_SIM_RUNNER,
                                         {"--config", files.config, "--weather", files.weather});
  CHECK(s.state() == BridgeSession::State::kAwaitingAct);
  REQUIRE(s.first_observation().count() == 6);
  CHECK(s.first_observation().values[1] == 23.5);
  int steps = 0;
  while (auto obs = s.exchange(FloatMessage{{23.5, 23.5, 1.75, 1.75}})) {
    CHECK(obs->count() == 6);
    ++steps;
  }
  CHECK(steps == 96);
  CHECK(s.state() == BridgeSession::State::kClosed);
}

TEST_CASE("sim-runner with a bad config exits before the handshake") {
  RunnerFiles files(1);
  write_text_file(files.config, "[sim]\nsystem_timestep = 30\n");
  CHECK(code_of([&] {
          BridgeSession::spawn(DCRL_SIM_RUNNER,
                               {"--config", files.config, "--weather", files.weather}, quick());
        }) == ErrorCode::kChildExit);
}

TEST_CASE("spawn failures") {
  CHECK(code_of([] { BridgeSession::spawn("/nonexistent/sim-runner", {}); }) == ErrorCode::kSpawn);
  try {
    BridgeSession::spawn(DCRL_FUZZ_CHILD, fuzz_args("exit"), quick());
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kChildExit);
    CHECK(std::string(e.what()).find("7") != std::string::npos);
  }
}

TEST_CASE("exchange outside the awaiting-action state") {
  BridgeSession idle;
  CHECK(code_of([&] { idle.exchange(action(0.0)); }) == ErrorCode::kContract);
  BridgeSession s = BridgeSession::spawn(DCRL_FUZZ_CHILD, fuzz_args("ok", 1), quick());
  REQUIRE(s.exchange(action(0.5)));
  CHECK_FALSE(s.exchange(action(0.5)).has_value());
  CHECK(code_of([&] { s.exchange(action(0.0)); }) == ErrorCode::kContract);
}

TEST_CASE("echoing child answers each action") {
  BridgeSession s = BridgeSession::spawn(DCRL_FUZZ_CHILD, fuzz_args("ok", 3), quick());
  for (double a : {0.25, -1.0, 2.0}) {
    const auto obs = s.exchange(action(a));
    REQUIRE(obs);
    CHECK(obs->values[1] == 23.5 + a);
  }
  CHECK_FALSE(s.exchange(action(0.0)).has_value());
}

TEST_CASE("malformed child streams") {
  CHECK(code_of([] { BridgeSession::spawn(DCRL_FUZZ_CHILD, fuzz_args("truncate"), quick()); }) ==
        ErrorCode::kTruncated);
  CHECK(code_of([] { BridgeSession::spawn(DCRL_FUZZ_CHILD, fuzz_args("oversize"), quick()); }) ==
        ErrorCode::kProtocol);
  BridgeSession mid = BridgeSession::spawn(DCRL_FUZZ_CHILD, fuzz_args("midclose"), quick());
  CHECK(code_of([&] { mid.exchange(action(0.0)); }) == ErrorCode::kTruncated);
  CHECK(mid.state() == BridgeSession::State::kClosed);
}

TEST_CASE("crashing child") {
  BridgeSession s = BridgeSession::spawn(DCRL_FUZZ_CHILD, fuzz_args("crash"), quick());
  try {
    s.exchange(action(0.0));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kChildExit);
    CHECK(std::string(e.what()).find("signal") != std::string::npos);
  }
}

TEST_CASE("silent child times out") {
  auto opts = quick();
  opts.handshake_timeout_ms = 200;
  const auto t0 = std::chrono::steady_clock::now();
  CHECK(code_of([&] { BridgeSession::spawn(DCRL_FUZZ_CHILD, fuzz_args("hang"), opts); }) ==
        ErrorCode::kTimeout);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(5));
}

TEST_CASE("teardown kills a child that ignores hang-up") {
  BridgeSession s = BridgeSession::spawn(DCRL_FUZZ_CHILD, fuzz_args("stubborn"), quick());
  const pid_t pid = s.pid();
  const auto t0 = std::chrono::steady_clock::now();
  const int status = s.close();
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(3));
  CHECK(WIFSIGNALED(status));
  CHECK(WTERMSIG(status) == SIGKILL);
  CHECK(::kill(pid, 0) != 0);
  CHECK(s.state() == BridgeSession::State::kClosed);
}

TEST_CASE("bridged backend matches the in-process simulator exactly") {
  EpisodeConfig cfg;
  cfg.days = 1;
  cfg.weather = weather_synthesize("FL", 3, 1);
  Environment local(cfg);
  Environment remote(cfg, std::make_unique<BridgedBackend>(DCRL_SIM_RUNNER));
  CHECK(local.reset() == remote.reset());
  for (int k = 0; !local.done(); ++k) {
    const double a = std::sin(0.37 * k);
    const NormalizedAction act{{a, -a, 0.5 * a, 1.0 - std::abs(a)}};
    const StepResult x = local.step(act);
    const StepResult y = remote.step(act);
    REQUIRE(x.observation == y.observation);
    REQUIRE(x.reward == y.reward);
    REQUIRE(x.done == y.done);
  }
  // A second episode respawns the child.
  CHECK(local.reset() == remote.reset());
}

}  // TEST_SUITE
