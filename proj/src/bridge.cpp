#include "bridge.hpp"

#include <errno.h>
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <thread>

#include "config.hpp"
#include "errors.hpp"
#include "util.hpp"

extern char** environ;

namespace dcrl {

namespace {

static_assert(std::endian::native == std::endian::little,
              "wire encoding assumes a little-endian host");

constexpr int kChildObsFd = 3;
constexpr int kChildActFd = 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(bits >> (8 * i)));
}

// Reads until `buffer` is full. Returns bytes read (< size only at EOF).
std::size_t read_full(ByteSource& source, std::span<std::uint8_t> buffer) {
  std::size_t got = 0;
  while (got < buffer.size()) {
    const std::size_t n = source.read_some(buffer.subspan(got));
    if (n == 0) break;
    got += n;
  }
  return got;
}

std::string describe_status(int status) {
  if (WIFEXITED(status)) return fmt::format("exit code {}", WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return fmt::format("killed by signal {}", WTERMSIG(status));
  return fmt::format("wait status {}", status);
}

// Polls waitpid until the child exits or `timeout_ms` elapses.
std::optional<int> wait_child(pid_t pid, int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (true) {
    int status = 0;
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) return status;
    if (r < 0 && errno != EINTR) return std::nullopt;
    if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
}

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

Observation observation_from(const FloatMessage& msg) {
  if (msg.count() != std::size_t(kObservationSize)) {
    throw Error(ErrorCode::kProtocol,
                fmt::format("observation message has {} values, expected {}", msg.count(),
                            kObservationSize));
  }
  std::array<double, kObservationSize> v{};
  std::copy(msg.values.begin(), msg.values.end(), v.begin());
  return Observation::from_array(v);
}

}  // namespace

std::vector<std::uint8_t> encode_message(std::span<const double> values) {
  if (values.size() > kMaxMessageValues) {
    throw Error(ErrorCode::kProtocol, fmt::format("message of {} values exceeds limit {}",
                                                  values.size(), kMaxMessageValues));
  }
  std::vector<std::uint8_t> out;
  out.reserve(kMessageHeaderBytes + 8 * values.size());
  put_u32(out, std::uint32_t(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) {
      throw Error(ErrorCode::kProtocol, fmt::format("NaN at message index {}", i));
    }
    put_f64(out, values[i]);
  }
  return out;
}

std::size_t MemorySource::read_some(std::span<std::uint8_t> buffer) {
  const std::size_t n = std::min(buffer.size(), bytes_.size() - pos_);
  std::memcpy(buffer.data(), bytes_.data() + pos_, n);
  pos_ += n;
  return n;
}

std::size_t FdSource::read_some(std::span<std::uint8_t> buffer) {
  while (true) {
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, timeout_ms_);
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIo, fmt::format("poll failed: {}", std::strerror(errno)));
    }
    if (ready == 0) {
      throw Error(ErrorCode::kTimeout,
                  fmt::format("no data from peer within {} ms", timeout_ms_));
    }
    const ssize_t n = ::read(fd_, buffer.data(), buffer.size());
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      if (errno == ECONNRESET) return 0;
      throw Error(ErrorCode::kIo, fmt::format("read failed: {}", std::strerror(errno)));
    }
    return std::size_t(n);
  }
}

std::optional<FloatMessage> decode_message(ByteSource& source) {
  std::uint8_t header[kMessageHeaderBytes];
  const std::size_t got = read_full(source, header);
  if (got == 0) return std::nullopt;
  if (got < kMessageHeaderBytes) {
    throw Error(ErrorCode::kTruncated,
                fmt::format("stream closed after {} of {} header bytes", got, kMessageHeaderBytes));
  }
  std::uint32_t count = 0;
  for (int i = 0; i < 4; ++i) count |= std::uint32_t(header[i]) << (8 * i);
  if (count > kMaxMessageValues) {
    throw Error(ErrorCode::kProtocol,
                fmt::format("message count {} exceeds limit {}", count, kMaxMessageValues));
  }
  std::vector<std::uint8_t> payload(std::size_t(count) * 8);
  const std::size_t body = read_full(source, payload);
  if (body < payload.size()) {
    throw Error(ErrorCode::kTruncated,
                fmt::format("stream closed after {} of {} payload bytes", body, payload.size()));
  }
  FloatMessage msg;
  msg.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(payload[8 * i + std::size_t(b)]) << (8 * b);
    msg.values[i] = std::bit_cast<double>(bits);
  }
  return msg;
}

std::optional<FloatMessage> decode_message(std::span<const std::uint8_t> bytes) {
  MemorySource source(bytes);
  return decode_message(source);
}

bool write_all(int fd, std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    // send() on sockets avoids SIGPIPE; fall back to write() for pipes.
    ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == ENOTSOCK) n = ::write(fd, data.data() + sent, data.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EPIPE || errno == ECONNRESET) return false;
      throw Error(ErrorCode::kIo, fmt::format("write failed: {}", std::strerror(errno)));
    }
    sent += std::size_t(n);
  }
  return true;
}

BridgeSession::BridgeSession(BridgeSession&& other) noexcept { *this = std::move(other); }

BridgeSession& BridgeSession::operator=(BridgeSession&& other) noexcept {
  if (this != &other) {
    close();
    pid_ = std::exchange(other.pid_, -1);
    obs_fd_ = std::exchange(other.obs_fd_, -1);
    act_fd_ = std::exchange(other.act_fd_, -1);
    options_ = other.options_;
    state_ = std::exchange(other.state_, State::kClosed);
    first_obs_ = std::move(other.first_obs_);
  }
  return *this;
}

BridgeSession::~BridgeSession() { close(); }

BridgeSession BridgeSession::spawn(const std::string& executable,
                                   const std::vector<std::string>& args, Options options) {
  int obs_pair[2];
  int act_pair[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, obs_pair) != 0) {
    throw Error(ErrorCode::kSpawn, fmt::format("socketpair failed: {}", std::strerror(errno)));
  }
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, act_pair) != 0) {
    ::close(obs_pair[0]);
    ::close(obs_pair[1]);
    throw Error(ErrorCode::kSpawn, fmt::format("socketpair failed: {}", std::strerror(errno)));
  }
  // Child ends are moved above the target descriptors so dup2 never aliases.
  int child_obs = ::fcntl(obs_pair[1], F_DUPFD_CLOEXEC, 10);
  int child_act = ::fcntl(act_pair[1], F_DUPFD_CLOEXEC, 10);
  ::close(obs_pair[1]);
  ::close(act_pair[1]);

  std::vector<std::string> argv_store = {executable, "--obs-channel",
                                         fmt::format("fd:{}", kChildObsFd), "--act-channel",
                                         fmt::format("fd:{}", kChildActFd)};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  argv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, child_obs, kChildObsFd);
  posix_spawn_file_actions_adddup2(&actions, child_act, kChildActFd);

  BridgeSession session;
  session.options_ = options;
  session.obs_fd_ = obs_pair[0];
  session.act_fd_ = act_pair[0];
  const int rc = ::posix_spawn(&session.pid_, executable.c_str(), &actions, nullptr, argv.data(),
                               environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(child_obs);
  ::close(child_act);
  if (rc != 0) {
    session.pid_ = -1;
    session.state_ = State::kClosed;
    throw Error(ErrorCode::kSpawn,
                fmt::format("cannot start '{}': {}", executable, std::strerror(rc)));
  }

  session.state_ = State::kAwaitingObs;
  FdSource source(session.obs_fd_, options.handshake_timeout_ms);
  std::optional<FloatMessage> first;
  try {
    first = decode_message(source);
  } catch (const Error& e) {
    session.fail(e.code(), fmt::format("handshake with '{}': {}", executable, e.what()));
  }
  if (!first) {
    bool clean = false;
    const std::string how = session.reap_description(options.teardown_grace_ms, &clean);
    session.state_ = State::kClosed;
    throw Error(ErrorCode::kChildExit,
                fmt::format("'{}' exited before its first observation ({})", executable, how));
  }
  session.first_obs_ = std::move(*first);
  session.state_ = State::kAwaitingAct;
  return session;
}

std::optional<FloatMessage> BridgeSession::exchange(const FloatMessage& action) {
  if (state_ != State::kAwaitingAct) {
    throw Error(ErrorCode::kContract, "exchange() requires a session awaiting an action");
  }
  const auto bytes = encode_message(action.values);
  // A failed write means the child is gone; the read below reports how.
  write_all(act_fd_, bytes);
  state_ = State::kAwaitingObs;

  FdSource source(obs_fd_, options_.exchange_timeout_ms);
  std::optional<FloatMessage> obs;
  try {
    obs = decode_message(source);
  } catch (const Error& e) {
    fail(e.code(), e.what());
  }
  if (!obs) {
    bool clean = false;
    const std::string how = reap_description(options_.teardown_grace_ms, &clean);
    state_ = State::kClosed;
    if (clean) return std::nullopt;
    throw Error(ErrorCode::kChildExit, fmt::format("simulator process died ({})", how));
  }
  state_ = State::kAwaitingAct;
  return obs;
}

std::string BridgeSession::reap_description(int grace_ms, bool* clean_exit) {
  close_fd(act_fd_);
  *clean_exit = false;
  std::string how = "not running";
  if (pid_ > 0) {
    auto status = wait_child(pid_, grace_ms);
    if (!status) {
      ::kill(pid_, SIGKILL);
      status = wait_child(pid_, 1000);
      how = "killed after grace period";
    } else {
      how = describe_status(*status);
      *clean_exit = WIFEXITED(*status) && WEXITSTATUS(*status) == 0;
    }
    pid_ = -1;
  }
  close_fd(obs_fd_);
  return how;
}

void BridgeSession::fail(ErrorCode code, const std::string& message) {
  // Kill immediately: the stream is no longer in a known state.
  if (pid_ > 0) ::kill(pid_, SIGKILL);
  bool clean = false;
  const std::string how = reap_description(1000, &clean);
  state_ = State::kClosed;
  throw Error(code, fmt::format("{} (child: {})", message, how));
}

int BridgeSession::close() {
  if (state_ == State::kIdle || state_ == State::kClosed) return -1;
  close_fd(act_fd_);
  int result = -1;
  if (pid_ > 0) {
    auto status = wait_child(pid_, options_.teardown_grace_ms);
    if (!status) {
      ::kill(pid_, SIGKILL);
      status = wait_child(pid_, 1000);
    }
    result = status.value_or(-1);
    pid_ = -1;
  }
  close_fd(obs_fd_);
  state_ = State::kClosed;
  return result;
}

int open_channel(const std::string& name, bool for_write) {
  if (name.rfind("fd:", 0) == 0) {
    std::int64_t fd = -1;
    if (!parse_int(name.substr(3), fd) || fd < 0 || ::fcntl(int(fd), F_GETFD) < 0) {
      throw Error(ErrorCode::kConfig, fmt::format("invalid channel descriptor '{}'", name));
    }
    return int(fd);
  }
  const int fd = ::open(name.c_str(), (for_write ? O_WRONLY : O_RDONLY) | O_CLOEXEC);
  if (fd < 0) {
    throw Error(ErrorCode::kIo,
                fmt::format("cannot open channel '{}': {}", name, std::strerror(errno)));
  }
  return fd;
}

int serve_simulation(int obs_fd, int act_fd, const EpisodeConfig& cfg) {
  cfg.validate();
  auto send = [&](const SimState& s) {
    const auto obs = sim_observe(s).to_array();
    return write_all(obs_fd, encode_message(obs));
  };
  SimState state = sim_reset(cfg.sim, cfg.weather);
  if (!send(state)) return 0;

  FdSource actions(act_fd, -1);
  const std::int64_t steps = cfg.steps_per_episode();
  for (std::int64_t k = 0; k < steps; ++k) {
    const auto msg = decode_message(actions);
    if (!msg) return 0;
    if (msg->count() != std::size_t(kActionSize)) {
      throw Error(ErrorCode::kProtocol, fmt::format("action message has {} values, expected {}",
                                                    msg->count(), kActionSize));
    }
    const HvacCommand cmd{msg->values[0], msg->values[1], msg->values[2], msg->values[3]};
    state = sim_step(state, cmd, cfg.weather, cfg.sim);
    if (!send(state)) return 0;
  }
  // End of episode: close our stream and wait for the agent to hang up.
  ::close(obs_fd);
  while (decode_message(actions)) {
  }
  return 0;
}

BridgedBackend::BridgedBackend(std::string runner_path, BridgeSession::Options options)
    : runner_path_(std::move(runner_path)), options_(options) {
  std::string tmpl = (std::filesystem::temp_directory_path() / "dcrl-bridge-XXXXXX").string();
  if (::mkdtemp(tmpl.data()) == nullptr) {
    throw Error(ErrorCode::kIo, fmt::format("mkdtemp failed: {}", std::strerror(errno)));
  }
  work_dir_ = tmpl;
}

BridgedBackend::~BridgedBackend() {
  session_.close();
  std::error_code ec;
  std::filesystem::remove_all(work_dir_, ec);
}

Observation BridgedBackend::reset(const EpisodeConfig& cfg) {
  session_.close();
  const std::string config_path = work_dir_ + "/episode.ini";
  const std::string weather_path = work_dir_ + "/weather.csv";
  write_text_file(config_path, episode_to_ini(cfg).to_string());
  weather_save_csv(cfg.weather, weather_path);
  session_ = BridgeSession::spawn(runner_path_,
                                  {"--config", config_path, "--weather", weather_path}, options_);
  return observation_from(session_.first_observation());
}

Observation BridgedBackend::step(const HvacCommand& cmd) {
  const FloatMessage action{{cmd.setpoint_west, cmd.setpoint_east, cmd.flow_west, cmd.flow_east}};
  const auto obs = session_.exchange(action);
  if (!obs) throw Error(ErrorCode::kContract, "simulator ended the episode early");
  return observation_from(*obs);
}

}  // namespace dcrl
