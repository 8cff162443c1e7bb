#ifndef DCRL_BRIDGE_HPP_
#define DCRL_BRIDGE_HPP_

#include <sys/types.h>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "envsdk.hpp"
#include "errors.hpp"

namespace dcrl {

// Wire format: uint32 little-endian count, then `count` little-endian
// IEEE-754 binary64 values.
inline constexpr std::uint32_t kMaxMessageValues = 1024;
inline constexpr std::size_t kMessageHeaderBytes = 4;

struct FloatMessage {
  std::vector<double> values;

  std::size_t count() const { return values.size(); }
  bool operator==(const FloatMessage&) const = default;
};

// Throws kProtocol for more than kMaxMessageValues values or any NaN.
std::vector<std::uint8_t> encode_message(std::span<const double> values);

// Blocking byte stream. read_some returns 0 only at end of stream.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  virtual std::size_t read_some(std::span<std::uint8_t> buffer) = 0;
};

class MemorySource final : public ByteSource {
 public:
  explicit MemorySource(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::size_t read_some(std::span<std::uint8_t> buffer) override;

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// Reads a file descriptor; each read waits at most `timeout_ms` (negative
// waits forever) and throws kTimeout when it expires.
class FdSource final : public ByteSource {
 public:
  FdSource(int fd, int timeout_ms) : fd_(fd), timeout_ms_(timeout_ms) {}
  std::size_t read_some(std::span<std::uint8_t> buffer) override;

 private:
  int fd_;
  int timeout_ms_;
};

// Reads exactly one message. Returns nullopt when the stream ends cleanly
// at a message boundary; throws kTruncated when it ends inside a message
// and kProtocol when the count exceeds kMaxMessageValues.
std::optional<FloatMessage> decode_message(ByteSource& source);
std::optional<FloatMessage> decode_message(std::span<const std::uint8_t> bytes);

// Writes every byte of `data`. Returns false if the peer has gone away.
bool write_all(int fd, std::span<const std::uint8_t> data);

// Agent side of a simulator process: two unidirectional channels carrying
// observations (child -> agent) and actions (agent -> child) in strict
// alternation.
class BridgeSession {
 public:
  enum class State { kIdle, kAwaitingObs, kAwaitingAct, kClosed };

  struct Options {
    int handshake_timeout_ms = 30000;
    int exchange_timeout_ms = 30000;
    int teardown_grace_ms = 5000;
  };

  BridgeSession() = default;
  BridgeSession(BridgeSession&& other) noexcept;
  BridgeSession& operator=(BridgeSession&& other) noexcept;
  BridgeSession(const BridgeSession&) = delete;
  BridgeSession& operator=(const BridgeSession&) = delete;
  ~BridgeSession();

  // Starts `executable --obs-channel fd:3 --act-channel fd:4 <args...>` and
  // waits for its first observation.
  static BridgeSession spawn(const std::string& executable, const std::vector<std::string>& args,
                             Options options);
  static BridgeSession spawn(const std::string& executable,
                             const std::vector<std::string>& args) {
    return spawn(executable, args, Options{});
  }

  const FloatMessage& first_observation() const { return first_obs_; }

  // Sends `action` and returns the next observation, or nullopt once the
  // simulator has ended the episode by closing its stream cleanly.
  std::optional<FloatMessage> exchange(const FloatMessage& action);

  // Closes the action stream, waits up to teardown_grace_ms for the child
  // and kills it afterwards. Returns the raw wait status (or -1).
  int close();

  State state() const { return state_; }
  pid_t pid() const { return pid_; }

 private:
  [[noreturn]] void fail(ErrorCode code, const std::string& message);
  std::string reap_description(int grace_ms, bool* clean_exit);

  pid_t pid_ = -1;
  int obs_fd_ = -1;
  int act_fd_ = -1;
  Options options_;
  State state_ = State::kIdle;
  FloatMessage first_obs_;
};

// "fd:N" names an inherited descriptor; anything else is a filesystem path
// (e.g. a named pipe) opened for reading or writing.
int open_channel(const std::string& name, bool for_write);

// Child side: runs one episode, answering every action message with the
// next observation, then closes the observation stream. Returns 0 when the
// agent hung up or the episode ran to completion.
int serve_simulation(int obs_fd, int act_fd, const EpisodeConfig& cfg);

// Runs the simulator out of process through a bridge session, spawning a
// fresh child on every reset.
class BridgedBackend final : public SimulatorBackend {
 public:
  explicit BridgedBackend(std::string runner_path, BridgeSession::Options options = {});
  ~BridgedBackend() override;

  Observation reset(const EpisodeConfig& cfg) override;
  Observation step(const HvacCommand& cmd) override;

 private:
  std::string runner_path_;
  BridgeSession::Options options_;
  std::string work_dir_;
  BridgeSession session_;
};

}  // namespace dcrl

#endif  // DCRL_BRIDGE_HPP_
