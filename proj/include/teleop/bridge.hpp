#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "teleop/errors.hpp"
#include "teleop/run_config.hpp"
#include "teleop/runner.hpp"

namespace teleop {

/// Wire protocol: each message is a 4-byte big-endian length followed by that
/// many bytes of UTF-8 JSON. Every message has "kind" and a "seq" that
/// increases strictly per sender. The client opens with
/// {"kind": "hello", "version": 1, "seq": n}; the server answers "welcome"
/// (template names, pedal mapping, rates), then streams "snapshot" messages.
/// Inbound kinds after the handshake are the session event kinds other than
/// "end" (hand_pose, keypoints, pedal, coupling_toggle, template, force)
/// plus "bye". Violations end the connection with
/// {"kind": "close", "reason": ...}; reasons are "bad-handshake",
/// "unsupported-version", "bad-sequence", "unknown-kind", "malformed",
/// "bye" and "shutdown".
inline constexpr int kBridgeVersion = 1;

/// Socket setup failure such as a port already in use.
class StartupError : public Error {
 public:
  explicit StartupError(const std::string& what) : Error("startup", what) {}
};

std::string encodeFrame(const std::string& payload);

struct LiveOptions {
  /// Called once the server listens, with the bound port.
  std::function<void(int)> on_listening;
  /// Set from outside to end the run at the next tick.
  const std::atomic<bool>* stop = nullptr;
  /// Ends the run after this much session time even with a client attached.
  std::optional<double> max_duration;
  /// Session log destination; defaults to <output_dir>/live_session.log.
  std::string session_path;
};

struct LiveResult {
  RunMetrics metrics;
  std::string session_path;
};

/// Serves one operator at a time. The session ends when the connected client
/// leaves, on `stop`, or after `max_duration`; the recorded log replays to
/// the same state hash.
LiveResult runLive(const RunConfig& config, const LiveOptions& options = {});

/// Minimal blocking client for the bridge protocol.
class BridgeClient {
 public:
  BridgeClient(const std::string& host, int port);
  ~BridgeClient();
  BridgeClient(const BridgeClient&) = delete;
  BridgeClient& operator=(const BridgeClient&) = delete;

  void send(const std::string& payload);
  /// Next message, or nullopt on timeout or once the server has closed.
  std::optional<std::string> receive(std::chrono::milliseconds timeout);
  void close();

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace teleop
