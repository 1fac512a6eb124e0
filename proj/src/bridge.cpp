#include "teleop/bridge.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>
#include <vector>

#include "event_json.hpp"
#include "teleop/session_log.hpp"

namespace teleop {

using detail::json;

namespace {

constexpr std::size_t kMaxFrame = 1 << 20;

template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  // Waits for room; gives up when `cancel` is raised.
  bool pushWait(T item, const std::atomic<bool>& cancel) {
    std::unique_lock lock(mutex_);
    while (items_.size() >= capacity_) {
      if (cancel) return false;
      space_.wait_for(lock, std::chrono::milliseconds(10));
    }
    items_.push_back(std::move(item));
    return true;
  }

  void pushDropOldest(T item) {
    std::lock_guard lock(mutex_);
    if (items_.size() >= capacity_) items_.pop_front();
    items_.push_back(std::move(item));
  }

  std::vector<T> drain() {
    std::vector<T> out;
    {
      std::lock_guard lock(mutex_);
      out.assign(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
      items_.clear();
    }
    space_.notify_all();
    return out;
  }

 private:
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable space_;
  std::deque<T> items_;
};

bool sendAll(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

// Pops one complete frame off the front of `buffer`. Throws on oversize.
std::optional<std::string> takeFrame(std::string& buffer) {
  if (buffer.size() < 4) return std::nullopt;
  const auto* b = reinterpret_cast<const unsigned char*>(buffer.data());
  const std::size_t len = (std::size_t{b[0]} << 24) | (std::size_t{b[1]} << 16) | (std::size_t{b[2]} << 8) | b[3];
  if (len > kMaxFrame) throw std::length_error("frame too large");
  if (buffer.size() < 4 + len) return std::nullopt;
  std::string payload = buffer.substr(4, len);
  buffer.erase(0, 4 + len);
  return payload;
}

bool isEventKind(const std::string& kind) {
  return kind == "hand_pose" || kind == "keypoints" || kind == "pedal" || kind == "coupling_toggle" ||
         kind == "template" || kind == "force";
}

json vecJson(const VecX& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json snapshotJson(const TeleopSystem& system) {
  const SimWorld& sim = system.sim();
  const SimState& st = sim.state();
  const TeleopSession& session = system.session();
  json arms = json::array();
  for (Arm arm : kArms) {
    const ArmSimState& s = st.arm(arm);
    const Wrench& w = system.estimatedWrench(arm);
    arms.push_back({{"arm", toString(arm)},
                    {"q", vecJson(s.q.angles)},
                    {"qd", vecJson(s.qd)},
                    {"ee", detail::poseToJson(sim.eePose(arm))},
                    {"commanded", detail::poseToJson(system.commanded(arm))},
                    {"hand", vecJson(s.hand.angles)},
                    {"template", s.active_template},
                    {"clutched", session.state().arm(arm).engaged},
                    {"wrench_estimate", {{"force", detail::vecToJson(w.force)}, {"torque", detail::vecToJson(w.torque)}}},
                    {"contact_force", detail::vecToJson(s.contact.force)},
                    {"in_contact", s.in_contact},
                    {"command_torque", vecJson(system.commandTorque(arm))}});
  }
  return {{"kind", "snapshot"},
          {"clock", st.clock},
          {"tick", system.ticks()},
          {"coupling", session.coupling()},
          {"pedals", {session.state().pedal_down[0], session.state().pedal_down[1]}},
          {"templates", system.templates().names()},
          {"arms", std::move(arms)},
          {"metrics", {{"bag_compression", st.bag_compression}}}};
}

class BridgeServer {
 public:
  BridgeServer(int port, json welcome) : welcome_(std::move(welcome)) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw StartupError(std::string("socket: ") + std::strerror(errno));
    const int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd_, 1) < 0) {
      const std::string reason = std::strerror(errno);
      ::close(fd_);
      throw StartupError("cannot listen on port " + std::to_string(port) + ": " + reason);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  ~BridgeServer() {
    stop();
    ::close(fd_);
  }

  int port() const { return port_; }
  void start() { thread_ = std::thread([this] { run(); }); }
  void stop() {
    quit_ = true;
    if (thread_.joinable()) thread_.join();
  }

  BoundedQueue<SessionEvent> inbound{1024};
  BoundedQueue<json> outbound{8};
  std::atomic<bool> client_finished{false};

 private:
  void run() {
    while (!quit_) {
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, 20) <= 0) continue;
      const int client = ::accept(fd_, nullptr, nullptr);
      if (client < 0) continue;
      const int one = 1;
      ::setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      timeval tv{1, 0};
      ::setsockopt(client, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
      serve(client);
      ::close(client);
      client_finished = true;
      return;
    }
  }

  bool sendMessage(int fd, json msg) {
    msg["seq"] = ++out_seq_;
    return sendAll(fd, encodeFrame(msg.dump()));
  }

  void closeWith(int fd, const std::string& reason) {
    sendMessage(fd, {{"kind", "close"}, {"reason", reason}});
    ::shutdown(fd, SHUT_RDWR);
  }

  // Returns a close reason, or empty to keep going.
  std::string handle(int fd, const std::string& payload) {
    json j;
    try {
      j = json::parse(payload);
    } catch (const json::exception&) {
      return "malformed";
    }
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) return "malformed";
    if (!j.contains("seq") || !j["seq"].is_number_integer()) return "bad-sequence";
    const auto seq = j["seq"].get<std::int64_t>();
    if (last_in_seq_ && seq <= *last_in_seq_) return "bad-sequence";
    last_in_seq_ = seq;

    const std::string kind = j["kind"].get<std::string>();
    if (!handshake_) {
      if (kind != "hello") return "bad-handshake";
      if (!j.contains("version") || j["version"] != kBridgeVersion) return "unsupported-version";
      handshake_ = true;
      outbound.drain();
      return sendMessage(fd, welcome_) ? "" : "gone";
    }
    if (kind == "bye") return "bye";
    if (!isEventKind(kind)) return "unknown-kind";
    j.erase("seq");
    if (!j.contains("t") || !j["t"].is_number()) j["t"] = 0.0;
    SessionEvent ev;
    try {
      ev = detail::eventFromJson(j);
    } catch (const Error&) {
      return "malformed";
    }
    return inbound.pushWait(std::move(ev), quit_) ? "" : "shutdown";
  }

  void serve(int fd) {
    std::string buffer;
    char chunk[4096];
    while (true) {
      if (quit_) {
        closeWith(fd, "shutdown");
        return;
      }
      if (handshake_)
        for (json& snap : outbound.drain())
          if (!sendMessage(fd, std::move(snap))) return;

      pollfd p{fd, POLLIN, 0};
      if (::poll(&p, 1, 5) <= 0) continue;
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n <= 0) return;
      buffer.append(chunk, static_cast<std::size_t>(n));
      try {
        while (auto frame = takeFrame(buffer)) {
          const std::string reason = handle(fd, *frame);
          if (reason == "gone") return;
          if (!reason.empty()) {
            closeWith(fd, reason);
            return;
          }
        }
      } catch (const std::length_error&) {
        closeWith(fd, "malformed");
        return;
      }
    }
  }

  int fd_ = -1;
  int port_ = 0;
  json welcome_;
  std::thread thread_;
  std::atomic<bool> quit_{false};
  bool handshake_ = false;
  std::optional<std::int64_t> last_in_seq_;
  std::int64_t out_seq_ = 0;
};

}  // namespace

std::string encodeFrame(const std::string& payload) {
  const auto len = static_cast<std::uint32_t>(payload.size());
  std::string out(4, '\0');
  out[0] = static_cast<char>((len >> 24) & 0xff);
  out[1] = static_cast<char>((len >> 16) & 0xff);
  out[2] = static_cast<char>((len >> 8) & 0xff);
  out[3] = static_cast<char>(len & 0xff);
  return out + payload;
}

LiveResult runLive(const RunConfig& config, const LiveOptions& options) {
  namespace fs = std::filesystem;
  TeleopSystem system(config, loadAssets(config));

  const fs::path out_dir = config.output_dir.empty() ? fs::path(".") : fs::path(config.output_dir);
  fs::create_directories(out_dir);
  LiveResult result;
  result.session_path =
      options.session_path.empty() ? (out_dir / "live_session.log").string() : options.session_path;
  SessionWriter writer(result.session_path);
  std::ofstream state_log(out_dir / "state.log");
  if (!state_log) throw ConfigurationError("cannot write into '" + out_dir.string() + "'");
  system.setStateLog(&state_log);

  int port = 0;
  if (config.mode)
    if (const auto* live = std::get_if<LiveMode>(&*config.mode)) port = live->port;

  json pedals;
  for (PedalId id : {PedalId::Left, PedalId::Right}) pedals[toString(id)] = toString(config.pedals.action(id));
  const json welcome{{"kind", "welcome"},
                     {"version", kBridgeVersion},
                     {"scenario", system.metrics().scenario},
                     {"templates", system.templates().names()},
                     {"pedals", pedals},
                     {"control_rate_hz", config.control_rate_hz},
                     {"snapshot_rate_hz", config.snapshot_rate_hz}};

  BridgeServer server(port, welcome);
  if (options.on_listening) options.on_listening(server.port());
  server.start();

  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(config.dt()));
  auto deadline = clock::now();
  std::size_t snapshots = 0;
  while (true) {
    const double t = system.time();
    // read before draining so nothing the client sent before leaving is lost
    const bool done = (options.stop && options.stop->load()) || server.client_finished ||
                      (options.max_duration && t >= *options.max_duration);
    for (SessionEvent& ev : server.inbound.drain()) {
      ev.t = t;
      // apply exactly what a replay of the log will read back
      const SessionEvent logged = decodeEvent(encodeEvent(ev));
      writer.append(logged);
      system.apply(logged);
    }
    if (done) {
      writer.append(SessionEvent{t, EndOfSession{}});
      break;
    }
    system.tick();

    const auto due = static_cast<std::size_t>(
        std::floor(static_cast<double>(system.ticks()) * config.snapshot_rate_hz / config.control_rate_hz));
    if (due > snapshots) {
      snapshots = due;
      server.outbound.pushDropOldest(snapshotJson(system));
    }

    deadline += period;
    const auto now = clock::now();
    if (deadline > now) std::this_thread::sleep_until(deadline);
    else if (now - deadline > std::chrono::seconds(1)) deadline = now;
  }
  server.stop();

  result.metrics = system.metrics();
  writeRunOutputs(out_dir.string(), result.metrics);
  return result;
}

BridgeClient::BridgeClient(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
    throw StartupError("cannot resolve '" + host + "'");
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const bool ok = fd_ >= 0 && ::connect(fd_, res->ai_addr, res->ai_addrlen) == 0;
  ::freeaddrinfo(res);
  if (!ok) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
    throw StartupError("cannot connect to " + host + ":" + std::to_string(port));
  }
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

BridgeClient::~BridgeClient() { close(); }

void BridgeClient::send(const std::string& payload) {
  if (fd_ < 0 || !sendAll(fd_, encodeFrame(payload))) throw StartupError("bridge connection lost");
}

std::optional<std::string> BridgeClient::receive(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  char chunk[4096];
  while (true) {
    if (auto frame = takeFrame(buffer_)) return frame;
    if (fd_ < 0) return std::nullopt;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd p{fd_, POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) continue;
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n <= 0) {
      close();
      continue;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void BridgeClient::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

}  // namespace teleop
