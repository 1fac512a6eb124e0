#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <filesystem>
#include <future>
#include <thread>

#include <gtest/gtest.h>
#include <json.hpp>

#include "support.hpp"
#include "teleop/bridge.hpp"

using namespace teleop;
using namespace teleop::testing;
using json = nlohmann::json;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

RunConfig liveConfig(const std::string& name) {
  RunConfig c = loadRunConfig(dataPath("configs/needle_in_plane.yaml"));
  c.mode = LiveMode{0};
  const fs::path out = fs::temp_directory_path() / ("teleop_bridge_" + std::to_string(::getpid())) / name;
  fs::remove_all(out);
  c.output_dir = out.string();
  return c;
}

// Runs the live loop on a thread and hands back the bound port.
struct LiveRun {
  std::promise<int> port_promise;
  std::future<LiveResult> result;
  std::atomic<bool> stop{false};
  int port = 0;

  LiveRun(const RunConfig& config, std::optional<double> max_duration = 20.0) {
    LiveOptions options;
    options.stop = &stop;
    options.max_duration = max_duration;
    options.on_listening = [this](int p) { port_promise.set_value(p); };
    auto port_future = port_promise.get_future();
    result = std::async(std::launch::async, [config, options] { return runLive(config, options); });
    port = port_future.get();
  }
  ~LiveRun() {
    stop = true;
    if (result.valid()) result.wait();
  }
};

json receiveJson(BridgeClient& c, std::chrono::milliseconds timeout = 2000ms) {
  const auto msg = c.receive(timeout);
  if (!msg) return json();
  return json::parse(*msg);
}

json handshake(BridgeClient& c, std::int64_t& seq) {
  c.send(json{{"kind", "hello"}, {"version", kBridgeVersion}, {"seq", seq++}}.dump());
  return receiveJson(c);
}

void sendEvent(BridgeClient& c, const SessionEvent& ev, std::int64_t& seq) {
  json j = json::parse(encodeEvent(ev));
  j["seq"] = seq++;
  c.send(j.dump());
}

json closeReason(BridgeClient& c) {
  for (int i = 0; i < 200; ++i) {
    const json m = receiveJson(c);
    if (m.is_null()) break;
    if (m["kind"] == "close") return m;
  }
  return json();
}

}  // namespace

TEST(Bridge, FrameIsBigEndianLengthPrefixed) {
  const std::string f = encodeFrame("{}");
  ASSERT_EQ(f.size(), 6u);
  EXPECT_EQ(f.substr(0, 4), std::string("\0\0\0\2", 4));
  EXPECT_EQ(encodeFrame(std::string(300, 'x')).substr(0, 4), std::string("\0\0\1\x2c", 4));
}

TEST(Bridge, IdleClientSeesSteadySnapshots) {
  LiveRun run(liveConfig("idle"));
  BridgeClient client("127.0.0.1", run.port);
  std::int64_t seq = 1;
  const json welcome = handshake(client, seq);
  ASSERT_EQ(welcome["kind"], "welcome");
  EXPECT_EQ(welcome["version"], kBridgeVersion);
  EXPECT_EQ(welcome["scenario"], "needle_in_plane");
  EXPECT_EQ(welcome["templates"].size(), 11u);
  EXPECT_EQ(welcome["pedals"]["left"], "clutch-both");

  std::vector<json> snaps;
  const auto start = std::chrono::steady_clock::now();
  while (snaps.size() < 15 && std::chrono::steady_clock::now() - start < 5s) {
    const json m = receiveJson(client);
    if (!m.is_null() && m["kind"] == "snapshot") snaps.push_back(m);
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(snaps.size(), 15u);
  EXPECT_GE(15.0 / elapsed, 20.0);  // nominally 30 Hz; loose for a loaded machine

  std::int64_t prev_seq = -1;
  for (const json& s : snaps) {
    EXPECT_GT(s["seq"].get<std::int64_t>(), prev_seq);
    prev_seq = s["seq"].get<std::int64_t>();
    ASSERT_EQ(s["arms"].size(), 2u);
    // self-contained: every field a client renders is present in each message
    for (const char* key : {"clock", "tick", "coupling", "pedals", "arms", "metrics"}) EXPECT_TRUE(s.contains(key));
    for (const json& arm : s["arms"])
      for (const char* key : {"q", "ee", "commanded", "hand", "template", "wrench_estimate", "contact_force"})
        EXPECT_TRUE(arm.contains(key)) << key;
  }
  // nothing was commanded, so the arms hold their poses
  EXPECT_EQ(snaps.front()["arms"][0]["commanded"], snaps.back()["arms"][0]["commanded"]);
  const auto q0 = snaps.front()["arms"][0]["q"].get<std::vector<double>>();
  const auto q1 = snaps.back()["arms"][0]["q"].get<std::vector<double>>();
  for (std::size_t i = 0; i < q0.size(); ++i) EXPECT_NEAR(q0[i], q1[i], 1e-9);
}

TEST(Bridge, UnknownKindClosesTheConnection) {
  LiveRun run(liveConfig("unknown"));
  BridgeClient client("127.0.0.1", run.port);
  std::int64_t seq = 1;
  ASSERT_EQ(handshake(client, seq)["kind"], "welcome");
  client.send(json{{"kind", "teleport"}, {"seq", seq++}}.dump());
  const json close = closeReason(client);
  ASSERT_FALSE(close.is_null());
  EXPECT_EQ(close["reason"], "unknown-kind");
  run.result.wait();
}

TEST(Bridge, ProtocolViolationsHaveCodedReasons) {
  {
    LiveRun run(liveConfig("handshake"));
    BridgeClient client("127.0.0.1", run.port);
    client.send(json{{"kind", "pedal"}, {"seq", 1}}.dump());
    EXPECT_EQ(closeReason(client)["reason"], "bad-handshake");
  }
  {
    LiveRun run(liveConfig("version"));
    BridgeClient client("127.0.0.1", run.port);
    client.send(json{{"kind", "hello"}, {"version", 99}, {"seq", 1}}.dump());
    EXPECT_EQ(closeReason(client)["reason"], "unsupported-version");
  }
  {
    LiveRun run(liveConfig("sequence"));
    BridgeClient client("127.0.0.1", run.port);
    std::int64_t seq = 5;
    handshake(client, seq);
    client.send(json{{"kind", "coupling_toggle"}, {"seq", 2}}.dump());
    EXPECT_EQ(closeReason(client)["reason"], "bad-sequence");
  }
  {
    LiveRun run(liveConfig("malformed"));
    BridgeClient client("127.0.0.1", run.port);
    std::int64_t seq = 1;
    handshake(client, seq);
    client.send("this is not json");
    EXPECT_EQ(closeReason(client)["reason"], "malformed");
  }
}

TEST(Bridge, PortInUseIsStartupError) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(fd, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = 0;
  ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  ASSERT_EQ(::listen(fd, 1), 0);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);

  RunConfig c = liveConfig("busy");
  c.mode = LiveMode{ntohs(addr.sin_port)};
  EXPECT_THROW(runLive(c), StartupError);
  ::close(fd);
}

TEST(Bridge, LiveSessionReplaysToTheSameHashes) {
  const RunConfig config = liveConfig("roundtrip");
  LiveRun run(config);
  {
    BridgeClient client("127.0.0.1", run.port);
    std::int64_t seq = 1;
    ASSERT_EQ(handshake(client, seq)["kind"], "welcome");
    Posed hand(Rotationd::fromAxisAngle(Vec3::UnitZ(), 0.1), Vec3(0.3, 0.3, 0.9));
    sendEvent(client, SessionEvent{0, HandPoseSample{Arm::Left, hand}}, seq);
    sendEvent(client, SessionEvent{0, PedalEdge{PedalId::Left, true}}, seq);
    std::this_thread::sleep_for(30ms);
    sendEvent(client, SessionEvent{0, PedalEdge{PedalId::Left, false}}, seq);
    for (int k = 0; k < 100; ++k) {
      hand.position += Vec3(0.0005, -0.0003, 0.0002);
      hand.rotation = hand.rotation * Rotationd::fromAxisAngle(Vec3::UnitY(), 0.002);
      sendEvent(client, SessionEvent{0, HandPoseSample{Arm::Left, hand}}, seq);
      if (k % 10 == 0) sendEvent(client, SessionEvent{0, HandPoseSample{Arm::Right, hand}}, seq);
      std::this_thread::sleep_for(5ms);
    }
    client.send(json{{"kind", "bye"}, {"seq", seq++}}.dump());
    EXPECT_EQ(closeReason(client)["reason"], "bye");
  }
  const LiveResult live = run.result.get();
  EXPECT_GT(live.metrics.ticks, 0u);
  EXPECT_EQ(live.metrics.events, 113u);

  RunConfig replay_config = config;
  replay_config.mode = ReplayMode{live.session_path};
  replay_config.output_dir = (fs::path(config.output_dir) / "replay").string();
  const RunMetrics replayed = runReplay(replay_config);
  EXPECT_EQ(replayed.ticks, live.metrics.ticks);
  EXPECT_EQ(replayed.command_hash, live.metrics.command_hash);
  EXPECT_EQ(replayed.state_hash, live.metrics.state_hash);
}
