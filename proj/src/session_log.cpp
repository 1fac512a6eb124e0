#include "teleop/session_log.hpp"

#include <istream>
#include <ostream>

#include "event_json.hpp"
#include "teleop/errors.hpp"

namespace teleop {
namespace detail {

json vecToJson(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vecFromJson(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json poseToJson(const Posed& p) {
  const auto& q = p.rotation.quaternion();
  return json{{"p", vecToJson(p.position)}, {"q", json::array({q.w(), q.x(), q.y(), q.z()})}};
}

Posed poseFromJson(const json& j) {
  const json& q = j.at("q");
  if (!q.is_array() || q.size() != 4) throw ParseError("expected quaternion [w, x, y, z]");
  return Posed(Rotationd(Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                                            q[3].get<double>())),
               vecFromJson(j.at("p")));
}

namespace {

json viewToJson(const CameraView& v) {
  json out{{"camera", v.camera}, {"axis", vecToJson(v.optical_axis)}};
  if (v.keypoints) {
    json pts = json::array();
    for (const auto& p : v.keypoints->points) {
      pts.push_back(p.x());
      pts.push_back(p.y());
      pts.push_back(p.z());
    }
    out["points"] = std::move(pts);
  } else {
    out["points"] = nullptr;
  }
  return out;
}

CameraView viewFromJson(const json& j) {
  CameraView v;
  v.camera = j.at("camera").get<int>();
  v.optical_axis = vecFromJson(j.at("axis"));
  if (std::abs(v.optical_axis.norm() - 1.0) > 1e-9) throw ParseError("camera optical axis must be unit length");
  const json& pts = j.at("points");
  if (!pts.is_null()) {
    if (!pts.is_array() || pts.size() != 3 * KeypointSet::kCount)
      throw ParseError("keypoint view must carry 63 coordinates");
    KeypointSet k;
    for (int i = 0; i < KeypointSet::kCount; ++i)
      k[i] = Vec3(pts[3 * i].get<double>(), pts[3 * i + 1].get<double>(), pts[3 * i + 2].get<double>());
    v.keypoints = k;
  }
  return v;
}

}  // namespace

json eventToJson(const SessionEvent& event) {
  json j{{"t", event.t}};
  std::visit(
      [&j](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, HandPoseSample>) {
          j["kind"] = "hand_pose";
          j["arm"] = toString(e.arm);
          j["pose"] = poseToJson(e.pose);
        } else if constexpr (std::is_same_v<T, KeypointFrame>) {
          j["kind"] = "keypoints";
          j["hand"] = toString(e.hand);
          j["views"] = json::array({viewToJson(e.views[0]), viewToJson(e.views[1])});
        } else if constexpr (std::is_same_v<T, PedalEdge>) {
          j["kind"] = "pedal";
          j["pedal"] = toString(e.pedal);
          j["edge"] = e.down ? "down" : "up";
        } else if constexpr (std::is_same_v<T, CouplingToggle>) {
          j["kind"] = "coupling_toggle";
        } else if constexpr (std::is_same_v<T, TemplateRequest>) {
          j["kind"] = "template";
          j["hand"] = toString(e.hand);
          j["name"] = e.name;
        } else if constexpr (std::is_same_v<T, ForceCommand>) {
          j["kind"] = "force";
          j["arm"] = toString(e.arm);
          j["force"] = vecToJson(e.force);
          j["enabled"] = e.enabled;
        } else {
          j["kind"] = "end";
        }
      },
      event.payload);
  return j;
}

SessionEvent eventFromJson(const json& j) {
  try {
    SessionEvent ev;
    ev.t = j.at("t").get<double>();
    if (!std::isfinite(ev.t)) throw ParseError("timestamp is not finite");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "hand_pose") {
      ev.payload = HandPoseSample{parseArm(j.at("arm").get<std::string>()), poseFromJson(j.at("pose"))};
    } else if (kind == "keypoints") {
      const json& views = j.at("views");
      if (!views.is_array() || views.size() != 2) throw ParseError("keypoint frame needs exactly two views");
      ev.payload = KeypointFrame{parseArm(j.at("hand").get<std::string>()),
                                 {viewFromJson(views[0]), viewFromJson(views[1])}};
    } else if (kind == "pedal") {
      const std::string edge = j.at("edge").get<std::string>();
      if (edge != "down" && edge != "up") throw ParseError("pedal edge must be 'down' or 'up'");
      ev.payload = PedalEdge{parsePedal(j.at("pedal").get<std::string>()), edge == "down"};
    } else if (kind == "coupling_toggle") {
      ev.payload = CouplingToggle{};
    } else if (kind == "template") {
      ev.payload = TemplateRequest{parseArm(j.at("hand").get<std::string>()), j.at("name").get<std::string>()};
    } else if (kind == "force") {
      ev.payload = ForceCommand{parseArm(j.at("arm").get<std::string>()), vecFromJson(j.at("force")),
                                j.value("enabled", true)};
    } else if (kind == "end") {
      ev.payload = EndOfSession{};
    } else {
      throw ParseError("unknown event kind '" + kind + "'");
    }
    return ev;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed event: ") + e.what());
  }
}

}  // namespace detail

std::string encodeEvent(const SessionEvent& event) { return detail::eventToJson(event).dump(); }

SessionEvent decodeEvent(const std::string& line, std::size_t line_no) {
  try {
    return detail::eventFromJson(detail::json::parse(line));
  } catch (const detail::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
  } catch (const ParseError& e) {
    if (e.line() != 0 || line_no == 0) throw;
    throw ParseError(e.what(), line_no);
  } catch (const Error& e) {
    throw ParseError(e.what(), line_no);
  }
}

std::vector<SessionEvent> readSession(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty session log, expected header", 1);
  if (line.rfind("format:", 0) != 0) throw ParseError("expected 'format: 1' header", 1);
  if (line != kSessionHeader) throw UnsupportedFormatError("unsupported session log " + line);

  std::vector<SessionEvent> events;
  std::size_t line_no = 1;
  double last_t = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    SessionEvent ev = decodeEvent(line, line_no);
    if (ev.t < last_t) throw ParseError("timestamps must be non-decreasing", line_no);
    last_t = ev.t;
    events.push_back(std::move(ev));
  }
  return events;
}

std::vector<SessionEvent> loadSession(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open session '" + path + "'");
  return readSession(in);
}

void writeSession(std::ostream& out, const std::vector<SessionEvent>& events) {
  out << kSessionHeader << '\n';
  for (const auto& e : events) out << encodeEvent(e) << '\n';
}

void saveSession(const std::string& path, const std::vector<SessionEvent>& events) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write session '" + path + "'");
  writeSession(out, events);
}

SessionWriter::SessionWriter(const std::string& path) : out_(path) {
  if (!out_) throw ConfigurationError("cannot write session '" + path + "'");
  out_ << kSessionHeader << '\n';
  out_.flush();
}

void SessionWriter::append(const SessionEvent& event) {
  out_ << encodeEvent(event) << '\n';
  out_.flush();
}

}  // namespace teleop
