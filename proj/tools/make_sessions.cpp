// Writes the scripted operator sessions shipped under data/sessions.
//
// Keypoints are synthesized from the robot hand itself: for a desired joint
// vector q the human fingertip i sits at wrist + R (f_i(q) / alpha), so the
// retargeter's optimum is q. The two cameras differ by a small scale error
// and every coordinate is rounded to 0.1 mm, as a tracker would report it.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>

#include <CLI11.hpp>

#include "teleop/grasp_templates.hpp"
#include "teleop/hand_retarget.hpp"
#include "teleop/session_log.hpp"

namespace {

using namespace teleop;

constexpr double kAlpha = 1.5;
constexpr double kKeypointRate = 30.0;
constexpr double kPoseRate = 50.0;

struct Script {
  std::vector<SessionEvent> events;

  template <typename T>
  void add(double t, T payload) {
    events.push_back(SessionEvent{t, std::move(payload)});
  }
  void finish(double t_end) {
    std::stable_sort(events.begin(), events.end(),
                     [](const SessionEvent& a, const SessionEvent& b) { return a.t < b.t; });
    add(t_end, EndOfSession{});
  }
};

double round4(double x) { return std::round(x * 1e4) / 1e4; }

// Human palm landmarks in the palm frame.
const std::array<Vec3, 5> kBases = {Vec3(0.03, -0.03, -0.01), Vec3(0.09, -0.025, 0.0), Vec3(0.095, 0.0, 0.0),
                                    Vec3(0.09, 0.015, 0.0), Vec3(0.08, 0.035, 0.0)};

KeypointSet keypoints(const Posed& wrist, const std::vector<Vec3>& robot_tips, double scale) {
  KeypointSet k;
  const auto place = [&](const Vec3& palm) {
    const Vec3 w = wrist.rotation * Vec3(scale * palm) + wrist.position;
    return Vec3(round4(w.x()), round4(w.y()), round4(w.z()));
  };
  k[KeypointSet::kWrist] = place(Vec3::Zero());
  for (int f = 0; f < 5; ++f) {
    const Vec3 tip = robot_tips[static_cast<std::size_t>(f)] / kAlpha;
    const Vec3& base = kBases[static_cast<std::size_t>(f)];
    for (int j = 0; j < 4; ++j) k[1 + 4 * f + j] = place(base + (tip - base) * (j / 3.0));
  }
  return k;
}

KeypointFrame frame(Arm hand, const Posed& wrist, const HandModel& model, const JointVectord& q) {
  const std::vector<Vec3> tips = model.fingertipVectors(q);
  KeypointFrame f;
  f.hand = hand;
  f.views[0] = CameraView{0, Vec3(0.0, 0.0, -1.0), keypoints(wrist, tips, 1.0)};
  f.views[1] = CameraView{1, Vec3(-0.8, 0.0, -0.6), keypoints(wrist, tips, 1.002)};
  return f;
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

struct Squeeze {
  double ramp = 1.2;
  double hold = 1.0;
  double release = 0.8;
  double settle = 0.4;

  double length() const { return ramp + hold + release + settle; }
  // Closure of a squeeze of depth `d` at time `tau` after its start: a linear
  // ramp to 97% of d, a slow creep to d while holding, then a linear release.
  double closure(double tau, double d) const {
    if (tau <= 0.0) return 0.0;
    if (tau < ramp) return 0.97 * d * tau / ramp;
    if (tau < ramp + hold) return d * (0.97 + 0.03 * (tau - ramp) / hold);
    if (tau < ramp + hold + release) return d * (1.0 - (tau - ramp - hold) / release);
    return 0.0;
  }
};

JointVectord blend(const HandModel& model, const JointVectord& a, const JointVectord& b, double c) {
  return model.make(a.angles + c * (b.angles - a.angles));
}

void clutchIn(Script& s, const std::array<Posed, 2>& hands) {
  s.add(0.0, HandPoseSample{Arm::Left, hands[0]});
  s.add(0.0, HandPoseSample{Arm::Right, hands[1]});
  s.add(0.0, PedalEdge{PedalId::Left, true});
  s.add(0.1, PedalEdge{PedalId::Left, false});
}

// Breath every 6 s; `depths` lists each squeeze depth (1 = full closure).
Script bvmSession(const HandModel& model, const GraspTemplateLibrary& lib, const std::vector<Arm>& hands,
                  const std::vector<double>& depths) {
  Script s;
  const std::array<Posed, 2> wrists = {Posed(Rotationd::identity(), Vec3(0.35, 0.25, 0.95)),
                                       Posed(Rotationd::identity(), Vec3(0.35, -0.25, 0.95))};
  clutchIn(s, wrists);
  const JointVectord& open = lib.at("bag-open").q;
  const JointVectord& closed = lib.at("bag-closed").q;
  const Squeeze sq;
  const double period = 6.0;
  const double first = 1.0;

  for (std::size_t i = 0; i < depths.size(); ++i) {
    const double start = first + period * static_cast<double>(i);
    const int frames = static_cast<int>(std::ceil(sq.length() * kKeypointRate));
    for (int k = -3; k <= frames; ++k) {
      const double tau = k / kKeypointRate;
      const double c = sq.closure(tau, depths[i]);
      for (Arm a : hands) {
        // the squeezing hand sinks 1 cm with the bag
        Posed wrist = wrists[index(a)];
        wrist.position.z() -= 0.01 * c;
        s.add(start + tau, frame(a, wrist, model, blend(model, open, closed, c)));
        if (k % 2 == 0) s.add(start + tau, HandPoseSample{a, wrist});
      }
    }
  }
  s.finish(first + period * static_cast<double>(depths.size()));
  return s;
}

Script needleSession() {
  Script s;
  const Posed left0(Rotationd::fromAxisAngle(Vec3::UnitZ(), 5.0 * std::numbers::pi / 180.0), Vec3(0.3, 0.3, 0.9));
  const Posed right0(Rotationd::identity(), Vec3(0.3, -0.3, 0.9));
  clutchIn(s, {left0, right0});
  s.add(0.2, TemplateRequest{Arm::Left, "syringe"});
  s.add(0.2, TemplateRequest{Arm::Right, "probe"});
  s.add(0.5, ForceCommand{Arm::Right, Vec3(0.0, 0.0, -5.0), true});

  // tilt the needle hand a further 20 degrees about its own y axis, then
  // advance 1 cm/s along the tilted needle axis
  const double tilt = 20.0 * std::numbers::pi / 180.0;
  const Rotationd tilted = left0.rotation * Rotationd::fromAxisAngle(Vec3::UnitY(), tilt);
  const Vec3 axis = Rotationd::fromAxisAngle(Vec3::UnitY(), 30.0 * std::numbers::pi / 180.0) * Vec3::UnitX();
  for (int k = 0; k <= static_cast<int>(9.0 * kPoseRate); ++k) {
    const double t = 1.0 + k / kPoseRate;
    Posed hand = left0;
    if (t <= 3.0) {
      hand.rotation = left0.rotation * Rotationd::fromAxisAngle(Vec3::UnitY(), tilt * smoothstep((t - 1.0) / 2.0));
    } else {
      hand.rotation = tilted;
      hand.position += 0.01 * std::max(0.0, t - 5.0) * axis;
    }
    s.add(t, HandPoseSample{Arm::Left, hand});
  }
  s.finish(11.0);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the scripted operator sessions"};
  std::string data_dir = "data";
  std::string out_dir;
  app.add_option("--data", data_dir, "Data directory holding hands/ and templates/");
  app.add_option("--out", out_dir, "Output directory (default <data>/sessions)");
  CLI11_PARSE(app, argc, argv);

  namespace fs = std::filesystem;
  if (out_dir.empty()) out_dir = (fs::path(data_dir) / "sessions").string();
  fs::create_directories(out_dir);

  try {
    const HandModel hand = loadHandModel((fs::path(data_dir) / "hands/inspire_surrogate.yaml").string());
    const GraspTemplateLibrary lib =
        loadTemplateLibrary((fs::path(data_dir) / "templates/medical_grasps.yaml").string(), hand);

    // 15 breaths, two of them shallow
    std::vector<double> single(15, 1.0);
    single[4] = 0.75;
    single[11] = 0.75;
    std::vector<double> both(15, 1.0);
    both[7] = 0.75;

    const auto write = [&](const std::string& name, const Script& s) {
      const auto path = (fs::path(out_dir) / name).string();
      saveSession(path, s.events);
      std::cout << path << ": " << s.events.size() << " events\n";
    };
    write("bvm_paper_matched.session", bvmSession(hand, lib, {Arm::Right}, single));
    write("bvm_two_hand.session", bvmSession(hand, lib, {Arm::Left, Arm::Right}, both));
    write("needle_in_plane.session", needleSession());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
