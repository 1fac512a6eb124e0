#include "teleop/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "event_json.hpp"
#include "sha256.hpp"
#include "teleop/chain_io.hpp"
#include "teleop/errors.hpp"

namespace teleop {

using detail::json;

namespace {

// Events stamped within this of a tick boundary belong to that tick.
constexpr double kBoundarySlack = 1e-9;

json vecJson(const VecX& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

HandSide sideOf(Arm a) { return a == Arm::Left ? HandSide::Left : HandSide::Right; }

struct NeedleAcc {
  std::size_t samples = 0;
  double max_dev = 0.0, sum_dev = 0.0;
  double min_inc = std::numeric_limits<double>::infinity();
  double max_inc = -std::numeric_limits<double>::infinity();
  double sum_inc = 0.0;
};

struct ForceAcc {
  Vec3 target = Vec3::Zero();
  std::size_t samples = 0;
  double sum = 0.0, sum_sq = 0.0, max = 0.0, last = 0.0, sum_est = 0.0;
};

}  // namespace

Assets loadAssets(const RunConfig& config) {
  config.validate();
  Assets a;
  a.scenario = loadScenario(config.scenario);
  a.hand = loadHandModel(config.hand_model);
  a.templates = loadTemplateLibrary(config.templates, a.hand);
  for (Arm arm : kArms) a.chains[index(arm)] = loadChain(config.chains[index(arm)]);
  a.scenario.check(a.templates);
  for (Arm arm : kArms) {
    const VecX& seed = a.scenario.arms[index(arm)].seed_q;
    if (seed.size() != 0 && seed.size() != a.chains[index(arm)].dof())
      throw ConfigurationError(std::string("seed_q of the ") + toString(arm) + " arm has the wrong length");
  }
  return a;
}

JointVectord solveInitialPose(const SerialChaind& chain, const Posed& target, const VecX& seed) {
  JointVectord q = clampToLimits(chain, seed.size() == 0 ? zeroJoints(chain) : makeJointVector(chain, seed));
  for (int i = 0; i < 5000; ++i) {
    if (trackingError(target, forwardKinematics(chain, q)).norm() < 1e-12) break;
    q = trackPose(chain, q, target);
  }
  if (trackingError(target, forwardKinematics(chain, q)).norm() > 1e-6)
    throw ConfigurationError("initial end-effector pose is out of reach for chain '" + chain.name + "'");
  return q;
}

struct TeleopSystem::Impl {
  Impl(const RunConfig& c, Assets a)
      : config(c),
        assets(std::move(a)),
        sim(assets.chains, assets.hand, simConfig(), c.seed),
        session(c.pedals, {Posed{}, Posed{}}, c.gains.translation_gain),
        snappers{TemplateSnapper(c.gains.snap_hysteresis), TemplateSnapper(c.gains.snap_hysteresis)} {
    const Scenario& sc = assets.scenario;
    std::array<Posed, 2> ee;
    for (Arm arm : kArms) {
      const std::size_t i = index(arm);
      const ArmSetup& setup = sc.arms[i];
      const JointVectord q0 = solveInitialPose(assets.chains[i], setup.initial_ee, setup.seed_q);
      sim.setArm(arm, q0, VecX::Zero(q0.angles.size()));
      if (!setup.template_name.empty())
        sim.setHand(arm, assets.templates.at(setup.template_name).q, setup.template_name);
      q_user[i] = sim.state().arm(arm).hand;
      ee[i] = sim.eePose(arm);
      commanded[i] = ee[i];
      tau_cmd[i] = gravityTorques(assets.chains[i], q0, sc.sim.gravity);
    }
    session = TeleopSession(c.pedals, ee, c.gains.translation_gain);
    follower_pose = ee[index(Arm::Left)];

    for (const auto& s : sc.surfaces) sim.addSurface(s);
    if (sc.bag) {
      BagRig rig;
      rig.model = sc.bag->model;
      rig.squeezing_hands = sc.bag->squeezing_hands;
      rig.open_q = assets.templates.at(sc.bag->open_template).q.angles;
      rig.closed_q = assets.templates.at(sc.bag->closed_template).q.angles;
      rig.max_compression_one_hand = sc.bag->max_compression_one_hand;
      rig.max_compression_two_hands = sc.bag->max_compression_two_hands;
      sim.setBag(std::move(rig));
    }
    if (sc.needle) needle.resize(sc.needle->approaches.size());
  }

  SimConfig simConfig() const {
    SimConfig s = assets.scenario.sim;
    s.dt = config.dt();
    return s;
  }

  void apply(const SessionEvent& event) {
    ++events;
    std::visit([this](const auto& e) { on(e); }, event.payload);
  }

  void on(const HandPoseSample& e) { session.onHandPose(e); }
  void on(const PedalEdge& e) { session.onPedal(e); }
  void on(const CouplingToggle&) { session.toggleCoupling(); }
  void on(const EndOfSession&) {}

  void on(const KeypointFrame& e) {
    const std::size_t i = index(e.hand);
    try {
      const KeypointSet fused = fuse(e.views[0], e.views[1]);
      const std::array<Vec3, 5> v = keypointVectors(fused);
      q_user[i] = retarget(v, q_user[i], assets.hand, config.gains.retarget);
      have_user[i] = true;
    } catch (const NoDetectionError&) {
      ++dropped;
    } catch (const NoReliableViewError&) {
      ++dropped;
    } catch (const DegenerateGeometryError&) {
      ++dropped;
    }
  }

  void on(const TemplateRequest& e) {
    const std::size_t i = index(e.hand);
    if (e.name.empty()) {
      forced_template[i].clear();
      snappers[i].reset();
    } else if (assets.templates.find(e.name)) {
      forced_template[i] = e.name;
    } else {
      ++rejected;
    }
  }

  void on(const ForceCommand& e) {
    const std::size_t i = index(e.arm);
    admittance_offset[i].setZero();
    if (e.enabled && e.force.norm() > 0.0) {
      force_target[i] = e.force;
      force[i].target = e.force;
    } else {
      force_target[i].reset();
    }
  }

  std::array<Posed, 2> armTargets() {
    const double dt = config.dt();
    std::array<Posed, 2> target{session.commanded(Arm::Left), session.commanded(Arm::Right)};
    const std::size_t l = index(Arm::Left);

    if (session.coupling()) {
      const Posed& right = target[index(Arm::Right)];
      if (!coupled) {
        coupled = true;
        coupling_offset = right.inverse() * follower_pose;
        follower_twist = Twistd{};
        leader_prev = right * coupling_offset;
      }
      const Posed leader = right * coupling_offset;
      Twistd leader_twist;
      leader_twist.linear = (leader.position - leader_prev.position) / dt;
      leader_twist.angular = leader_prev.rotation * Vec3((leader_prev.rotation.inverse() * leader.rotation).log() / dt);
      const CouplingStep step =
          coupledFollowerStep(follower_pose, follower_twist, leader, leader_twist, config.gains.coupling);
      target[l] = step.pose;
      follower_twist = step.twist;
      leader_prev = leader;
    } else if (coupled) {
      coupled = false;
      session.rebase(Arm::Left, follower_pose);
      target[l] = follower_pose;
      follower_twist = Twistd{};
    }
    follower_pose = target[l];

    for (Arm arm : kArms) {
      const std::size_t i = index(arm);
      if (!force_target[i]) continue;
      const Vec3 dir = force_target[i]->normalized();
      const double err = dir.dot(*force_target[i] - wrench_est[i].force);
      admittance_offset[i] += dt * config.gains.admittance * err * dir;
      target[i].position += admittance_offset[i];
    }
    return target;
  }

  void handCommand(Arm arm, ArmCommand& cmd) {
    const std::size_t i = index(arm);
    if (!forced_template[i].empty()) {
      cmd.hand_target = assets.templates.at(forced_template[i]).q;
      cmd.template_name = forced_template[i];
      return;
    }
    if (!have_user[i]) return;
    if (assets.scenario.grasp_mode == GraspMode::Raw) {
      cmd.hand_target = q_user[i];
      return;
    }
    const SnapResult r = snappers[i].update(q_user[i], assets.templates, assets.scenario.active_tasks, sideOf(arm));
    cmd.hand_target = r.q;
    cmd.template_name = r.name;
  }

  void tick() {
    const std::array<Posed, 2> target = armTargets();
    std::array<ArmCommand, 2> cmds;
    for (Arm arm : kArms) {
      const std::size_t i = index(arm);
      cmds[i].ee_target = target[i];
      if (force_target[i]) cmds[i].wrench = Wrench::fromForce(*force_target[i]);
      handCommand(arm, cmds[i]);
    }
    sim.step(cmds);

    const SimState& st = sim.state();
    const Vec3& g = assets.scenario.sim.gravity;
    for (Arm arm : kArms) {
      const std::size_t i = index(arm);
      const SerialChaind& chain = assets.chains[i];
      const ArmSimState& s = st.arm(arm);
      wrench_est[i] =
          estimateEeWrench(chain, s.q, s.tau_measured, gravityTorques(chain, s.q, g), WrenchModel::ForceOnly);
      tau_cmd[i] = impedanceTorque(chain, s.q, cmds[i].wrench, g);
      commanded[i] = target[i];
    }
    ++ticks;
    record(cmds);
  }

  void record(const std::array<ArmCommand, 2>& cmds) {
    const SimState& st = sim.state();
    if (assets.scenario.bag) {
      bag_t.push_back(st.clock);
      bag_c.push_back(st.bag_compression);
    }
    if (const auto& nd = assets.scenario.needle) {
      for (std::size_t j = 0; j < nd->approaches.size(); ++j) {
        const auto [start, end] = nd->approaches[j];
        if (st.clock < start || st.clock > end) continue;
        const NeedleAngles a = needleAngleCheck(sim.eePose(nd->arm), sim.surface(nd->surface), nd->image_plane_normal);
        NeedleAcc& acc = needle[j];
        ++acc.samples;
        acc.max_dev = std::max(acc.max_dev, a.deviation);
        acc.sum_dev += a.deviation;
        acc.min_inc = std::min(acc.min_inc, a.incidence);
        acc.max_inc = std::max(acc.max_inc, a.incidence);
        acc.sum_inc += a.incidence;
      }
    }
    for (Arm arm : kArms) {
      const std::size_t i = index(arm);
      if (!force_target[i]) continue;
      const Vec3& contact = st.arm(arm).contact.force;
      const double err = (contact - *force_target[i]).norm();
      ForceAcc& f = force[i];
      ++f.samples;
      f.sum += err;
      f.sum_sq += err * err;
      f.max = std::max(f.max, err);
      f.last = err;
      f.sum_est += (wrench_est[i].force - contact).norm();
    }

    json state{{"t", st.clock}, {"bag", st.bag_compression}, {"coupling", session.coupling()}};
    json cmd{{"t", st.clock}};
    for (Arm arm : kArms) {
      const std::size_t i = index(arm);
      const ArmSimState& s = st.arm(arm);
      state["arms"].push_back({{"q", vecJson(s.q.angles)},
                               {"qd", vecJson(s.qd)},
                               {"hand", vecJson(s.hand.angles)},
                               {"template", s.active_template},
                               {"contact", detail::vecToJson(s.contact.force)},
                               {"tau", vecJson(s.tau_measured)},
                               {"estimate", detail::vecToJson(wrench_est[i].force)}});
      cmd["arms"].push_back({{"ee", detail::poseToJson(commanded[i])},
                             {"hand", cmds[i].hand_target ? vecJson(cmds[i].hand_target->angles) : json(nullptr)},
                             {"template", cmds[i].template_name}});
    }
    const std::string state_line = state.dump() + '\n';
    state_hash.update(state_line);
    command_hash.update(cmd.dump() + '\n');
    if (state_log) *state_log << state_line;
  }

  RunMetrics metrics() const {
    RunMetrics m;
    const Scenario& sc = assets.scenario;
    m.scenario = sc.name;
    m.ticks = ticks;
    m.duration_s = static_cast<double>(ticks) * config.dt();
    m.events = events;
    m.dropped_frames = dropped;
    m.rejected_events = rejected;
    if (sc.bag) {
      m.bvm_calibrated = sc.bag->fitted;
      try {
        m.bvm = bvmMetrics(bag_t, bag_c, sc.bag->model);
      } catch (const InsufficientDataError& e) {
        m.bvm_note = e.what();
      }
    }
    if (sc.needle) {
      for (std::size_t j = 0; j < needle.size(); ++j) {
        const NeedleAcc& acc = needle[j];
        NeedleAttempt a;
        std::tie(a.start, a.end) = sc.needle->approaches[j];
        a.samples = acc.samples;
        if (acc.samples > 0) {
          const auto n = static_cast<double>(acc.samples);
          a.max_deviation = acc.max_dev;
          a.mean_deviation = acc.sum_dev / n;
          a.min_incidence = acc.min_inc;
          a.max_incidence = acc.max_inc;
          a.mean_incidence = acc.sum_inc / n;
        }
        m.needle.push_back(a);
      }
    }
    for (Arm arm : kArms) {
      const ForceAcc& f = force[index(arm)];
      if (f.samples == 0) continue;
      const auto n = static_cast<double>(f.samples);
      ForceTrackingStats s;
      s.target = f.target;
      s.samples = f.samples;
      s.mean_error = f.sum / n;
      s.rms_error = std::sqrt(f.sum_sq / n);
      s.max_error = f.max;
      s.final_error = f.last;
      s.mean_estimate_error = f.sum_est / n;
      m.force[index(arm)] = s;
    }
    m.state_hash = state_hash.hex();
    m.command_hash = command_hash.hex();
    return m;
  }

  RunConfig config;
  Assets assets;
  SimWorld sim;
  TeleopSession session;

  std::array<JointVectord, 2> q_user;
  std::array<bool, 2> have_user{};
  std::array<TemplateSnapper, 2> snappers;
  std::array<std::string, 2> forced_template;
  std::array<std::optional<Vec3>, 2> force_target;
  std::array<Vec3, 2> admittance_offset{Vec3::Zero(), Vec3::Zero()};
  std::array<Wrench, 2> wrench_est;
  std::array<VecX, 2> tau_cmd;
  std::array<Posed, 2> commanded;

  bool coupled = false;
  Posed coupling_offset;
  Posed follower_pose;
  Twistd follower_twist;
  Posed leader_prev;

  std::size_t ticks = 0;
  std::size_t events = 0;
  std::size_t dropped = 0;
  std::size_t rejected = 0;
  std::vector<double> bag_t;
  std::vector<double> bag_c;
  std::vector<NeedleAcc> needle;
  std::array<ForceAcc, 2> force;

  Sha256 state_hash;
  Sha256 command_hash;
  std::ostream* state_log = nullptr;
};

TeleopSystem::TeleopSystem(const RunConfig& config, Assets assets)
    : impl_(std::make_unique<Impl>(config, std::move(assets))) {}
TeleopSystem::~TeleopSystem() = default;

void TeleopSystem::apply(const SessionEvent& event) { impl_->apply(event); }
void TeleopSystem::tick() { impl_->tick(); }
std::size_t TeleopSystem::ticks() const { return impl_->ticks; }
double TeleopSystem::time() const { return static_cast<double>(impl_->ticks) * impl_->config.dt(); }
double TeleopSystem::dt() const { return impl_->config.dt(); }
const SimWorld& TeleopSystem::sim() const { return impl_->sim; }
const TeleopSession& TeleopSystem::session() const { return impl_->session; }
const GraspTemplateLibrary& TeleopSystem::templates() const { return impl_->assets.templates; }
const Posed& TeleopSystem::commanded(Arm arm) const { return impl_->commanded[index(arm)]; }
const Wrench& TeleopSystem::estimatedWrench(Arm arm) const { return impl_->wrench_est[index(arm)]; }
const VecX& TeleopSystem::commandTorque(Arm arm) const { return impl_->tau_cmd[index(arm)]; }
void TeleopSystem::setStateLog(std::ostream* out) { impl_->state_log = out; }
std::string TeleopSystem::stateHash() const { return impl_->state_hash.hex(); }
std::string TeleopSystem::commandHash() const { return impl_->command_hash.hex(); }
RunMetrics TeleopSystem::metrics() const { return impl_->metrics(); }

RunMetrics replay(TeleopSystem& system, const std::vector<SessionEvent>& events) {
  if (events.empty()) return system.metrics();
  const double t_last = events.back().t;
  std::size_t next = 0;
  while (true) {
    const double t = system.time();
    bool ended = false;
    while (next < events.size() && events[next].t <= t + kBoundarySlack) {
      const SessionEvent& ev = events[next++];
      if (std::holds_alternative<EndOfSession>(ev.payload)) {
        ended = true;
        break;
      }
      system.apply(ev);
    }
    if (ended || t > t_last + kBoundarySlack) break;
    system.tick();
  }
  return system.metrics();
}

RunMetrics runReplay(const RunConfig& config) {
  const auto* mode = config.mode ? std::get_if<ReplayMode>(&*config.mode) : nullptr;
  if (!mode) throw ConfigurationError("replay needs a session path");
  const std::vector<SessionEvent> events = loadSession(mode->session);
  TeleopSystem system(config, loadAssets(config));

  std::ofstream state_log;
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    state_log.open(std::filesystem::path(config.output_dir) / "state.log");
    if (!state_log) throw ConfigurationError("cannot write into '" + config.output_dir + "'");
    system.setStateLog(&state_log);
  }
  RunMetrics m = replay(system, events);
  if (!config.output_dir.empty()) writeRunOutputs(config.output_dir, m);
  return m;
}

std::string metricsToJson(const RunMetrics& m) {
  json j{{"scenario", m.scenario},
         {"ticks", m.ticks},
         {"duration_s", m.duration_s},
         {"events", m.events},
         {"dropped_frames", m.dropped_frames},
         {"rejected_events", m.rejected_events},
         {"state_hash", m.state_hash},
         {"command_hash", m.command_hash}};
  if (m.bvm) {
    json breaths = json::array();
    for (const auto& b : m.bvm->breaths)
      breaths.push_back({{"peak_time", b.peak_time},
                         {"peak_compression", b.peak_compression},
                         {"rise_time", b.rise_time},
                         {"volume_ml", b.volume_ml}});
    j["bvm"] = {{"calibrated", m.bvm_calibrated},
                {"interval_s", m.bvm->interval_s},
                {"ventilation_time_s", m.bvm->ventilation_time_s},
                {"mean_volume_ml", m.bvm->mean_volume_ml},
                {"fraction_in_range", m.bvm->fraction_in_range},
                {"breaths", breaths}};
  } else if (!m.bvm_note.empty()) {
    j["bvm"] = {{"calibrated", m.bvm_calibrated}, {"note", m.bvm_note}};
  }
  if (!m.needle.empty()) {
    json rows = json::array();
    for (const auto& a : m.needle)
      rows.push_back({{"start", a.start},
                      {"end", a.end},
                      {"samples", a.samples},
                      {"max_deviation_rad", a.max_deviation},
                      {"mean_deviation_rad", a.mean_deviation},
                      {"min_incidence_rad", a.min_incidence},
                      {"max_incidence_rad", a.max_incidence},
                      {"mean_incidence_rad", a.mean_incidence}});
    j["needle"] = rows;
  }
  for (Arm arm : kArms) {
    const auto& f = m.force[index(arm)];
    if (!f) continue;
    j["force"][toString(arm)] = {{"target", detail::vecToJson(f->target)},
                                 {"samples", f->samples},
                                 {"mean_error_n", f->mean_error},
                                 {"rms_error_n", f->rms_error},
                                 {"max_error_n", f->max_error},
                                 {"final_error_n", f->final_error},
                                 {"mean_estimate_error_n", f->mean_estimate_error}};
  }
  return j.dump(2);
}

RunMetrics metricsFromJson(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunMetrics m;
    m.scenario = j.at("scenario").get<std::string>();
    m.ticks = j.at("ticks").get<std::size_t>();
    m.duration_s = j.at("duration_s").get<double>();
    m.events = j.value("events", std::size_t{0});
    m.dropped_frames = j.value("dropped_frames", std::size_t{0});
    m.rejected_events = j.value("rejected_events", std::size_t{0});
    m.state_hash = j.value("state_hash", std::string());
    m.command_hash = j.value("command_hash", std::string());
    if (j.contains("bvm")) {
      const json& b = j.at("bvm");
      m.bvm_calibrated = b.value("calibrated", false);
      if (b.contains("interval_s")) {
        BvmMetrics bvm;
        bvm.interval_s = b.at("interval_s").get<double>();
        bvm.ventilation_time_s = b.at("ventilation_time_s").get<double>();
        bvm.mean_volume_ml = b.at("mean_volume_ml").get<double>();
        bvm.fraction_in_range = b.at("fraction_in_range").get<double>();
        for (const auto& r : b.at("breaths"))
          bvm.breaths.push_back(Breath{r.at("peak_time").get<double>(), r.at("peak_compression").get<double>(),
                                       r.at("rise_time").get<double>(), r.at("volume_ml").get<double>()});
        m.bvm = bvm;
      } else {
        m.bvm_note = b.value("note", std::string());
      }
    }
    if (j.contains("needle")) {
      for (const auto& r : j.at("needle")) {
        NeedleAttempt a;
        a.start = r.at("start").get<double>();
        a.end = r.at("end").get<double>();
        a.samples = r.at("samples").get<std::size_t>();
        a.max_deviation = r.at("max_deviation_rad").get<double>();
        a.mean_deviation = r.at("mean_deviation_rad").get<double>();
        a.min_incidence = r.at("min_incidence_rad").get<double>();
        a.max_incidence = r.at("max_incidence_rad").get<double>();
        a.mean_incidence = r.at("mean_incidence_rad").get<double>();
        m.needle.push_back(a);
      }
    }
    if (j.contains("force")) {
      for (Arm arm : kArms) {
        if (!j.at("force").contains(toString(arm))) continue;
        const json& f = j.at("force").at(toString(arm));
        ForceTrackingStats s;
        s.target = detail::vecFromJson(f.at("target"));
        s.samples = f.at("samples").get<std::size_t>();
        s.mean_error = f.at("mean_error_n").get<double>();
        s.rms_error = f.at("rms_error_n").get<double>();
        s.max_error = f.at("max_error_n").get<double>();
        s.final_error = f.at("final_error_n").get<double>();
        s.mean_estimate_error = f.at("mean_estimate_error_n").get<double>();
        m.force[index(arm)] = s;
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed metrics: ") + e.what());
  }
}

namespace {

// Same shortest round-trip spelling the JSON document uses.
std::string num(double x) { return json(x).dump(); }
std::string num(std::size_t x) { return std::to_string(x); }

void row(std::ostringstream& out, const std::string& key, const std::string& value) {
  out << "  " << key;
  for (std::size_t i = key.size(); i < 22; ++i) out << ' ';
  out << value << '\n';
}

std::string textReport(const RunMetrics& m) {
  std::ostringstream out;
  out << "run\n";
  row(out, "scenario", m.scenario);
  row(out, "ticks", num(m.ticks));
  row(out, "duration_s", num(m.duration_s));
  row(out, "events", num(m.events));
  row(out, "dropped_frames", num(m.dropped_frames));
  row(out, "rejected_events", num(m.rejected_events));
  row(out, "state_hash", m.state_hash);
  row(out, "command_hash", m.command_hash);

  if (m.bvm) {
    out << "\nbvm" << (m.bvm_calibrated ? " (calibrated bag constants)" : "") << '\n';
    row(out, "breaths", num(m.bvm->breaths.size()));
    row(out, "interval_s", num(m.bvm->interval_s));
    row(out, "ventilation_time_s", num(m.bvm->ventilation_time_s));
    row(out, "mean_volume_ml", num(m.bvm->mean_volume_ml));
    row(out, "fraction_in_range", num(m.bvm->fraction_in_range));
    out << "  breath  peak_time  peak_compression  rise_time  volume_ml\n";
    for (std::size_t i = 0; i < m.bvm->breaths.size(); ++i) {
      const Breath& b = m.bvm->breaths[i];
      out << "  " << i + 1 << "  " << num(b.peak_time) << "  " << num(b.peak_compression) << "  "
          << num(b.rise_time) << "  " << num(b.volume_ml) << '\n';
    }
  } else if (!m.bvm_note.empty()) {
    out << "\nbvm\n";
    row(out, "note", m.bvm_note);
  }

  if (!m.needle.empty()) {
    out << "\nneedle\n";
    out << "  attempt  start  end  samples  max_deviation_rad  mean_deviation_rad  min_incidence_rad  "
           "max_incidence_rad  mean_incidence_rad\n";
    for (std::size_t i = 0; i < m.needle.size(); ++i) {
      const NeedleAttempt& a = m.needle[i];
      out << "  " << i + 1 << "  " << num(a.start) << "  " << num(a.end) << "  " << num(a.samples) << "  "
          << num(a.max_deviation) << "  " << num(a.mean_deviation) << "  " << num(a.min_incidence) << "  "
          << num(a.max_incidence) << "  " << num(a.mean_incidence) << '\n';
    }
  }

  for (Arm arm : kArms) {
    const auto& f = m.force[index(arm)];
    if (!f) continue;
    out << "\nforce " << toString(arm) << '\n';
    row(out, "target_n", "[" + num(f->target.x()) + ", " + num(f->target.y()) + ", " + num(f->target.z()) + "]");
    row(out, "samples", num(f->samples));
    row(out, "mean_error_n", num(f->mean_error));
    row(out, "rms_error_n", num(f->rms_error));
    row(out, "max_error_n", num(f->max_error));
    row(out, "final_error_n", num(f->final_error));
    row(out, "mean_estimate_error_n", num(f->mean_estimate_error));
  }
  return out.str();
}

}  // namespace

std::string renderReport(const RunMetrics& metrics, ReportFormat format) {
  return format == ReportFormat::Json ? metricsToJson(metrics) + '\n' : textReport(metrics);
}

void writeRunOutputs(const std::string& dir, const RunMetrics& metrics) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream json_out(fs::path(dir) / "metrics.json");
  std::ofstream text_out(fs::path(dir) / "report.txt");
  if (!json_out || !text_out) throw ConfigurationError("cannot write into '" + dir + "'");
  json_out << metricsToJson(metrics) << '\n';
  text_out << textReport(metrics);
}

}  // namespace teleop
