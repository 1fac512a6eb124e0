#include "teleop/sim_world.hpp"

#include <algorithm>
#include <cmath>

#include "teleop/errors.hpp"

namespace teleop {

void BagModel::validate() const {
  if (!(compressible_ml > 0.0)) throw ConfigurationError("bag compressible volume must be positive");
  if (!(leak >= 0.0 && leak < 1.0)) throw ConfigurationError("bag leak fraction must lie in [0, 1)");
}

double BagModel::deliveredVolume(double compression) const {
  return compressible_ml * std::clamp(compression, 0.0, 1.0) * (1.0 - leak);
}

void ContactSurface::validate() const {
  if (!(stiffness > 0.0)) throw ConfigurationError("surface '" + name + "' stiffness must be positive");
  if (!(damping >= 0.0)) throw ConfigurationError("surface '" + name + "' damping must be non-negative");
  if (shape == Shape::Plane && std::abs(normal.norm() - 1.0) > 1e-9)
    throw ConfigurationError("surface '" + name + "' normal must be unit length");
  if (shape == Shape::Sphere && !(radius > 0.0))
    throw ConfigurationError("surface '" + name + "' radius must be positive");
}

double ContactSurface::depth(const Vec3& p) const {
  if (shape == Shape::Plane) return -normal.dot(p - point);
  return radius - (p - point).norm();
}

Vec3 ContactSurface::outwardNormal(const Vec3& p) const {
  if (shape == Shape::Plane) return normal;
  const Vec3 d = p - point;
  return d.norm() > 0.0 ? Vec3(d.normalized()) : Vec3::UnitZ();
}

double BagRig::closure(const VecX& hand_q) const {
  const VecX span = closed_q - open_q;
  const double len2 = span.squaredNorm();
  if (len2 == 0.0) return 0.0;
  return std::clamp((hand_q - open_q).dot(span) / len2, 0.0, 1.0);
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigurationError("sim dt must be positive");
  if (!(joint_velocity_limit > 0.0) || !(hand_velocity_limit > 0.0))
    throw ConfigurationError("velocity limits must be positive");
  if (!(joint_damping >= 0.0)) throw ConfigurationError("joint damping must be non-negative");
  if (!(torque_noise >= 0.0)) throw ConfigurationError("torque noise must be non-negative");
  if (!(max_penetration > 0.0)) throw ConfigurationError("max penetration must be positive");
}

SimWorld::SimWorld(std::array<SerialChaind, 2> chains, HandModel hand, SimConfig config, std::uint64_t seed)
    : chains_(std::move(chains)), hand_(std::move(hand)), config_(config), rng_(seed) {
  config_.validate();
  for (Arm a : kArms) {
    const SerialChaind& c = chains_[index(a)];
    c.validate();
    ArmSimState& s = state_.arms[index(a)];
    s.q = clampToLimits(c, zeroJoints(c));
    s.qd = VecX::Zero(c.dof());
    s.hand = hand_.zero();
    s.tau_measured = gravityTorques(c, s.q, config_.gravity);
  }
}

void SimWorld::setArm(Arm arm, const JointVectord& q, const VecX& qd) {
  const SerialChaind& c = chain(arm);
  checkJointVector(c, q);
  if (qd.size() != c.dof()) throw StructuralError("joint velocity length mismatch");
  ArmSimState& s = state_.arms[index(arm)];
  s.q = clampToLimits(c, q);
  s.qd = qd;
  s.tau_measured = gravityTorques(c, s.q, config_.gravity);
}

void SimWorld::setHand(Arm arm, const JointVectord& q, const std::string& template_name) {
  ArmSimState& s = state_.arms[index(arm)];
  s.hand = hand_.clamp(q);
  s.active_template = template_name;
}

void SimWorld::addSurface(ContactSurface surface) {
  surface.validate();
  surfaces_.push_back(std::move(surface));
  for (auto& a : state_.arms) a.penetration.assign(surfaces_.size(), 0.0);
}

void SimWorld::setBag(BagRig bag) {
  bag.model.validate();
  if (bag.open_q.size() != hand_.dof() || bag.closed_q.size() != hand_.dof())
    throw ConfigurationError("bag templates must match the hand joint count");
  bag_ = std::move(bag);
}

const ContactSurface& SimWorld::surface(const std::string& name) const {
  for (const auto& s : surfaces_)
    if (s.name == name) return s;
  throw ConfigurationError("unknown surface '" + name + "'");
}

Posed SimWorld::eePose(Arm a) const { return forwardKinematics(chain(a), state_.arm(a).q); }

double SimWorld::kineticEnergy() const {
  double e = 0.0;
  for (const auto& a : state_.arms) e += 0.5 * a.qd.squaredNorm();
  return e;
}

void SimWorld::stepArm(Arm arm, const ArmCommand& cmd) {
  const SerialChaind& c = chain(arm);
  ArmSimState& s = state_.arms[index(arm)];
  const double dt = config_.dt;

  JointVectord q_next = s.q;
  if (cmd.ee_target) {
    TrackParams<double> params;
    params.damping = config_.track_damping;
    params.step_cap = std::min(config_.track_step_cap, config_.joint_velocity_limit * dt);
    q_next = trackPose(c, s.q, *cmd.ee_target, params);
  } else if (s.qd.squaredNorm() > 0.0) {
    const VecX qd = s.qd * std::exp(-config_.joint_damping * dt);
    q_next = clampToLimits(c, JointVectord{s.q.angles + qd * dt, s.q.chain});
  }
  s.qd = (q_next.angles - s.q.angles) / dt;
  s.q = std::move(q_next);

  if (cmd.hand_target) {
    hand_.check(*cmd.hand_target);
    const double max_step = config_.hand_velocity_limit * dt;
    const VecX delta = (cmd.hand_target->angles - s.hand.angles).cwiseMax(-max_step).cwiseMin(max_step);
    s.hand = hand_.clamp(JointVectord{s.hand.angles + delta, s.hand.chain});
  }
  if (!cmd.template_name.empty() || cmd.hand_target) s.active_template = cmd.template_name;
  s.commanded_wrench = cmd.wrench;

  const Vec3 tip = forwardKinematics(c, s.q).position;
  Vec3 applied = Vec3::Zero();
  s.in_contact = false;
  s.penetration.resize(surfaces_.size(), 0.0);
  for (std::size_t k = 0; k < surfaces_.size(); ++k) {
    const ContactSurface& surf = surfaces_[k];
    const double depth = std::clamp(surf.depth(tip), 0.0, config_.max_penetration);
    const double rate = (depth - s.penetration[k]) / dt;
    s.penetration[k] = depth;
    if (depth <= 0.0) continue;
    const double normal_force = std::max(0.0, surf.stiffness * depth + surf.damping * rate);
    applied -= normal_force * surf.outwardNormal(tip);
    s.in_contact = true;
  }
  s.contact = Wrench::fromForce(applied);

  VecX tau = gravityTorques(c, s.q, config_.gravity) + geometricJacobian(c, s.q).transpose() * s.contact.vector();
  if (config_.torque_noise > 0.0)
    for (Eigen::Index i = 0; i < tau.size(); ++i) tau[i] += config_.torque_noise * noise_(rng_);
  s.tau_measured = std::move(tau);
}

const SimState& SimWorld::step(const std::array<ArmCommand, 2>& commands) {
  for (Arm a : kArms) stepArm(a, commands[index(a)]);

  if (bag_ && !bag_->squeezing_hands.empty()) {
    double closure = 0.0;
    for (Arm a : bag_->squeezing_hands) closure += bag_->closure(state_.arm(a).hand.angles);
    closure /= static_cast<double>(bag_->squeezing_hands.size());
    const double reach =
        bag_->squeezing_hands.size() >= 2 ? bag_->max_compression_two_hands : bag_->max_compression_one_hand;
    state_.bag_compression = std::clamp(reach * closure, 0.0, 1.0);
  }

  ++state_.steps;
  state_.clock = static_cast<double>(state_.steps) * config_.dt;
  return state_;
}

NeedleAngles needleAngleCheck(const Posed& pose, const ContactSurface& surface, const Vec3& image_plane_normal) {
  const Vec3 axis = pose.rotation * Vec3::UnitX();
  const auto angleToPlane = [&axis](const Vec3& plane_normal) {
    const Vec3 n = plane_normal.normalized();
    const double out_of_plane = std::abs(axis.dot(n));
    const double in_plane = (axis - axis.dot(n) * n).norm();
    return std::atan2(out_of_plane, in_plane);
  };
  return {angleToPlane(image_plane_normal), angleToPlane(surface.outwardNormal(pose.position))};
}

namespace {

// Time at which the segment (t0, c0)-(t1, c1) crosses `level`.
double crossing(double t0, double c0, double t1, double c1, double level) {
  if (c1 == c0) return t1;
  return t0 + (level - c0) * (t1 - t0) / (c1 - c0);
}

}  // namespace

BvmMetrics bvmMetrics(std::span<const double> time, std::span<const double> compression, const BagModel& bag,
                      const BvmThresholds& th) {
  if (time.size() != compression.size()) throw StructuralError("time and compression traces differ in length");
  const std::size_t n = time.size();

  BvmMetrics m;
  std::size_t i = 0;
  while (i < n) {
    if (compression[i] <= th.breath_on) {
      ++i;
      continue;
    }
    std::size_t peak = i;
    std::size_t j = i;
    while (j < n && compression[j] > th.breath_on) {
      if (compression[j] > compression[peak]) peak = j;
      ++j;
    }
    const double c_peak = compression[peak];
    const double lo = 0.1 * c_peak;
    const double hi = 0.9 * c_peak;

    // walk back from the peak to the 10% crossing, then forward to 90%
    std::size_t k = peak;
    while (k > 0 && compression[k] > lo) --k;
    double t10 = time[k];
    if (compression[k] <= lo && k < peak) t10 = crossing(time[k], compression[k], time[k + 1], compression[k + 1], lo);
    std::size_t u = k;
    while (u < peak && compression[u] < hi) ++u;
    double t90 = time[u];
    if (u > 0 && compression[u - 1] < hi)
      t90 = crossing(time[u - 1], compression[u - 1], time[u], compression[u], hi);

    m.breaths.push_back(Breath{time[peak], c_peak, t90 - t10, bag.deliveredVolume(c_peak)});
    i = j;
  }

  if (m.breaths.size() < 2)
    throw InsufficientDataError("need at least two breaths, found " + std::to_string(m.breaths.size()));

  double rise = 0.0, volume = 0.0;
  std::size_t in_range = 0;
  for (const auto& b : m.breaths) {
    rise += b.rise_time;
    volume += b.volume_ml;
    if (b.volume_ml >= th.volume_low_ml && b.volume_ml <= th.volume_high_ml) ++in_range;
  }
  const auto count = static_cast<double>(m.breaths.size());
  m.interval_s = (m.breaths.back().peak_time - m.breaths.front().peak_time) / (count - 1.0);
  m.ventilation_time_s = rise / count;
  m.mean_volume_ml = volume / count;
  m.fraction_in_range = static_cast<double>(in_range) / count;
  return m;
}

}  // namespace teleop
