#pragma once

#include <array>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "teleop/compliance.hpp"
#include "teleop/hand_retarget.hpp"
#include "teleop/kinematics.hpp"
#include "teleop/teleop_session.hpp"

namespace teleop {

/// Self-inflating bag. Delivered volume is linear in the compression
/// fraction: compressible_ml * compression * (1 - leak).
struct BagModel {
  double rest_ml = 1600.0;
  double compressible_ml = 600.0;
  double leak = 0.1;

  void validate() const;
  double deliveredVolume(double compression) const;
};

/// Penalty contact primitive. For a plane, `point` lies on it and `normal`
/// points out of the solid; for a sphere, `point` is the center.
struct ContactSurface {
  enum class Shape { Plane, Sphere };

  std::string name;
  Shape shape = Shape::Plane;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double radius = 0.0;
  double stiffness = 1000.0;  ///< N/m
  double damping = 0.0;       ///< N s/m

  void validate() const;
  /// Penetration depth of `p` (positive inside the solid).
  double depth(const Vec3& p) const;
  /// Outward surface normal closest to `p`.
  Vec3 outwardNormal(const Vec3& p) const;
};

/// Bag squeezed by one or two hands. A hand's closure is the projection of
/// its joints onto the open-to-closed template segment, clamped to [0, 1];
/// bag compression is the mean closure scaled by the reach of that many hands.
struct BagRig {
  BagModel model;
  std::vector<Arm> squeezing_hands;
  VecX open_q;
  VecX closed_q;
  double max_compression_one_hand = 1.0;
  double max_compression_two_hands = 1.0;

  double closure(const VecX& hand_q) const;
};

struct SimConfig {
  double dt = 0.01;
  double joint_velocity_limit = 2.0;  ///< rad/s per arm joint
  double hand_velocity_limit = 6.0;   ///< rad/s per hand joint
  double joint_damping = 5.0;         ///< 1/s, decay of free joint motion
  double track_damping = 0.05;
  double track_step_cap = 0.1;
  double torque_noise = 0.05;  ///< N m, standard deviation
  double max_penetration = 0.005;
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);

  void validate() const;
};

struct ArmSimState {
  JointVectord q;
  VecX qd;
  JointVectord hand;
  std::string active_template;
  Wrench contact;  ///< wrench the end effector exerts on the environment
  bool in_contact = false;
  std::vector<double> penetration;  ///< per surface, capped
  VecX tau_measured;
  Wrench commanded_wrench;
};

struct SimState {
  std::array<ArmSimState, 2> arms;
  double bag_compression = 0.0;
  double clock = 0.0;
  std::uint64_t steps = 0;

  const ArmSimState& arm(Arm a) const { return arms[index(a)]; }
};

struct ArmCommand {
  std::optional<Posed> ee_target;
  std::optional<JointVectord> hand_target;
  std::string template_name;
  Wrench wrench;
};

/// Kinematic two-arm world. Arms follow commanded poses through damped
/// least-squares steps bounded by the joint velocity limit; torques are
/// synthesized from contact forces for the estimator, never integrated.
class SimWorld {
 public:
  SimWorld(std::array<SerialChaind, 2> chains, HandModel hand, SimConfig config, std::uint64_t seed);

  void setArm(Arm arm, const JointVectord& q, const VecX& qd);
  void setHand(Arm arm, const JointVectord& q, const std::string& template_name = {});
  void addSurface(ContactSurface surface);
  void setBag(BagRig bag);

  const SimState& state() const { return state_; }
  const SimConfig& config() const { return config_; }
  const SerialChaind& chain(Arm a) const { return chains_[index(a)]; }
  const HandModel& hand() const { return hand_; }
  const std::vector<ContactSurface>& surfaces() const { return surfaces_; }
  const std::optional<BagRig>& bag() const { return bag_; }
  const ContactSurface& surface(const std::string& name) const;

  Posed eePose(Arm a) const;
  /// 1/2 sum qd^2 over both arms (unit joint inertia).
  double kineticEnergy() const;

  const SimState& step(const std::array<ArmCommand, 2>& commands);

 private:
  void stepArm(Arm arm, const ArmCommand& cmd);

  std::array<SerialChaind, 2> chains_;
  HandModel hand_;
  SimConfig config_;
  std::vector<ContactSurface> surfaces_;
  std::optional<BagRig> bag_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_{0.0, 1.0};
  SimState state_;
};

struct NeedleAngles {
  double deviation = 0.0;  ///< rad, needle axis vs image plane
  double incidence = 0.0;  ///< rad, needle axis vs surface tangent plane
};

/// Needle axis is the x axis of `pose`.
NeedleAngles needleAngleCheck(const Posed& pose, const ContactSurface& surface, const Vec3& image_plane_normal);

struct Breath {
  double peak_time = 0.0;
  double peak_compression = 0.0;
  double rise_time = 0.0;
  double volume_ml = 0.0;
};

struct BvmMetrics {
  std::vector<Breath> breaths;
  double interval_s = 0.0;          ///< mean peak-to-peak spacing
  double ventilation_time_s = 0.0;  ///< mean 10%-90% rise time
  double mean_volume_ml = 0.0;
  double fraction_in_range = 0.0;
};

struct BvmThresholds {
  double breath_on = 0.05;  ///< compression above which a breath is in progress
  double volume_low_ml = 400.0;
  double volume_high_ml = 600.0;
};

/// Breath metrics from a sampled compression trace. Throws
/// InsufficientDataError with fewer than two breaths.
BvmMetrics bvmMetrics(std::span<const double> time, std::span<const double> compression, const BagModel& bag,
                      const BvmThresholds& thresholds = {});

}  // namespace teleop
