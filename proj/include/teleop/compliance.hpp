#pragma once

#include "teleop/geometry.hpp"
#include "teleop/kinematics.hpp"

namespace teleop {

/// End-effector force and torque, world frame.
struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  static Wrench zero() { return Wrench{}; }
  static Wrench fromForce(const Vec3& f) { return Wrench{f, Vec3::Zero()}; }
  Vec6 vector() const {
    Vec6 v;
    v << force, torque;
    return v;
  }
  static Wrench fromVector(const Vec6& v) { return Wrench{v.head<3>(), v.tail<3>()}; }
};

/// Which wrench components the estimator solves for. ForceOnly assumes the
/// load is a pure force through the end-effector origin.
enum class WrenchModel { ForceTorque, ForceOnly };

/// Least-norm wrench W with J^T W = tau_measured - tau_g, through a truncated
/// SVD pseudoinverse (singular values below `sigma_min` dropped).
Wrench estimateEeWrench(const SerialChaind& chain, const JointVectord& q, const VecX& tau_measured,
                        const VecX& tau_gravity, WrenchModel model = WrenchModel::ForceTorque,
                        double sigma_min = 1e-6);

/// tau_cmd = tau_g + J^T F.
VecX impedanceTorque(const SerialChaind& chain, const JointVectord& q, const Wrench& desired, const Vec3& gravity);

enum class CouplingLaw {
  /// Second-order tracking e'' = -kp e - kd e' with kp = lambda/dt^2 and
  /// kd = beta/dt, integrated with backward Euler.
  Stable,
  /// e(t+dt) = lambda e(t) + beta e'(t), the printed assignment form; diverges
  /// for lambda > 1.
  Literal,
};

struct CouplingParams {
  double lambda = 3.0;
  double beta = 0.5;
  double dt = 0.01;
  CouplingLaw law = CouplingLaw::Stable;

  void validate() const;
  double stiffness() const { return lambda / (dt * dt); }
  double damping() const { return beta / dt; }
};

struct CouplingStep {
  Posed pose;
  Twistd twist;
};

/// Next follower pose (and velocity) from the virtual spring-damper between
/// the follower x_l and the leader's desired pose x_r. Pose error is the
/// position difference plus the rotation log of R_r^-1 R_l.
CouplingStep coupledFollowerStep(const Posed& x_l, const Twistd& xdot_l, const Posed& x_r, const Twistd& xdot_r,
                                 const CouplingParams& p);

inline Posed coupledFollowerTarget(const Posed& x_l, const Twistd& xdot_l, const Posed& x_r, const Twistd& xdot_r,
                                   const CouplingParams& p) {
  return coupledFollowerStep(x_l, xdot_l, x_r, xdot_r, p).pose;
}

/// 1/2 kp |e|^2 + 1/2 |e'|^2 for the stable law.
double couplingEnergy(const Posed& x_l, const Twistd& xdot_l, const Posed& x_r, const Twistd& xdot_r,
                      const CouplingParams& p);

}  // namespace teleop
