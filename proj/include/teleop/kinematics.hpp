#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "teleop/errors.hpp"
#include "teleop/geometry.hpp"

namespace teleop {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Jacobian = Eigen::Matrix<Scalar, 6, Eigen::Dynamic>;

/// Revolute joint. `origin` places the joint frame in its parent frame; the
/// joint then rotates about `axis` (expressed in the joint frame). The link
/// driven by this joint has its center of mass at `com` in the joint frame.
template <typename Scalar>
struct RevoluteJoint {
  std::string name;
  Pose<Scalar> origin;
  Vector3<Scalar> axis = Vector3<Scalar>::UnitZ();
  Scalar lower = Scalar(-M_PI);
  Scalar upper = Scalar(M_PI);
  Scalar mass = Scalar(0);
  Vector3<Scalar> com = Vector3<Scalar>::Zero();
};

template <typename Scalar>
struct SerialChain {
  std::string name;
  Pose<Scalar> base;
  std::vector<RevoluteJoint<Scalar>> joints;
  Pose<Scalar> tool;

  Eigen::Index dof() const { return static_cast<Eigen::Index>(joints.size()); }

  /// Throws StructuralError when the chain violates its invariants.
  void validate() const {
    if (joints.empty()) throw StructuralError("chain '" + name + "' has no joints");
    for (const auto& j : joints) {
      if (!(j.lower < j.upper))
        throw StructuralError("joint '" + j.name + "' has lower limit >= upper limit");
      if (std::abs(j.axis.norm() - Scalar(1)) > Scalar(1e-9))
        throw StructuralError("joint '" + j.name + "' axis is not unit length");
      if (j.mass < Scalar(0)) throw StructuralError("joint '" + j.name + "' has negative mass");
    }
  }
};

/// Joint angles tagged with the name of the chain they belong to.
template <typename Scalar>
struct JointVector {
  VectorX<Scalar> angles;
  std::string chain;

  Eigen::Index size() const { return angles.size(); }
  Scalar operator[](Eigen::Index i) const { return angles[i]; }
  Scalar& operator[](Eigen::Index i) { return angles[i]; }
};

template <typename Scalar>
JointVector<Scalar> makeJointVector(const SerialChain<Scalar>& chain, const VectorX<Scalar>& angles) {
  if (angles.size() != chain.dof())
    throw StructuralError("expected " + std::to_string(chain.dof()) + " joint angles for chain '" +
                          chain.name + "', got " + std::to_string(angles.size()));
  return JointVector<Scalar>{angles, chain.name};
}

template <typename Scalar>
JointVector<Scalar> zeroJoints(const SerialChain<Scalar>& chain) {
  return JointVector<Scalar>{VectorX<Scalar>::Zero(chain.dof()), chain.name};
}

template <typename Scalar>
void checkJointVector(const SerialChain<Scalar>& chain, const JointVector<Scalar>& q) {
  if (q.chain != chain.name)
    throw StructuralError("joint vector tagged '" + q.chain + "' used with chain '" + chain.name + "'");
  if (q.size() != chain.dof())
    throw StructuralError("joint vector length " + std::to_string(q.size()) + " does not match chain '" +
                          chain.name + "' with " + std::to_string(chain.dof()) + " joints");
}

template <typename Scalar>
JointVector<Scalar> clampToLimits(const SerialChain<Scalar>& chain, JointVector<Scalar> q) {
  checkJointVector(chain, q);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const auto& j = chain.joints[static_cast<std::size_t>(i)];
    q[i] = std::clamp(q[i], j.lower, j.upper);
  }
  return q;
}

template <typename Scalar>
bool withinLimits(const SerialChain<Scalar>& chain, const JointVector<Scalar>& q) {
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const auto& j = chain.joints[static_cast<std::size_t>(i)];
    if (q[i] < j.lower || q[i] > j.upper) return false;
  }
  return true;
}

/// World poses of every joint frame (after the joint rotation) plus the
/// end-effector frame.
template <typename Scalar>
struct ChainFrames {
  std::vector<Pose<Scalar>> joint;
  Pose<Scalar> ee;
};

template <typename Scalar>
ChainFrames<Scalar> chainFrames(const SerialChain<Scalar>& chain, const JointVector<Scalar>& q) {
  checkJointVector(chain, q);
  ChainFrames<Scalar> frames;
  frames.joint.reserve(chain.joints.size());
  Pose<Scalar> t = chain.base;
  for (std::size_t i = 0; i < chain.joints.size(); ++i) {
    const auto& j = chain.joints[i];
    t = t * j.origin * Pose<Scalar>(Rotation<Scalar>::fromAxisAngle(j.axis, q[static_cast<Eigen::Index>(i)]),
                                    Vector3<Scalar>::Zero());
    frames.joint.push_back(t);
  }
  frames.ee = t * chain.tool;
  return frames;
}

template <typename Scalar>
Pose<Scalar> forwardKinematics(const SerialChain<Scalar>& chain, const JointVector<Scalar>& q) {
  return chainFrames(chain, q).ee;
}

/// Rows 0-2 linear velocity, rows 3-5 angular velocity of the end effector,
/// both in the world frame.
template <typename Scalar>
Jacobian<Scalar> geometricJacobian(const SerialChain<Scalar>& chain, const JointVector<Scalar>& q) {
  const ChainFrames<Scalar> frames = chainFrames(chain, q);
  Jacobian<Scalar> jac(6, chain.dof());
  for (std::size_t i = 0; i < chain.joints.size(); ++i) {
    const Vector3<Scalar> axis = frames.joint[i].rotation * chain.joints[i].axis;
    const auto col = static_cast<Eigen::Index>(i);
    jac.template block<3, 1>(0, col) = axis.cross(frames.ee.position - frames.joint[i].position);
    jac.template block<3, 1>(3, col) = axis;
  }
  return jac;
}

/// Joint torques that statically balance the link weights under `gravity`
/// (the gradient of the chain's potential energy).
template <typename Scalar>
VectorX<Scalar> gravityTorques(const SerialChain<Scalar>& chain, const JointVector<Scalar>& q,
                               const Vector3<Scalar>& gravity) {
  const ChainFrames<Scalar> frames = chainFrames(chain, q);
  const std::size_t n = chain.joints.size();
  std::vector<Vector3<Scalar>> com(n);
  for (std::size_t k = 0; k < n; ++k) com[k] = frames.joint[k] * chain.joints[k].com;

  VectorX<Scalar> tau = VectorX<Scalar>::Zero(chain.dof());
  for (std::size_t i = 0; i < n; ++i) {
    const Vector3<Scalar> axis = frames.joint[i].rotation * chain.joints[i].axis;
    Scalar t = Scalar(0);
    for (std::size_t k = i; k < n; ++k)
      t -= chain.joints[k].mass * gravity.dot(axis.cross(com[k] - frames.joint[i].position));
    tau[static_cast<Eigen::Index>(i)] = t;
  }
  return tau;
}

template <typename Scalar>
struct TrackParams {
  Scalar damping = Scalar(0.05);
  Scalar step_cap = Scalar(0.1);
  int max_backtracks = 12;
};

/// World-frame tracking error of `current` towards `target`: position
/// difference and rotation vector, both expressed in the world frame.
template <typename Scalar>
Vector6<Scalar> trackingError(const Pose<Scalar>& target, const Pose<Scalar>& current) {
  Vector6<Scalar> e = poseError(target, current);
  e.template tail<3>() = current.rotation * Vector3<Scalar>(e.template tail<3>());
  return e;
}

/// One damped-least-squares step towards `target`. The step is capped at
/// `step_cap` (2-norm), clamped to the joint limits and halved until the
/// tracking error does not increase; a zero step is returned otherwise.
template <typename Scalar>
JointVector<Scalar> trackPose(const SerialChain<Scalar>& chain, const JointVector<Scalar>& q_current,
                              const Pose<Scalar>& target, const TrackParams<Scalar>& params = {}) {
  const Vector6<Scalar> err = trackingError(target, forwardKinematics(chain, q_current));
  const Scalar err_norm = err.norm();
  if (err_norm == Scalar(0)) return q_current;

  const Jacobian<Scalar> jac = geometricJacobian(chain, q_current);
  Eigen::Matrix<Scalar, 6, 6> jjt = jac * jac.transpose();
  jjt.diagonal().array() += params.damping * params.damping;
  VectorX<Scalar> dq = jac.transpose() * jjt.ldlt().solve(err);

  const Scalar dq_norm = dq.norm();
  if (dq_norm > params.step_cap) dq *= params.step_cap / dq_norm;

  for (int attempt = 0; attempt <= params.max_backtracks; ++attempt) {
    JointVector<Scalar> candidate{q_current.angles + dq, q_current.chain};
    candidate = clampToLimits(chain, candidate);
    if (trackingError(target, forwardKinematics(chain, candidate)).norm() <= err_norm) return candidate;
    dq *= Scalar(0.5);
  }
  return q_current;
}

using RevoluteJointd = RevoluteJoint<double>;
using SerialChaind = SerialChain<double>;
using JointVectord = JointVector<double>;
using VecX = VectorX<double>;
using Jacobiand = Jacobian<double>;

}  // namespace teleop
