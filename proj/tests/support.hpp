#pragma once

// Independent oracles and fixtures shared by the unit tests and the
// acceptance runner. Nothing here calls the library's own kinematics.

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "teleop/kinematics.hpp"

namespace teleop::testing {

inline std::string dataPath(const std::string& rel) { return std::string(TELEOP_DATA_DIR) + "/" + rel; }

inline Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis, double angle) {
  const Eigen::Vector3d k = axis.normalized();
  Eigen::Matrix3d kx;
  kx << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  return Eigen::Matrix3d::Identity() + std::sin(angle) * kx + (1.0 - std::cos(angle)) * kx * kx;
}

inline Eigen::Matrix4d homogeneous(const Eigen::Matrix3d& r, const Eigen::Vector3d& p) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = p;
  return m;
}

inline Eigen::Matrix4d homogeneous(const Posed& pose) { return homogeneous(pose.rotation.matrix(), pose.position); }

// Plain product of 4x4 transforms, rotations built by Rodrigues' formula.
inline Eigen::Matrix4d naiveFk(const SerialChaind& chain, const VecX& q) {
  Eigen::Matrix4d t = homogeneous(chain.base);
  for (std::size_t i = 0; i < chain.joints.size(); ++i) {
    const auto& j = chain.joints[i];
    t = t * homogeneous(j.origin) * homogeneous(rodrigues(j.axis, q[static_cast<Eigen::Index>(i)]), Vec3::Zero());
  }
  return t * homogeneous(chain.tool);
}

// Rotation vector of a rotation matrix (angle below pi).
inline Eigen::Vector3d matrixLog(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.axis() * aa.angle();
}

// Central differences: linear rows from positions, angular rows from
// log(R(q+h) R(q-h)^T) / 2h.
inline Eigen::MatrixXd finiteDifferenceJacobian(const SerialChaind& chain, const VecX& q, double h = 1e-6) {
  Eigen::MatrixXd jac(6, chain.dof());
  for (Eigen::Index i = 0; i < chain.dof(); ++i) {
    VecX qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    const Eigen::Matrix4d tp = naiveFk(chain, qp), tm = naiveFk(chain, qm);
    jac.block<3, 1>(0, i) = (tp.topRightCorner<3, 1>() - tm.topRightCorner<3, 1>()) / (2.0 * h);
    const Eigen::Matrix3d dr = tp.topLeftCorner<3, 3>() * tm.topLeftCorner<3, 3>().transpose();
    jac.block<3, 1>(3, i) = matrixLog(dr) / (2.0 * h);
  }
  return jac;
}

inline double potentialEnergy(const SerialChaind& chain, const VecX& q, const Vec3& gravity) {
  Eigen::Matrix4d t = homogeneous(chain.base);
  double u = 0.0;
  for (std::size_t i = 0; i < chain.joints.size(); ++i) {
    const auto& j = chain.joints[i];
    t = t * homogeneous(j.origin) * homogeneous(rodrigues(j.axis, q[static_cast<Eigen::Index>(i)]), Vec3::Zero());
    const Eigen::Vector4d com = t * j.com.homogeneous();
    u -= j.mass * gravity.dot(com.head<3>());
  }
  return u;
}

inline Vec3 randomUnit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do v = Vec3(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-3);
  return v.normalized();
}

inline Rotationd randomRotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(-std::numbers::pi, std::numbers::pi);
  return Rotationd::fromAxisAngle(randomUnit(rng), a(rng));
}

inline Posed randomPose(std::mt19937_64& rng, double spread = 0.5) {
  std::uniform_real_distribution<double> u(-spread, spread);
  return Posed(randomRotation(rng), Vec3(u(rng), u(rng), u(rng)));
}

inline SerialChaind randomChain(std::mt19937_64& rng, int joints, bool limits = true) {
  std::uniform_real_distribution<double> off(-0.3, 0.3), mass(0.1, 2.0), lim(0.5, 3.0);
  SerialChaind c;
  c.name = "random" + std::to_string(joints);
  c.base = randomPose(rng, 0.2);
  for (int i = 0; i < joints; ++i) {
    RevoluteJointd j;
    j.name = "j" + std::to_string(i);
    j.origin = Posed(randomRotation(rng), Vec3(off(rng), off(rng), off(rng)));
    j.axis = randomUnit(rng);
    if (limits) {
      j.lower = -lim(rng);
      j.upper = lim(rng);
    }
    j.mass = mass(rng);
    j.com = Vec3(off(rng), off(rng), off(rng));
    c.joints.push_back(j);
  }
  c.tool = randomPose(rng, 0.2);
  return c;
}

inline VecX randomAngles(std::mt19937_64& rng, const SerialChaind& chain) {
  VecX q(chain.dof());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const auto& j = chain.joints[static_cast<std::size_t>(i)];
    q[i] = std::uniform_real_distribution<double>(j.lower, j.upper)(rng);
  }
  return q;
}

// Planar arm in the xy plane: joints about z, links along x.
inline SerialChaind planarChain(const std::vector<double>& lengths) {
  SerialChaind c;
  c.name = "planar" + std::to_string(lengths.size());
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    RevoluteJointd j;
    j.name = "j" + std::to_string(i);
    if (i > 0) j.origin = Posed::fromTranslation(Vec3(lengths[i - 1], 0, 0));
    j.axis = Vec3::UnitZ();
    c.joints.push_back(j);
  }
  c.tool = Posed::fromTranslation(Vec3(lengths.back(), 0, 0));
  return c;
}

}  // namespace teleop::testing
