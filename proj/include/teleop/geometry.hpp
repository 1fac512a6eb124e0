#pragma once

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace teleop {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;
template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;

/// Unit quaternion kept normalized with a non-negative scalar part, so each
/// physical orientation has exactly one representation.
template <typename Scalar>
class Rotation {
 public:
  using Quaternion = Eigen::Quaternion<Scalar>;

  Rotation() : q_(Quaternion::Identity()) {}
  explicit Rotation(const Quaternion& q) : q_(q) { canonicalize(); }
  explicit Rotation(const Matrix3<Scalar>& m) : q_(m) { canonicalize(); }

  static Rotation identity() { return Rotation(); }

  static Rotation fromAxisAngle(const Vector3<Scalar>& axis, Scalar angle) {
    return Rotation(Quaternion(Eigen::AngleAxis<Scalar>(angle, axis.normalized())));
  }

  /// Exponential map of a rotation vector (axis * angle).
  static Rotation exp(const Vector3<Scalar>& rotvec) {
    const Scalar angle = rotvec.norm();
    if (angle < Scalar(1e-12)) {
      const Vector3<Scalar> half = rotvec / Scalar(2);
      return Rotation(Quaternion(Scalar(1), half.x(), half.y(), half.z()));
    }
    return fromAxisAngle(rotvec / angle, angle);
  }

  /// Roll-pitch-yaw (fixed X, then Y, then Z).
  static Rotation fromRpy(Scalar roll, Scalar pitch, Scalar yaw) {
    using AA = Eigen::AngleAxis<Scalar>;
    return Rotation(Quaternion(AA(yaw, Vector3<Scalar>::UnitZ()) *
                               AA(pitch, Vector3<Scalar>::UnitY()) *
                               AA(roll, Vector3<Scalar>::UnitX())));
  }

  const Quaternion& quaternion() const { return q_; }
  Scalar w() const { return q_.w(); }
  Scalar x() const { return q_.x(); }
  Scalar y() const { return q_.y(); }
  Scalar z() const { return q_.z(); }

  Matrix3<Scalar> matrix() const { return q_.toRotationMatrix(); }

  Rotation inverse() const { return Rotation(q_.conjugate()); }

  Vector3<Scalar> operator*(const Vector3<Scalar>& v) const { return q_ * v; }

  Rotation operator*(const Rotation& other) const { return Rotation(q_ * other.q_); }

  /// Rotation vector with angle in [0, pi].
  Vector3<Scalar> log() const {
    const Vector3<Scalar> v = q_.vec();
    const Scalar s = v.norm();
    if (s < Scalar(1e-12)) return Scalar(2) * v;
    const Scalar angle = Scalar(2) * std::atan2(s, q_.w());
    return v * (angle / s);
  }

  Scalar angle() const { return log().norm(); }

  template <typename Other>
  Rotation<Other> cast() const {
    return Rotation<Other>(q_.template cast<Other>());
  }

 private:
  void canonicalize() {
    q_.normalize();
    if (q_.w() < Scalar(0)) q_.coeffs() = -q_.coeffs();
  }

  Quaternion q_;
};

/// Linear and angular velocity, both world frame.
template <typename Scalar>
struct Twist {
  Vector3<Scalar> linear = Vector3<Scalar>::Zero();
  Vector3<Scalar> angular = Vector3<Scalar>::Zero();

  static Twist zero() { return Twist{}; }
};

/// Rigid transform. Maps points from the child frame into the parent frame.
template <typename Scalar>
struct Pose {
  Rotation<Scalar> rotation;
  Vector3<Scalar> position = Vector3<Scalar>::Zero();

  Pose() = default;
  Pose(const Rotation<Scalar>& r, const Vector3<Scalar>& p) : rotation(r), position(p) {}

  static Pose identity() { return Pose(); }
  static Pose fromTranslation(const Vector3<Scalar>& p) { return Pose(Rotation<Scalar>(), p); }

  Pose operator*(const Pose& other) const {
    return Pose(rotation * other.rotation, position + rotation * other.position);
  }

  Vector3<Scalar> operator*(const Vector3<Scalar>& point) const {
    return position + rotation * point;
  }

  Pose inverse() const {
    const Rotation<Scalar> inv = rotation.inverse();
    return Pose(inv, -(inv * position));
  }

  Matrix4<Scalar> matrix() const {
    Matrix4<Scalar> m = Matrix4<Scalar>::Identity();
    m.template topLeftCorner<3, 3>() = rotation.matrix();
    m.template topRightCorner<3, 1>() = position;
    return m;
  }
};

/// Pose difference `a ⊖ b`: position difference and the rotation log of
/// b⁻¹·a expressed in b's frame.
template <typename Scalar>
Vector6<Scalar> poseError(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  Vector6<Scalar> e;
  e.template head<3>() = a.position - b.position;
  e.template tail<3>() = (b.rotation.inverse() * a.rotation).log();
  return e;
}

/// Inverse of poseError: returns `b ⊕ e`.
template <typename Scalar>
Pose<Scalar> poseRetract(const Pose<Scalar>& b, const Vector6<Scalar>& e) {
  return Pose<Scalar>(b.rotation * Rotation<Scalar>::exp(e.template tail<3>()),
                      b.position + e.template head<3>());
}

using Rotationd = Rotation<double>;
using Posed = Pose<double>;
using Twistd = Twist<double>;
using Vec3 = Vector3<double>;
using Mat3 = Matrix3<double>;
using Vec6 = Vector6<double>;

}  // namespace teleop
