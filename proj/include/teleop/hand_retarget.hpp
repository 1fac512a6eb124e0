#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "teleop/keypoint_fusion.hpp"
#include "teleop/kinematics.hpp"

namespace teleop {

/// One robot finger rooted in the palm frame. The finger's chain angles are
/// an affine map of its actuated joints: angles = coupling * actuated + offset.
struct Finger {
  std::string name;
  SerialChaind chain;
  Eigen::MatrixXd coupling;
  VecX offset;
  Eigen::Index first = 0;  ///< index of the first actuated joint in the hand vector
  Eigen::Index count = 0;  ///< number of actuated joints owned by this finger
};

/// Robot hand as a set of fingers sharing the palm frame. Fingertip vectors
/// run from the palm origin to each fingertip, palm frame.
class HandModel {
 public:
  HandModel() = default;
  HandModel(std::string name, std::vector<Finger> fingers, VecX lower, VecX upper);

  const std::string& name() const { return name_; }
  const std::vector<Finger>& fingers() const { return fingers_; }
  std::size_t fingerCount() const { return fingers_.size(); }
  Eigen::Index dof() const { return lower_.size(); }
  const VecX& lower() const { return lower_; }
  const VecX& upper() const { return upper_; }

  JointVectord zero() const;
  JointVectord make(const VecX& angles) const;
  void check(const JointVectord& q) const;
  JointVectord clamp(JointVectord q) const;
  bool withinLimits(const JointVectord& q) const;

  std::vector<Vec3> fingertipVectors(const JointVectord& q) const;
  /// 3*fingers x dof, stacked d(fingertip)/dq.
  Eigen::MatrixXd fingertipJacobian(const JointVectord& q) const;

 private:
  JointVectord chainAngles(const Finger& f, const JointVectord& q) const;

  std::string name_;
  std::vector<Finger> fingers_;
  VecX lower_;
  VecX upper_;
};

HandModel loadHandModel(const std::string& path);
HandModel parseHandModel(const std::string& text);

/// Wrist-to-fingertip vectors (thumb..pinky) expressed in the palm frame:
/// z along the palm normal, x along the wrist-to-middle-base direction
/// projected onto the palm plane.
std::array<Vec3, 5> keypointVectors(const KeypointSet& k);

/// Palm frame rotation (columns x, y, z in world coordinates) used by
/// keypointVectors.
Mat3 palmFrame(const KeypointSet& k);

struct RetargetParams {
  double alpha = 1.5;
  double smoothness = 0.1;
  /// Residual units per metre. Fingertip residuals are measured in
  /// centimetres so that `smoothness` trades against a hand-sized error.
  double length_scale = 100.0;
  int max_iterations = 25;
  double tolerance = 1e-8;
  double initial_damping = 1e-3;

  void validate() const;
};

/// sum_i |s (alpha v_i - f_i(q))|^2 + smoothness |q - q_prev|^2 with s the
/// length scale.
double retargetObjective(std::span<const Vec3> v, const JointVectord& q, const JointVectord& q_prev,
                         const HandModel& model, const RetargetParams& p);

/// Levenberg-damped Gauss-Newton minimization of retargetObjective, warm
/// started at q_prev and projected onto the joint limits. Only decreasing
/// steps are accepted.
JointVectord retarget(std::span<const Vec3> v, const JointVectord& q_prev, const HandModel& model,
                      const RetargetParams& p = {});

}  // namespace teleop
