#include "teleop/keypoint_fusion.hpp"

#include <algorithm>
#include <cmath>

#include "teleop/errors.hpp"

namespace teleop {

void KeypointSet::validate() const {
  for (const auto& p : points)
    if (!p.allFinite()) throw StructuralError("keypoint set contains non-finite coordinates");
}

Vec3 palmNormal(const KeypointSet& k) {
  const Vec3 to_index = k[KeypointSet::kIndexBase] - k[KeypointSet::kWrist];
  const Vec3 to_pinky = k[KeypointSet::kPinkyBase] - k[KeypointSet::kWrist];
  const Vec3 n = to_index.cross(to_pinky);
  const double scale = to_index.norm() * to_pinky.norm();
  if (!(scale > 0.0) || n.norm() <= 1e-9 * scale)
    throw DegenerateGeometryError("wrist, index base and pinky base are collinear");
  return n.normalized();
}

ReliabilityWeights reliabilityWeights(const CameraView& first, const CameraView& second, const Vec3& normal) {
  // an edge-on camera contributes nothing, even when rounding leaves a sliver
  const auto facing = [&normal](const Vec3& axis) {
    const double c = std::abs(axis.dot(normal));
    return c <= 1e-6 ? 0.0 : c;
  };
  const double c1 = facing(first.optical_axis);
  const double c2 = facing(second.optical_axis);
  if (c1 == 0.0 && c2 == 0.0) throw NoReliableViewError("both cameras view the palm edge-on");
  const double sum = c1 + c2;
  return {c1 / sum, c2 / sum};
}

KeypointSet fuse(const CameraView& first, const CameraView& second) {
  if (!first.keypoints && !second.keypoints) throw NoDetectionError("no camera detected the hand");
  if (!second.keypoints) return *first.keypoints;
  if (!first.keypoints) return *second.keypoints;

  const KeypointSet& a = *first.keypoints;
  const KeypointSet& b = *second.keypoints;
  a.validate();
  b.validate();

  KeypointSet mean;
  for (int i = 0; i < KeypointSet::kCount; ++i) mean[i] = 0.5 * (a[i] + b[i]);
  const ReliabilityWeights w = reliabilityWeights(first, second, palmNormal(mean));

  KeypointSet fused;
  for (int i = 0; i < KeypointSet::kCount; ++i) {
    const Vec3 v = w.first * a[i] + w.second * b[i];
    // rounding can push a convex combination one ulp outside its endpoints
    fused[i] = v.cwiseMax(a[i].cwiseMin(b[i])).cwiseMin(a[i].cwiseMax(b[i]));
  }
  return fused;
}

}  // namespace teleop
