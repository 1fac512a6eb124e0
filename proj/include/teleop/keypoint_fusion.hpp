#pragma once

#include <array>
#include <optional>

#include "teleop/geometry.hpp"

namespace teleop {

/// 21-point hand skeleton: wrist, then four points per finger from base to tip
/// (thumb, index, middle, ring, pinky). World frame, meters.
struct KeypointSet {
  static constexpr int kCount = 21;
  static constexpr int kWrist = 0;
  static constexpr int kIndexBase = 5;
  static constexpr int kMiddleBase = 9;
  static constexpr int kPinkyBase = 17;
  static constexpr std::array<int, 5> kTips = {4, 8, 12, 16, 20};

  std::array<Vec3, kCount> points{};

  const Vec3& operator[](int i) const { return points[static_cast<std::size_t>(i)]; }
  Vec3& operator[](int i) { return points[static_cast<std::size_t>(i)]; }

  /// Throws StructuralError on non-finite coordinates.
  void validate() const;
};

struct CameraView {
  int camera = 1;
  Vec3 optical_axis = Vec3::UnitZ();
  std::optional<KeypointSet> keypoints;  ///< absent on detection failure
};

/// Unit normal of the palm, (index base - wrist) x (pinky base - wrist).
/// Throws DegenerateGeometryError when the three points are collinear.
Vec3 palmNormal(const KeypointSet& k);

struct ReliabilityWeights {
  double first = 0.5;
  double second = 0.5;
};

/// Cosine reliability of each view against the hand normal, normalized to
/// sum to one. The cosine uses |axis . normal|. Throws NoReliableViewError
/// when both cosines are at or below 1e-6.
ReliabilityWeights reliabilityWeights(const CameraView& first, const CameraView& second, const Vec3& normal);

/// Weighted combination of the two views. The weighting normal comes from the
/// mean of both views' palm triads. With a single detection that view is
/// passed through unchanged; with none, NoDetectionError.
KeypointSet fuse(const CameraView& first, const CameraView& second);

}  // namespace teleop
