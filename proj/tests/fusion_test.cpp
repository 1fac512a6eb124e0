#include <gtest/gtest.h>

#include "support.hpp"
#include "teleop/hand_retarget.hpp"
#include "teleop/keypoint_fusion.hpp"

using namespace teleop;
using namespace teleop::testing;

namespace {

KeypointSet randomHand(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  KeypointSet k;
  for (auto& p : k.points) p = Vec3(u(rng), u(rng), u(rng) + 0.5);
  // a well-conditioned palm triad
  k[KeypointSet::kWrist] = Vec3(0, 0, 0.5);
  k[KeypointSet::kIndexBase] = Vec3(0.09, -0.02, 0.5);
  k[KeypointSet::kMiddleBase] = Vec3(0.095, 0.0, 0.5);
  k[KeypointSet::kPinkyBase] = Vec3(0.08, 0.04, 0.5);
  return k;
}

KeypointSet transformed(const KeypointSet& k, const Posed& t) {
  KeypointSet out;
  for (int i = 0; i < KeypointSet::kCount; ++i) out[i] = t * k[i];
  return out;
}

CameraView view(int id, const Vec3& axis, const std::optional<KeypointSet>& k) { return CameraView{id, axis, k}; }

// Axis at angle phi from the normal n, tilted towards a perpendicular of n.
Vec3 axisAt(const Vec3& n, double phi) {
  const Vec3 perp = n.unitOrthogonal();
  return (std::cos(phi) * n + std::sin(phi) * perp).normalized();
}

}  // namespace

TEST(PalmNormal, RightHandRuleAndScale) {
  KeypointSet k;
  k[KeypointSet::kIndexBase] = Vec3(1, 0, 0);
  k[KeypointSet::kPinkyBase] = Vec3(0, 1, 0);
  EXPECT_TRUE(palmNormal(k).isApprox(Vec3(0, 0, 1)));
  k[KeypointSet::kIndexBase] *= 5.0;
  k[KeypointSet::kPinkyBase] *= 5.0;
  EXPECT_TRUE(palmNormal(k).isApprox(Vec3(0, 0, 1)));
}

TEST(PalmNormal, RotatesWithTheHand) {
  std::mt19937_64 rng(11);
  KeypointSet k;
  k[KeypointSet::kIndexBase] = Vec3(1, 0, 0);
  k[KeypointSet::kPinkyBase] = Vec3(0, 1, 0);
  for (int i = 0; i < 100; ++i) {
    const Rotationd r = randomRotation(rng);
    const Vec3 n = palmNormal(transformed(k, Posed(r, Vec3::Zero())));
    EXPECT_LT((n - r * Vec3(0, 0, 1)).norm(), 1e-9);
    EXPECT_NEAR(n.norm(), 1.0, 1e-9);
  }
}

TEST(PalmNormal, CollinearIsDegenerate) {
  KeypointSet k;
  k[KeypointSet::kIndexBase] = Vec3(1, 0, 0);
  k[KeypointSet::kPinkyBase] = Vec3(2, 0, 0);
  EXPECT_THROW(palmNormal(k), DegenerateGeometryError);
}

TEST(Reliability, WorkedExamples) {
  const Vec3 n = Vec3::UnitZ();
  auto w = reliabilityWeights(view(1, axisAt(n, 0.0), {}), view(2, axisAt(n, std::numbers::pi / 2), {}), n);
  EXPECT_EQ(w.first, 1.0);
  EXPECT_EQ(w.second, 0.0);

  w = reliabilityWeights(view(1, axisAt(n, 0.4), {}), view(2, axisAt(n, -0.4), {}), n);
  EXPECT_NEAR(w.first, 0.5, 1e-15);
  EXPECT_NEAR(w.second, 0.5, 1e-15);

  w = reliabilityWeights(view(1, axisAt(n, std::numbers::pi / 3), {}), view(2, axisAt(n, 0.0), {}), n);
  EXPECT_NEAR(w.first, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(w.second, 2.0 / 3.0, 1e-12);

  // a camera behind the palm counts by its grazing angle
  w = reliabilityWeights(view(1, -n, {}), view(2, n, {}), n);
  EXPECT_NEAR(w.first, 0.5, 1e-15);
}

TEST(Reliability, BothGrazingThrows) {
  const Vec3 n = Vec3::UnitZ();
  EXPECT_THROW(reliabilityWeights(view(1, Vec3::UnitX(), {}), view(2, Vec3::UnitY(), {}), n), NoReliableViewError);
}

TEST(Reliability, WeightsSumToOne) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 n = randomUnit(rng);
    const auto w = reliabilityWeights(view(1, randomUnit(rng), {}), view(2, randomUnit(rng), {}), n);
    EXPECT_NEAR(w.first + w.second, 1.0, 1e-12);
    EXPECT_GE(w.first, 0.0);
    EXPECT_GE(w.second, 0.0);
  }
}

TEST(Fuse, WorkedExampleAndFallbacks) {
  std::mt19937_64 rng(13);
  const KeypointSet a = randomHand(rng);
  const Vec3 n = palmNormal(a);

  // identical views: output equals the input whatever the weights
  const KeypointSet same = fuse(view(1, axisAt(n, 0.2), a), view(2, axisAt(n, 1.1), a));
  for (int i = 0; i < KeypointSet::kCount; ++i) EXPECT_LT((same[i] - a[i]).norm(), 1e-15);

  // phi = (60, 0) degrees gives (1/3, 2/3); the views differ only in the x of
  // one fingertip so the palm normal is shared
  KeypointSet b = a;
  KeypointSet c = a;
  b[8] = Vec3(0, 0, 0);
  c[8] = Vec3(0.3, 0, 0);
  const KeypointSet f = fuse(view(1, axisAt(n, std::numbers::pi / 3), b), view(2, axisAt(n, 0.0), c));
  EXPECT_LT((f[8] - Vec3(0.2, 0, 0)).norm(), 1e-12);

  const KeypointSet only = fuse(view(1, Vec3::UnitZ(), b), view(2, Vec3::UnitZ(), std::nullopt));
  for (int i = 0; i < KeypointSet::kCount; ++i) EXPECT_EQ(only[i], b[i]);
  const KeypointSet other = fuse(view(1, Vec3::UnitZ(), std::nullopt), view(2, Vec3::UnitZ(), c));
  for (int i = 0; i < KeypointSet::kCount; ++i) EXPECT_EQ(other[i], c[i]);

  EXPECT_THROW(fuse(view(1, Vec3::UnitZ(), std::nullopt), view(2, Vec3::UnitX(), std::nullopt)), NoDetectionError);
}

TEST(Fuse, BetweennessAndSymmetry) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> noise(0.0, 0.004);
  for (int trial = 0; trial < 500; ++trial) {
    const KeypointSet base = transformed(randomHand(rng), randomPose(rng, 0.3));
    KeypointSet a = base, b = base;
    for (int i = 0; i < KeypointSet::kCount; ++i) {
      a[i] += Vec3(noise(rng), noise(rng), noise(rng));
      b[i] += Vec3(noise(rng), noise(rng), noise(rng));
    }
    const Vec3 ax1 = randomUnit(rng), ax2 = randomUnit(rng);
    KeypointSet f, g;
    try {
      f = fuse(view(1, ax1, a), view(2, ax2, b));
      g = fuse(view(2, ax2, b), view(1, ax1, a));
    } catch (const NoReliableViewError&) {
      continue;
    }
    for (int i = 0; i < KeypointSet::kCount; ++i) {
      for (int d = 0; d < 3; ++d) {
        EXPECT_GE(f[i][d], std::min(a[i][d], b[i][d]));
        EXPECT_LE(f[i][d], std::max(a[i][d], b[i][d]));
      }
      EXPECT_LT((f[i] - g[i]).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(KeypointVectors, InvariantToRigidMotion) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const KeypointSet k = randomHand(rng);
    const auto v0 = keypointVectors(k);
    const auto vt = keypointVectors(transformed(k, Posed::fromTranslation(Vec3(1.0, -2.0, 0.3))));
    const auto vr = keypointVectors(transformed(k, randomPose(rng, 1.0)));
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_LT((v0[i] - vt[i]).norm(), 1e-12);
      EXPECT_LT((v0[i] - vr[i]).norm(), 1e-9);
    }
  }
}

TEST(KeypointVectors, TipsAtWristGiveZero) {
  std::mt19937_64 rng(16);
  KeypointSet k = randomHand(rng);
  for (int tip : KeypointSet::kTips) k[tip] = k[KeypointSet::kWrist];
  for (const Vec3& v : keypointVectors(k)) EXPECT_EQ(v.norm(), 0.0);
}

TEST(KeypointVectors, PalmFrameIsRightHanded) {
  std::mt19937_64 rng(17);
  const KeypointSet k = randomHand(rng);
  const Mat3 r = palmFrame(k);
  EXPECT_TRUE((r.transpose() * r).isIdentity(1e-12));
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  EXPECT_LT((r.col(2) - palmNormal(k)).norm(), 1e-12);
}
