#include <gtest/gtest.h>

#include "support.hpp"
#include "teleop/grasp_templates.hpp"
#include "teleop/hand_retarget.hpp"

using namespace teleop;
using namespace teleop::testing;

namespace {

constexpr double kFingerLength = 0.05;

// One finger, one flexion joint about y, link along x.
HandModel oneDofHand() {
  Finger f;
  f.name = "index";
  f.chain.name = "index";
  RevoluteJointd j;
  j.axis = Vec3::UnitY();
  j.lower = 0.0;
  j.upper = 1.6;
  f.chain.joints.push_back(j);
  f.chain.tool = Posed::fromTranslation(Vec3(kFingerLength, 0, 0));
  f.coupling = Eigen::MatrixXd::Identity(1, 1);
  f.offset = VecX::Zero(1);
  f.first = 0;
  f.count = 1;
  return HandModel("one", {f}, VecX::Constant(1, 0.0), VecX::Constant(1, 1.6));
}

Vec3 tipOracle(double q) { return Vec3(kFingerLength * std::cos(q), 0.0, -kFingerLength * std::sin(q)); }

const HandModel& shippedHand() {
  static const HandModel hand = loadHandModel(dataPath("hands/inspire_surrogate.yaml"));
  return hand;
}

JointVectord randomHandQ(std::mt19937_64& rng, const HandModel& h) {
  VecX q(h.dof());
  for (Eigen::Index i = 0; i < q.size(); ++i)
    q[i] = std::uniform_real_distribution<double>(h.lower()[i], h.upper()[i])(rng);
  return h.make(q);
}

std::vector<Vec3> targetsFor(const HandModel& h, const JointVectord& q, double alpha) {
  std::vector<Vec3> v = h.fingertipVectors(q);
  for (Vec3& x : v) x /= alpha;
  return v;
}

}  // namespace

TEST(Retarget, DefaultsAreTheDocumentedOnes) {
  const RetargetParams p;
  EXPECT_EQ(p.alpha, 1.5);
  EXPECT_EQ(p.smoothness, 0.1);
  EXPECT_EQ(p.max_iterations, 25);
  EXPECT_EQ(p.tolerance, 1e-8);
  EXPECT_EQ(p.initial_damping, 1e-3);
}

TEST(Retarget, OneDofMatchesGridSearch) {
  const HandModel hand = oneDofHand();
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> u(0.0, 1.6);
  for (double smoothness : {0.0, 0.1}) {
    RetargetParams p;
    p.smoothness = smoothness;
    for (int trial = 0; trial < 50; ++trial) {
      const double q_star = u(rng), q_prev = u(rng);
      const Vec3 v = tipOracle(q_star) / p.alpha;
      const JointVectord q = retarget(std::span<const Vec3>(&v, 1), hand.make(VecX::Constant(1, q_prev)), hand, p);

      double best = 0.0, best_cost = std::numeric_limits<double>::infinity();
      for (int i = 0; i <= 1600; ++i) {
        const double g = i * 1e-3;
        const double cost = std::pow(p.length_scale, 2) * (p.alpha * v - tipOracle(g)).squaredNorm() +
                            smoothness * (g - q_prev) * (g - q_prev);
        if (cost < best_cost) best_cost = cost, best = g;
      }
      EXPECT_NEAR(q[0], best, 2e-3) << "smoothness " << smoothness << " trial " << trial;
    }
  }
}

TEST(Retarget, ObjectiveNeverIncreases) {
  const HandModel& hand = shippedHand();
  std::mt19937_64 rng(21);
  std::normal_distribution<double> noise(0.0, 0.01);
  const RetargetParams p;
  for (int call = 0; call < 1000; ++call) {
    const JointVectord q_prev = randomHandQ(rng, hand);
    std::vector<Vec3> v = targetsFor(hand, randomHandQ(rng, hand), p.alpha);
    for (Vec3& x : v) x += Vec3(noise(rng), noise(rng), noise(rng));
    const JointVectord q = retarget(v, q_prev, hand, p);
    EXPECT_LE(retargetObjective(v, q, q_prev, hand, p), retargetObjective(v, q_prev, q_prev, hand, p));
    EXPECT_TRUE(hand.withinLimits(q));
  }
}

TEST(Retarget, AlreadyOptimalStays) {
  const HandModel& hand = shippedHand();
  std::mt19937_64 rng(22);
  const JointVectord q_prev = randomHandQ(rng, hand);
  const JointVectord q = retarget(targetsFor(hand, q_prev, 1.5), q_prev, hand);
  EXPECT_LT((q.angles - q_prev.angles).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Retarget, HeavySmoothingPinsToPrevious) {
  const HandModel& hand = shippedHand();
  std::mt19937_64 rng(23);
  RetargetParams p;
  p.smoothness = 1e6;
  for (int trial = 0; trial < 20; ++trial) {
    const JointVectord q_prev = randomHandQ(rng, hand);
    const JointVectord q = retarget(targetsFor(hand, randomHandQ(rng, hand), p.alpha), q_prev, hand, p);
    EXPECT_LT((q.angles - q_prev.angles).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(Retarget, RecoversPoseWithoutSmoothing) {
  const HandModel& hand = shippedHand();
  std::mt19937_64 rng(24);
  RetargetParams p;
  p.smoothness = 0.0;
  p.max_iterations = 200;
  const JointVectord q_true = randomHandQ(rng, hand);
  JointVectord q = hand.make((q_true.angles + 0.1 * VecX::Ones(hand.dof())).cwiseMin(hand.upper()));
  q = retarget(targetsFor(hand, q_true, p.alpha), q, hand, p);
  EXPECT_LT((q.angles - q_true.angles).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Retarget, ScalingIdentity) {
  const HandModel& hand = shippedHand();
  std::mt19937_64 rng(25);
  RetargetParams p;
  const JointVectord q = randomHandQ(rng, hand), q_prev = randomHandQ(rng, hand);
  std::vector<Vec3> v = targetsFor(hand, randomHandQ(rng, hand), p.alpha);
  const double base = retargetObjective(v, q, q_prev, hand, p);
  for (double c : {0.5, 2.0, 7.0}) {
    std::vector<Vec3> scaled = v;
    for (Vec3& x : scaled) x *= c;
    RetargetParams ps = p;
    ps.alpha = p.alpha / c;
    EXPECT_NEAR(retargetObjective(scaled, q, q_prev, hand, ps), base, 1e-9 * std::max(1.0, base));
  }
}

TEST(Retarget, RejectsNonFiniteInput) {
  const HandModel& hand = shippedHand();
  std::vector<Vec3> v(5, Vec3::Zero());
  v[2].x() = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(retarget(v, hand.zero(), hand), StructuralError);
  EXPECT_THROW(retarget(std::vector<Vec3>(3, Vec3::Zero()), hand.zero(), hand), StructuralError);
}

TEST(HandModel, JacobianMatchesDifferences) {
  const HandModel& hand = shippedHand();
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 20; ++trial) {
    const JointVectord q = randomHandQ(rng, hand);
    const Eigen::MatrixXd jac = hand.fingertipJacobian(q);
    for (Eigen::Index i = 0; i < hand.dof(); ++i) {
      JointVectord qp = q, qm = q;
      qp[i] += 1e-6;
      qm[i] -= 1e-6;
      const auto tp = hand.fingertipVectors(qp), tm = hand.fingertipVectors(qm);
      for (std::size_t f = 0; f < tp.size(); ++f) {
        const Vec3 d = (tp[f] - tm[f]) / 2e-6;
        EXPECT_LT((jac.block<3, 1>(3 * static_cast<Eigen::Index>(f), i) - d).norm(), 1e-6);
      }
    }
  }
}

namespace {

GraspTemplateLibrary randomLibrary(std::mt19937_64& rng, const HandModel& hand, std::size_t n) {
  std::vector<GraspTemplate> t;
  for (std::size_t i = 0; i < n; ++i)
    t.push_back(GraspTemplate{"t" + std::to_string(i), HandSide::Either, "task" + std::to_string(i % 3),
                              randomHandQ(rng, hand)});
  return GraspTemplateLibrary(hand, t);
}

std::size_t bruteForce(const JointVectord& q, const GraspTemplateLibrary& lib) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lib.size(); ++i) {
    double d = 0.0;
    for (Eigen::Index k = 0; k < q.size(); ++k) d += std::pow(q[k] - lib[i].q[k], 2);
    if (d < best_d) best_d = d, best = i;
  }
  return best;
}

}  // namespace

TEST(Snap, MatchesBruteForce) {
  const HandModel& hand = shippedHand();
  std::mt19937_64 rng(30);
  const std::vector<std::string> all = {"task0", "task1", "task2"};
  for (std::size_t n = 1; n <= 16; ++n) {
    const GraspTemplateLibrary lib = randomLibrary(rng, hand, n);
    for (int trial = 0; trial < 100; ++trial) {
      const JointVectord q = randomHandQ(rng, hand);
      const SnapResult r = snapToTemplate(q, lib, all);
      EXPECT_EQ(r.index, bruteForce(q, lib));
      EXPECT_EQ(r.name, lib[r.index].name);
      EXPECT_EQ(r.q.angles, lib[r.index].q.angles);
    }
  }
}

TEST(Snap, ExactMatchAndTieBreak) {
  const HandModel& hand = shippedHand();
  const GraspTemplateLibrary lib = loadTemplateLibrary(dataPath("templates/medical_grasps.yaml"), hand);
  EXPECT_EQ(lib.size(), 11u);
  EXPECT_EQ(snapToTemplate(lib.at("bag-open").q, lib, lib.tasks()).name, "bag-open");

  VecX mid = VecX::Constant(hand.dof(), 0.5);
  VecX a = mid, b = mid;
  a[0] -= 0.25;
  b[0] += 0.25;
  const GraspTemplateLibrary pair(hand, {GraspTemplate{"first", HandSide::Either, "x", hand.make(a)},
                                         GraspTemplate{"second", HandSide::Either, "x", hand.make(b)}});
  const SnapResult r = snapToTemplate(hand.make(mid), pair, {"x"});
  EXPECT_EQ(r.index, 0u);
  EXPECT_EQ(r.name, "first");
}

TEST(Snap, FiltersByTaskAndSide) {
  const HandModel& hand = shippedHand();
  const GraspTemplateLibrary lib = loadTemplateLibrary(dataPath("templates/medical_grasps.yaml"), hand);
  const JointVectord q = lib.at("tube").q;
  EXPECT_EQ(snapToTemplate(q, lib, {"tube", "stylet"}, HandSide::Left).name, "tube");
  EXPECT_EQ(snapToTemplate(q, lib, {"tube", "stylet"}, HandSide::Right).name, "stylet");
  EXPECT_THROW(snapToTemplate(q, lib, {}), ConfigurationError);
  EXPECT_THROW(snapToTemplate(q, lib, {"tube"}, HandSide::Right), ConfigurationError);
}

TEST(Snap, HysteresisHoldsTheIncumbent) {
  const HandModel& hand = shippedHand();
  VecX a = VecX::Constant(hand.dof(), 0.5), b = a;
  b[0] += 0.4;
  const GraspTemplateLibrary lib(hand, {GraspTemplate{"a", HandSide::Either, "x", hand.make(a)},
                                        GraspTemplate{"b", HandSide::Either, "x", hand.make(b)}});
  TemplateSnapper snapper(0.9);
  VecX q = a;
  EXPECT_EQ(snapper.update(hand.make(q), lib, {"x"}).name, "a");
  // just past the midpoint: b is nearer but not by 10%
  q[0] = a[0] + 0.21;
  EXPECT_EQ(snapper.update(hand.make(q), lib, {"x"}).name, "a");
  EXPECT_EQ(snapToTemplate(hand.make(q), lib, {"x"}).name, "b");
  q[0] = a[0] + 0.3;
  EXPECT_EQ(snapper.update(hand.make(q), lib, {"x"}).name, "b");
}

TEST(TemplateFile, RejectsBadLibraries) {
  const HandModel& hand = shippedHand();
  const std::string q10 = "[0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]";
  EXPECT_THROW(parseTemplateLibrary("format: 1\ntemplates:\n  - {name: a, side: either, task: a, q: " + q10 +
                                        "}\n  - {name: a, side: left, task: b, q: " + q10 + "}\n",
                                    hand),
               ConfigurationError);
  EXPECT_THROW(parseTemplateLibrary("format: 1\ntemplates:\n  - {name: a, side: either, task: a, q: "
                                    "[9, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]}\n",
                                    hand),
               ConfigurationError);
  EXPECT_THROW(parseTemplateLibrary("format: 3\ntemplates: []\n", hand), UnsupportedFormatError);
}
