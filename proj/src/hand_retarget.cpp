#include "teleop/hand_retarget.hpp"

#include <algorithm>
#include <cmath>

#include "chain_yaml.hpp"
#include "teleop/errors.hpp"
#include "yaml_util.hpp"

namespace teleop {

HandModel::HandModel(std::string name, std::vector<Finger> fingers, VecX lower, VecX upper)
    : name_(std::move(name)), fingers_(std::move(fingers)), lower_(std::move(lower)), upper_(std::move(upper)) {
  if (fingers_.empty()) throw StructuralError("hand model '" + name_ + "' has no fingers");
  if (lower_.size() != upper_.size()) throw StructuralError("hand model limit vectors differ in length");
  Eigen::Index expected = 0;
  for (const auto& f : fingers_) {
    if (f.first != expected) throw StructuralError("finger '" + f.name + "' actuated joints are not contiguous");
    if (f.coupling.rows() != f.chain.dof() || f.coupling.cols() != f.count || f.offset.size() != f.chain.dof())
      throw StructuralError("finger '" + f.name + "' coupling has the wrong shape");
    expected += f.count;
  }
  if (expected != lower_.size()) throw StructuralError("hand model joint count does not match its limits");
  for (Eigen::Index i = 0; i < lower_.size(); ++i)
    if (!(lower_[i] < upper_[i])) throw StructuralError("hand model joint " + std::to_string(i) + " has lower >= upper");
}

JointVectord HandModel::zero() const { return clamp(JointVectord{VecX::Zero(dof()), name_}); }

JointVectord HandModel::make(const VecX& angles) const {
  JointVectord q{angles, name_};
  check(q);
  return q;
}

void HandModel::check(const JointVectord& q) const {
  if (q.chain != name_) throw StructuralError("joint vector tagged '" + q.chain + "' used with hand '" + name_ + "'");
  if (q.size() != dof())
    throw StructuralError("hand '" + name_ + "' expects " + std::to_string(dof()) + " joints, got " +
                          std::to_string(q.size()));
}

JointVectord HandModel::clamp(JointVectord q) const {
  check(q);
  q.angles = q.angles.cwiseMax(lower_).cwiseMin(upper_);
  return q;
}

bool HandModel::withinLimits(const JointVectord& q) const {
  check(q);
  return (q.angles.array() >= lower_.array()).all() && (q.angles.array() <= upper_.array()).all();
}

JointVectord HandModel::chainAngles(const Finger& f, const JointVectord& q) const {
  return JointVectord{f.coupling * q.angles.segment(f.first, f.count) + f.offset, f.chain.name};
}

std::vector<Vec3> HandModel::fingertipVectors(const JointVectord& q) const {
  check(q);
  std::vector<Vec3> tips;
  tips.reserve(fingers_.size());
  for (const auto& f : fingers_) tips.push_back(forwardKinematics(f.chain, chainAngles(f, q)).position);
  return tips;
}

Eigen::MatrixXd HandModel::fingertipJacobian(const JointVectord& q) const {
  check(q);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(3 * static_cast<Eigen::Index>(fingers_.size()), dof());
  for (std::size_t i = 0; i < fingers_.size(); ++i) {
    const Finger& f = fingers_[i];
    const Jacobiand j = geometricJacobian(f.chain, chainAngles(f, q));
    jac.block(3 * static_cast<Eigen::Index>(i), f.first, 3, f.count) = j.topRows<3>() * f.coupling;
  }
  return jac;
}

namespace {

HandModel handFromNode(const YAML::Node& root) {
  yaml::requireFormat(root, "hand model");
  const auto name = yaml::as<std::string>(yaml::require(root, "name", "hand model"), "hand.name");
  const YAML::Node list = yaml::require(root, "fingers", "hand model");
  if (!list.IsSequence()) throw ParseError("hand.fingers: expected a list", yaml::lineOf(list));

  std::vector<Finger> fingers;
  std::vector<double> lower, upper;
  for (const auto& node : list) {
    Finger f;
    f.name = yaml::as<std::string>(yaml::require(node, "name", "finger"), "finger.name");
    f.chain = detail::chainFromYaml(node, name + "/" + f.name);
    f.first = static_cast<Eigen::Index>(lower.size());
    if (const YAML::Node c = node["coupling"]) {
      const YAML::Node rows = yaml::require(c, "matrix", "coupling");
      const auto limits = yaml::require(c, "actuated_limits", "coupling");
      f.count = static_cast<Eigen::Index>(limits.size());
      f.coupling.resize(f.chain.dof(), f.count);
      if (static_cast<Eigen::Index>(rows.size()) != f.chain.dof())
        throw ParseError("coupling.matrix: expected one row per joint", yaml::lineOf(rows));
      for (Eigen::Index r = 0; r < f.chain.dof(); ++r) {
        const auto row = yaml::doubles(rows[static_cast<std::size_t>(r)], "coupling.matrix");
        if (static_cast<Eigen::Index>(row.size()) != f.count)
          throw ParseError("coupling.matrix: row width must match actuated_limits", yaml::lineOf(rows));
        for (Eigen::Index col = 0; col < f.count; ++col) f.coupling(r, col) = row[static_cast<std::size_t>(col)];
      }
      f.offset = c["offset"] ? yaml::vecX(c["offset"], "coupling.offset") : VecX::Zero(f.chain.dof());
      for (const auto& lim : limits) {
        const auto lu = yaml::doubles(lim, "coupling.actuated_limits");
        if (lu.size() != 2) throw ParseError("actuated limit must be [lower, upper]", yaml::lineOf(lim));
        lower.push_back(lu[0]);
        upper.push_back(lu[1]);
      }
    } else {
      f.count = f.chain.dof();
      f.coupling = Eigen::MatrixXd::Identity(f.count, f.count);
      f.offset = VecX::Zero(f.count);
      for (const auto& j : f.chain.joints) {
        lower.push_back(j.lower);
        upper.push_back(j.upper);
      }
    }
    fingers.push_back(std::move(f));
  }
  return HandModel(name, std::move(fingers), Eigen::Map<VecX>(lower.data(), static_cast<Eigen::Index>(lower.size())),
                   Eigen::Map<VecX>(upper.data(), static_cast<Eigen::Index>(upper.size())));
}

}  // namespace

HandModel loadHandModel(const std::string& path) { return handFromNode(yaml::loadFile(path)); }
HandModel parseHandModel(const std::string& text) { return handFromNode(yaml::loadString(text)); }

Mat3 palmFrame(const KeypointSet& k) {
  const Vec3 z = palmNormal(k);
  const Vec3 forward = k[KeypointSet::kMiddleBase] - k[KeypointSet::kWrist];
  const Vec3 in_plane = forward - forward.dot(z) * z;
  if (in_plane.norm() <= 1e-9 * std::max(forward.norm(), 1e-300))
    throw DegenerateGeometryError("middle-finger base lies on the palm normal");
  const Vec3 x = in_plane.normalized();
  Mat3 r;
  r << x, z.cross(x), z;
  return r;
}

std::array<Vec3, 5> keypointVectors(const KeypointSet& k) {
  k.validate();
  const Mat3 r = palmFrame(k);
  std::array<Vec3, 5> v;
  for (std::size_t i = 0; i < 5; ++i) v[i] = r.transpose() * (k[KeypointSet::kTips[i]] - k[KeypointSet::kWrist]);
  return v;
}

void RetargetParams::validate() const {
  if (!(alpha > 0.0)) throw ConfigurationError("retarget alpha must be positive");
  if (!(smoothness >= 0.0)) throw ConfigurationError("retarget smoothness must be non-negative");
  if (!(length_scale > 0.0)) throw ConfigurationError("retarget length_scale must be positive");
  if (max_iterations < 1) throw ConfigurationError("retarget max_iterations must be at least 1");
}

namespace {

void checkInputs(std::span<const Vec3> v, const JointVectord& q_prev, const HandModel& model) {
  model.check(q_prev);
  if (v.size() != model.fingerCount())
    throw StructuralError("expected " + std::to_string(model.fingerCount()) + " keypoint vectors, got " +
                          std::to_string(v.size()));
  for (const auto& x : v)
    if (!x.allFinite()) throw StructuralError("keypoint vector is not finite");
  if (!q_prev.angles.allFinite()) throw StructuralError("previous joint vector is not finite");
}

// Residual r(q) with objective = |r|^2.
VecX residual(std::span<const Vec3> v, const JointVectord& q, const JointVectord& q_prev, const HandModel& model,
              const RetargetParams& p) {
  const auto tips = model.fingertipVectors(q);
  const auto n = static_cast<Eigen::Index>(tips.size());
  VecX r(3 * n + model.dof());
  for (Eigen::Index i = 0; i < n; ++i)
    r.segment<3>(3 * i) = p.length_scale * (p.alpha * v[static_cast<std::size_t>(i)] - tips[static_cast<std::size_t>(i)]);
  r.tail(model.dof()) = std::sqrt(p.smoothness) * (q.angles - q_prev.angles);
  return r;
}

}  // namespace

double retargetObjective(std::span<const Vec3> v, const JointVectord& q, const JointVectord& q_prev,
                         const HandModel& model, const RetargetParams& p) {
  checkInputs(v, q_prev, model);
  return residual(v, q, q_prev, model, p).squaredNorm();
}

JointVectord retarget(std::span<const Vec3> v, const JointVectord& q_prev, const HandModel& model,
                      const RetargetParams& p) {
  p.validate();
  checkInputs(v, q_prev, model);

  const Eigen::Index n = model.dof();
  const Eigen::Index m = 3 * static_cast<Eigen::Index>(model.fingerCount());
  JointVectord q = model.clamp(q_prev);
  VecX r = residual(v, q, q_prev, model, p);
  double cost = r.squaredNorm();
  double mu = p.initial_damping;

  for (int iter = 0; iter < p.max_iterations; ++iter) {
    Eigen::MatrixXd jac(m + n, n);
    jac.topRows(m) = -p.length_scale * model.fingertipJacobian(q);
    jac.bottomRows(n) = std::sqrt(p.smoothness) * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd h = jac.transpose() * jac;
    const VecX g = jac.transpose() * r;
    if (g.norm() == 0.0) break;

    bool accepted = false;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      Eigen::MatrixXd damped = h;
      damped.diagonal().array() += mu;
      JointVectord candidate{q.angles - damped.ldlt().solve(g), q.chain};
      candidate = model.clamp(candidate);
      const VecX r_new = residual(v, candidate, q_prev, model, p);
      const double cost_new = r_new.squaredNorm();
      if (cost_new < cost) {
        const double decrease = cost - cost_new;
        q = std::move(candidate);
        r = r_new;
        cost = cost_new;
        mu = std::max(mu / 10.0, 1e-12);
        accepted = true;
        if (decrease < p.tolerance) return q;
      } else {
        mu *= 10.0;
      }
    }
    if (!accepted) break;
  }
  return q;
}

}  // namespace teleop
