#include "teleop/grasp_templates.hpp"

#include <algorithm>
#include <set>

#include "teleop/errors.hpp"
#include "yaml_util.hpp"

namespace teleop {

GraspTemplateLibrary::GraspTemplateLibrary(const HandModel& hand, std::vector<GraspTemplate> templates)
    : templates_(std::move(templates)) {
  std::set<std::string> seen;
  for (auto& t : templates_) {
    if (!seen.insert(t.name).second) throw ConfigurationError("duplicate template name '" + t.name + "'");
    t.q.chain = hand.name();
    if (t.q.size() != hand.dof())
      throw ConfigurationError("template '" + t.name + "' has " + std::to_string(t.q.size()) + " joints, hand has " +
                               std::to_string(hand.dof()));
    if (!hand.withinLimits(t.q)) throw ConfigurationError("template '" + t.name + "' violates the hand joint limits");
  }
}

std::optional<std::size_t> GraspTemplateLibrary::find(const std::string& name) const {
  for (std::size_t i = 0; i < templates_.size(); ++i)
    if (templates_[i].name == name) return i;
  return std::nullopt;
}

const GraspTemplate& GraspTemplateLibrary::at(const std::string& name) const {
  const auto i = find(name);
  if (!i) throw ConfigurationError("unknown grasp template '" + name + "'");
  return templates_[*i];
}

std::vector<std::string> GraspTemplateLibrary::names() const {
  std::vector<std::string> out;
  for (const auto& t : templates_) out.push_back(t.name);
  return out;
}

std::vector<std::string> GraspTemplateLibrary::tasks() const {
  std::vector<std::string> out;
  for (const auto& t : templates_)
    if (std::find(out.begin(), out.end(), t.task) == out.end()) out.push_back(t.task);
  return out;
}

namespace {

HandSide parseSide(const std::string& s, const YAML::Node& node) {
  if (s == "left") return HandSide::Left;
  if (s == "right") return HandSide::Right;
  if (s == "either") return HandSide::Either;
  throw ParseError("template side must be left, right or either", yaml::lineOf(node));
}

GraspTemplateLibrary libraryFromNode(const YAML::Node& root, const HandModel& hand) {
  yaml::requireFormat(root, "template library");
  const auto model = yaml::get<std::string>(root, "hand_model", hand.name());
  if (model != hand.name())
    throw ConfigurationError("template library targets hand '" + model + "', loaded hand is '" + hand.name() + "'");
  std::vector<GraspTemplate> templates;
  for (const auto& node : yaml::require(root, "templates", "template library")) {
    GraspTemplate t;
    t.name = yaml::as<std::string>(yaml::require(node, "name", "template"), "template.name");
    t.side = parseSide(yaml::get<std::string>(node, "side", "either"), node);
    t.task = yaml::get<std::string>(node, "task", t.name);
    t.q = JointVectord{yaml::vecX(yaml::require(node, "q", "template"), "template.q"), hand.name()};
    templates.push_back(std::move(t));
  }
  return GraspTemplateLibrary(hand, std::move(templates));
}

bool active(const GraspTemplate& t, const std::vector<std::string>& tasks, std::optional<HandSide> side) {
  if (std::find(tasks.begin(), tasks.end(), t.task) == tasks.end()) return false;
  return !side || *side == HandSide::Either || t.side == HandSide::Either || t.side == *side;
}

}  // namespace

GraspTemplateLibrary loadTemplateLibrary(const std::string& path, const HandModel& hand) {
  return libraryFromNode(yaml::loadFile(path), hand);
}

GraspTemplateLibrary parseTemplateLibrary(const std::string& text, const HandModel& hand) {
  return libraryFromNode(yaml::loadString(text), hand);
}

SnapResult snapToTemplate(const JointVectord& q_user, const GraspTemplateLibrary& lib,
                          const std::vector<std::string>& active_tasks, std::optional<HandSide> side) {
  std::optional<SnapResult> best;
  for (std::size_t i = 0; i < lib.size(); ++i) {
    const GraspTemplate& t = lib[i];
    if (!active(t, active_tasks, side)) continue;
    if (t.q.size() != q_user.size())
      throw StructuralError("user joint vector has " + std::to_string(q_user.size()) + " joints, template '" + t.name +
                            "' has " + std::to_string(t.q.size()));
    const double d = (q_user.angles - t.q.angles).norm();
    if (!best || d < best->distance) best = SnapResult{i, t.name, t.q, d};
  }
  if (!best) throw ConfigurationError("no grasp template is active");
  return *best;
}

SnapResult TemplateSnapper::update(const JointVectord& q_user, const GraspTemplateLibrary& lib,
                                   const std::vector<std::string>& active_tasks, std::optional<HandSide> side) {
  SnapResult best = snapToTemplate(q_user, lib, active_tasks, side);
  if (incumbent_ && *incumbent_ != best.index && *incumbent_ < lib.size() &&
      active(lib[*incumbent_], active_tasks, side)) {
    const GraspTemplate& held = lib[*incumbent_];
    const double held_distance = (q_user.angles - held.q.angles).norm();
    if (!(best.distance < ratio_ * held_distance)) return SnapResult{*incumbent_, held.name, held.q, held_distance};
  }
  incumbent_ = best.index;
  return best;
}

}  // namespace teleop
