#include "teleop/scenario.hpp"

#include <algorithm>

#include "yaml_util.hpp"

namespace teleop {

void Scenario::check(const GraspTemplateLibrary& lib) const {
  const auto need = [&lib](const std::string& name, const std::string& where) {
    if (!name.empty() && !lib.find(name))
      throw ConfigurationError(where + ": template '" + name + "' is not in the library");
  };
  for (const auto& t : required_templates) need(t, "required_templates");
  for (Arm a : kArms) need(arms[index(a)].template_name, std::string("arms.") + toString(a));
  if (bag) {
    need(bag->open_template, "bag.open_template");
    need(bag->closed_template, "bag.closed_template");
  }
  const auto tasks = lib.tasks();
  for (const auto& t : active_tasks)
    if (std::find(tasks.begin(), tasks.end(), t) == tasks.end())
      throw ConfigurationError("active task '" + t + "' has no template");
  if (needle) {
    const bool found = std::any_of(surfaces.begin(), surfaces.end(),
                                   [this](const ContactSurface& s) { return s.name == needle->surface; });
    if (!found) throw ConfigurationError("needle surface '" + needle->surface + "' is not declared");
  }
}

namespace {

std::vector<std::string> strings(const YAML::Node& node, const std::string& what) {
  std::vector<std::string> out;
  if (!node) return out;
  if (!node.IsSequence()) throw ParseError(what + ": expected a list", yaml::lineOf(node));
  for (const auto& n : node) out.push_back(yaml::as<std::string>(n, what));
  return out;
}

SimConfig simFromYaml(const YAML::Node& node) {
  SimConfig c;
  if (!node) return c;
  c.joint_velocity_limit = yaml::get(node, "joint_velocity_limit", c.joint_velocity_limit);
  c.hand_velocity_limit = yaml::get(node, "hand_velocity_limit", c.hand_velocity_limit);
  c.joint_damping = yaml::get(node, "joint_damping", c.joint_damping);
  c.torque_noise = yaml::get(node, "torque_noise", c.torque_noise);
  c.max_penetration = yaml::get(node, "max_penetration", c.max_penetration);
  if (node["gravity"]) c.gravity = yaml::vec3(node["gravity"], "sim.gravity");
  return c;
}

ContactSurface surfaceFromYaml(const YAML::Node& node) {
  ContactSurface s;
  s.name = yaml::as<std::string>(yaml::require(node, "name", "surface"), "surface.name");
  const std::string what = "surface '" + s.name + "'";
  const auto shape = yaml::get<std::string>(node, "shape", "plane");
  if (shape == "plane") {
    s.shape = ContactSurface::Shape::Plane;
    const Vec3 n = yaml::vec3(yaml::require(node, "normal", what), what + ".normal");
    if (n.norm() < 1e-12) throw ConfigurationError(what + ": zero normal");
    s.normal = n.normalized();
  } else if (shape == "sphere") {
    s.shape = ContactSurface::Shape::Sphere;
    s.radius = yaml::as<double>(yaml::require(node, "radius", what), what + ".radius");
  } else {
    throw ParseError(what + ": shape must be plane or sphere", yaml::lineOf(node));
  }
  s.point = yaml::vec3(yaml::require(node, "point", what), what + ".point");
  s.stiffness = yaml::as<double>(yaml::require(node, "stiffness", what), what + ".stiffness");
  s.damping = yaml::get(node, "damping", 0.0);
  s.validate();
  return s;
}

BagSetup bagFromYaml(const YAML::Node& node) {
  BagSetup b;
  b.model.rest_ml = yaml::get(node, "rest_ml", b.model.rest_ml);
  b.model.compressible_ml = yaml::get(node, "compressible_ml", b.model.compressible_ml);
  b.model.leak = yaml::get(node, "leak", b.model.leak);
  b.model.validate();
  for (const auto& s : strings(yaml::require(node, "squeezing_hands", "bag"), "bag.squeezing_hands"))
    b.squeezing_hands.push_back(parseArm(s));
  b.open_template = yaml::as<std::string>(yaml::require(node, "open_template", "bag"), "bag.open_template");
  b.closed_template = yaml::as<std::string>(yaml::require(node, "closed_template", "bag"), "bag.closed_template");
  if (const YAML::Node cal = node["calibration"]) {
    b.fitted = yaml::get(cal, "fitted", false);
    b.max_compression_one_hand = yaml::get(cal, "max_compression_one_hand", 1.0);
    b.max_compression_two_hands = yaml::get(cal, "max_compression_two_hands", 1.0);
  }
  for (double c : {b.max_compression_one_hand, b.max_compression_two_hands})
    if (!(c > 0.0 && c <= 1.0)) throw ConfigurationError("bag calibration compressions must lie in (0, 1]");
  return b;
}

NeedleSetup needleFromYaml(const YAML::Node& node) {
  NeedleSetup n;
  n.arm = parseArm(yaml::as<std::string>(yaml::require(node, "arm", "needle"), "needle.arm"));
  n.surface = yaml::as<std::string>(yaml::require(node, "surface", "needle"), "needle.surface");
  const Vec3 normal = yaml::vec3(yaml::require(node, "image_plane_normal", "needle"), "needle.image_plane_normal");
  if (normal.norm() < 1e-12) throw ConfigurationError("needle image plane normal is zero");
  n.image_plane_normal = normal.normalized();
  const YAML::Node approaches = yaml::require(node, "approaches", "needle");
  if (!approaches.IsSequence()) throw ParseError("needle.approaches: expected a list", yaml::lineOf(approaches));
  for (const auto& a : approaches) {
    const auto w = yaml::doubles(a, "needle.approaches");
    if (w.size() != 2 || !(w[1] > w[0])) throw ConfigurationError("needle approach must be [start, end] with end > start");
    n.approaches.emplace_back(w[0], w[1]);
  }
  return n;
}

Scenario scenarioFromNode(const YAML::Node& root) {
  yaml::requireFormat(root, "scenario");
  Scenario s;
  s.name = yaml::as<std::string>(yaml::require(root, "name", "scenario"), "scenario.name");

  const auto mode = yaml::get<std::string>(root, "grasp_mode", "snap");
  if (mode == "snap") s.grasp_mode = GraspMode::Snap;
  else if (mode == "raw") s.grasp_mode = GraspMode::Raw;
  else throw ConfigurationError("grasp_mode must be snap or raw");

  s.active_tasks = strings(root["active_tasks"], "active_tasks");
  s.required_templates = strings(root["required_templates"], "required_templates");
  if (s.grasp_mode == GraspMode::Snap && s.active_tasks.empty())
    throw ConfigurationError("snap grasp mode needs at least one active task");

  const YAML::Node arms = yaml::require(root, "arms", "scenario");
  for (Arm a : kArms) {
    const YAML::Node node = yaml::require(arms, toString(a), "arms");
    ArmSetup& setup = s.arms[index(a)];
    setup.initial_ee = yaml::pose(yaml::require(node, "initial_ee", "arm"), std::string("arms.") + toString(a));
    if (node["seed_q"]) setup.seed_q = yaml::vecX(node["seed_q"], "seed_q");
    setup.template_name = yaml::get<std::string>(node, "template", "");
  }

  s.sim = simFromYaml(root["sim"]);
  s.sim.validate();
  if (root["bag"]) s.bag = bagFromYaml(root["bag"]);
  if (const YAML::Node surfaces = root["surfaces"]) {
    if (!surfaces.IsSequence()) throw ParseError("surfaces: expected a list", yaml::lineOf(surfaces));
    for (const auto& n : surfaces) s.surfaces.push_back(surfaceFromYaml(n));
  }
  if (root["needle"]) s.needle = needleFromYaml(root["needle"]);
  return s;
}

}  // namespace

Scenario loadScenario(const std::string& path) { return scenarioFromNode(yaml::loadFile(path)); }

Scenario parseScenario(const std::string& text) { return scenarioFromNode(yaml::loadString(text)); }

}  // namespace teleop
