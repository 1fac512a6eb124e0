#include "teleop/chain_io.hpp"

#include "chain_yaml.hpp"
#include "yaml_util.hpp"

namespace teleop {
namespace detail {

SerialChaind chainFromYaml(const YAML::Node& root, const std::string& name) {
  SerialChaind chain;
  chain.name = name;
  chain.base = yaml::pose(root["base"], "chain.base");
  chain.tool = yaml::pose(root["tool"], "chain.tool");

  const YAML::Node joints = yaml::require(root, "joints", "chain");
  if (!joints.IsSequence()) throw ParseError("chain.joints: expected a list", yaml::lineOf(joints));
  for (const auto& node : joints) {
    RevoluteJointd j;
    j.name = yaml::as<std::string>(yaml::require(node, "name", "joint"), "joint.name");
    const std::string what = "joint '" + j.name + "'";
    j.origin = yaml::pose(node["origin"], what + ".origin");
    const Vec3 axis = yaml::vec3(yaml::require(node, "axis", what), what + ".axis");
    if (axis.norm() < 1e-12) throw StructuralError(what + ": zero axis");
    j.axis = axis.normalized();
    const auto limits = yaml::doubles(yaml::require(node, "limits", what), what + ".limits");
    if (limits.size() != 2) throw ParseError(what + ".limits: expected [lower, upper]", yaml::lineOf(node));
    j.lower = limits[0];
    j.upper = limits[1];
    j.mass = yaml::get<double>(node, "mass", 0.0);
    if (node["com"]) j.com = yaml::vec3(node["com"], what + ".com");
    chain.joints.push_back(std::move(j));
  }
  chain.validate();
  return chain;
}

}  // namespace detail

namespace {

SerialChaind chainFromNode(const YAML::Node& root) {
  yaml::requireFormat(root, "chain");
  return detail::chainFromYaml(root, yaml::as<std::string>(yaml::require(root, "name", "chain"), "chain.name"));
}

}  // namespace

SerialChaind loadChain(const std::string& path) { return chainFromNode(yaml::loadFile(path)); }

SerialChaind parseChain(const std::string& text) { return chainFromNode(yaml::loadString(text)); }

}  // namespace teleop
