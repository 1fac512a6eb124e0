#pragma once

#include <string>

#include <yaml-cpp/yaml.h>

#include "teleop/kinematics.hpp"

namespace teleop::detail {

/// Parses the `base`, `tool` and `joints` keys of a chain node.
SerialChaind chainFromYaml(const YAML::Node& node, const std::string& name);

}  // namespace teleop::detail
