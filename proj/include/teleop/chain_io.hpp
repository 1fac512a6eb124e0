#pragma once

#include <string>

#include "teleop/kinematics.hpp"

namespace teleop {

/// Loads a chain definition (`format: 1`). Joint axes are normalized on load;
/// the result has passed SerialChain::validate().
SerialChaind loadChain(const std::string& path);
SerialChaind parseChain(const std::string& text);

}  // namespace teleop
