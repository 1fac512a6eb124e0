#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "teleop/compliance.hpp"
#include "teleop/hand_retarget.hpp"
#include "teleop/teleop_session.hpp"

namespace teleop {

struct ReplayMode {
  std::string session;
};

struct LiveMode {
  int port = 0;  ///< 0 picks a free port
};

struct Gains {
  CouplingParams coupling;
  RetargetParams retarget;
  double translation_gain = 1.0;
  double admittance = 0.002;  ///< m/(N s), force-error-to-offset rate
  double snap_hysteresis = 0.9;
};

/// Everything a run needs. Paths are absolute after loading (relative paths
/// in the file resolve against the file's directory).
struct RunConfig {
  std::string scenario;
  std::string templates;
  std::array<std::string, 2> chains;
  std::string hand_model;
  double control_rate_hz = 100.0;
  double snapshot_rate_hz = 30.0;
  Gains gains;
  PedalConfig pedals;
  std::optional<std::variant<ReplayMode, LiveMode>> mode;
  std::uint64_t seed = 0;
  std::string output_dir;

  double dt() const { return 1.0 / control_rate_hz; }
  /// Throws ConfigurationError on non-positive rates or invalid gains.
  void validate() const;
};

RunConfig loadRunConfig(const std::string& path);
/// `base_dir` anchors relative paths.
RunConfig parseRunConfig(const std::string& text, const std::string& base_dir);

}  // namespace teleop
