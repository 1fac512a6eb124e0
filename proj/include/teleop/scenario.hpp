#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "teleop/grasp_templates.hpp"
#include "teleop/sim_world.hpp"

namespace teleop {

enum class GraspMode {
  Snap,  ///< hand target is the nearest active template
  Raw,   ///< hand target is the retargeted configuration
};

struct ArmSetup {
  Posed initial_ee;
  VecX seed_q;  ///< IK seed for reaching initial_ee; empty means all zeros
  std::string template_name;
};

struct BagSetup {
  BagModel model;
  std::vector<Arm> squeezing_hands;
  std::string open_template;
  std::string closed_template;
  double max_compression_one_hand = 1.0;
  double max_compression_two_hands = 1.0;
  bool fitted = false;
};

struct NeedleSetup {
  Arm arm = Arm::Left;
  std::string surface;
  Vec3 image_plane_normal = Vec3::UnitY();
  std::vector<std::pair<double, double>> approaches;  ///< [start, end] seconds
};

/// Scene description: objects, calibration constants, initial arm poses and
/// the grasp templates the task needs.
struct Scenario {
  std::string name;
  GraspMode grasp_mode = GraspMode::Snap;
  std::vector<std::string> active_tasks;
  std::vector<std::string> required_templates;
  std::array<ArmSetup, 2> arms;
  SimConfig sim;
  std::optional<BagSetup> bag;
  std::vector<ContactSurface> surfaces;
  std::optional<NeedleSetup> needle;

  /// Throws ConfigurationError when a referenced template or surface is
  /// missing.
  void check(const GraspTemplateLibrary& lib) const;
};

Scenario loadScenario(const std::string& path);
Scenario parseScenario(const std::string& text);

}  // namespace teleop
