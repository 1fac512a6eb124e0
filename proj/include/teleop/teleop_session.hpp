#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "teleop/geometry.hpp"
#include "teleop/keypoint_fusion.hpp"

namespace teleop {

enum class Arm { Left = 0, Right = 1 };
inline constexpr std::array<Arm, 2> kArms = {Arm::Left, Arm::Right};
inline std::size_t index(Arm a) { return static_cast<std::size_t>(a); }
const char* toString(Arm a);
Arm parseArm(const std::string& s);

enum class PedalId { Left = 0, Right = 1 };
const char* toString(PedalId p);
PedalId parsePedal(const std::string& s);

enum class PedalAction { ClutchLeft, ClutchRight, ClutchBoth, ToggleCoupling };
const char* toString(PedalAction a);
PedalAction parsePedalAction(const std::string& s);

struct PedalConfig {
  std::array<PedalAction, 2> actions = {PedalAction::ClutchBoth, PedalAction::ToggleCoupling};
  PedalAction action(PedalId p) const { return actions[static_cast<std::size_t>(p)]; }
};

// Session event payloads.
struct HandPoseSample {
  Arm arm = Arm::Left;
  Posed pose;
};
struct KeypointFrame {
  Arm hand = Arm::Left;
  std::array<CameraView, 2> views;
};
struct PedalEdge {
  PedalId pedal = PedalId::Left;
  bool down = true;
};
struct CouplingToggle {};
/// Forces a grasp template on a hand; an empty name returns to automatic
/// selection.
struct TemplateRequest {
  Arm hand = Arm::Left;
  std::string name;
};
/// Desired end-effector force for the impedance loop of one arm, world frame.
struct ForceCommand {
  Arm arm = Arm::Left;
  Vec3 force = Vec3::Zero();
  bool enabled = true;
};
/// Marks the last control tick of a recorded session.
struct EndOfSession {};

using EventPayload =
    std::variant<HandPoseSample, KeypointFrame, PedalEdge, CouplingToggle, TemplateRequest, ForceCommand, EndOfSession>;

struct SessionEvent {
  double t = 0.0;  ///< seconds, non-decreasing within a session
  EventPayload payload;
};

struct ArmClutch {
  bool engaged = false;
  std::optional<Posed> saved_hand;
  std::optional<Posed> saved_ee;
};

struct ClutchState {
  std::array<ArmClutch, 2> arms;
  std::array<bool, 2> pedal_down = {false, false};
  bool coupling = false;

  const ArmClutch& arm(Arm a) const { return arms[index(a)]; }
};

/// Applies a pedal edge. An arm is engaged while any held pedal clutches it.
/// On engage both the hand and end-effector poses are saved; on release the
/// hand snapshot is refreshed to the current hand pose so the end effector
/// resumes from where it was frozen. Repeated down edges are ignored. The
/// coupling toggle flips on the down edge only.
ClutchState onPedal(ClutchState state, const PedalConfig& config, const PedalEdge& edge,
                    const std::array<Posed, 2>& current_hand, const std::array<Posed, 2>& current_ee);

/// Incremental mapping: R_ee = R_ee,saved (R_h,saved^T R_h), p_ee = p_ee,saved
/// + gain (p_h - p_h,saved). Returns the saved end-effector pose while
/// engaged. Throws NotInitializedError if the arm was never clutched.
Posed relativeTarget(const ClutchState& state, Arm arm, const Posed& current_hand, double translation_gain = 1.0);

/// Operator-side state machine. Consumes pose samples and pedal edges and
/// owns the commanded end-effector pose of each arm.
class TeleopSession {
 public:
  TeleopSession(PedalConfig pedals, const std::array<Posed, 2>& initial_ee, double translation_gain = 1.0);

  void onHandPose(const HandPoseSample& sample);
  void onPedal(const PedalEdge& edge);
  void toggleCoupling() { state_.coupling = !state_.coupling; }
  /// Moves the commanded pose of `arm` to `ee` and re-anchors the incremental
  /// mapping there, so later hand motion continues from `ee`.
  void rebase(Arm arm, const Posed& ee);

  const ClutchState& state() const { return state_; }
  const Posed& commanded(Arm a) const { return commanded_[index(a)]; }
  const std::optional<Posed>& hand(Arm a) const { return hand_[index(a)]; }
  bool coupling() const { return state_.coupling; }

 private:
  PedalConfig pedals_;
  double gain_;
  ClutchState state_;
  std::array<Posed, 2> commanded_;
  std::array<std::optional<Posed>, 2> hand_;
};

}  // namespace teleop
