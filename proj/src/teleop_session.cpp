#include "teleop/teleop_session.hpp"

#include "teleop/errors.hpp"

namespace teleop {

const char* toString(Arm a) { return a == Arm::Left ? "left" : "right"; }

Arm parseArm(const std::string& s) {
  if (s == "left") return Arm::Left;
  if (s == "right") return Arm::Right;
  throw ParseError("arm must be 'left' or 'right', got '" + s + "'");
}

const char* toString(PedalId p) { return p == PedalId::Left ? "left" : "right"; }

PedalId parsePedal(const std::string& s) {
  if (s == "left") return PedalId::Left;
  if (s == "right") return PedalId::Right;
  throw ParseError("pedal must be 'left' or 'right', got '" + s + "'");
}

const char* toString(PedalAction a) {
  switch (a) {
    case PedalAction::ClutchLeft: return "clutch-left";
    case PedalAction::ClutchRight: return "clutch-right";
    case PedalAction::ClutchBoth: return "clutch-both";
    case PedalAction::ToggleCoupling: return "toggle-coupling";
  }
  return "?";
}

PedalAction parsePedalAction(const std::string& s) {
  if (s == "clutch-left") return PedalAction::ClutchLeft;
  if (s == "clutch-right") return PedalAction::ClutchRight;
  if (s == "clutch-both") return PedalAction::ClutchBoth;
  if (s == "toggle-coupling") return PedalAction::ToggleCoupling;
  throw ConfigurationError("unknown pedal action '" + s + "'");
}

namespace {

bool clutches(PedalAction action, Arm arm) {
  switch (action) {
    case PedalAction::ClutchLeft: return arm == Arm::Left;
    case PedalAction::ClutchRight: return arm == Arm::Right;
    case PedalAction::ClutchBoth: return true;
    case PedalAction::ToggleCoupling: return false;
  }
  return false;
}

}  // namespace

ClutchState onPedal(ClutchState state, const PedalConfig& config, const PedalEdge& edge,
                    const std::array<Posed, 2>& current_hand, const std::array<Posed, 2>& current_ee) {
  const auto p = static_cast<std::size_t>(edge.pedal);
  if (state.pedal_down[p] == edge.down) return state;
  state.pedal_down[p] = edge.down;

  if (config.action(edge.pedal) == PedalAction::ToggleCoupling) {
    if (edge.down) state.coupling = !state.coupling;
    return state;
  }

  for (Arm arm : kArms) {
    bool held = false;
    for (std::size_t k = 0; k < 2; ++k)
      held = held || (state.pedal_down[k] && clutches(config.actions[k], arm));
    ArmClutch& c = state.arms[index(arm)];
    if (held && !c.engaged) {
      c.engaged = true;
      c.saved_hand = current_hand[index(arm)];
      c.saved_ee = current_ee[index(arm)];
    } else if (!held && c.engaged) {
      c.engaged = false;
      c.saved_hand = current_hand[index(arm)];
    }
  }
  return state;
}

Posed relativeTarget(const ClutchState& state, Arm arm, const Posed& current_hand, double translation_gain) {
  const ArmClutch& c = state.arm(arm);
  if (!c.saved_hand || !c.saved_ee)
    throw NotInitializedError(std::string(toString(arm)) + " arm has never been clutched");
  if (c.engaged) return *c.saved_ee;
  const Posed& h0 = *c.saved_hand;
  const Posed& ee0 = *c.saved_ee;
  return Posed(ee0.rotation * (h0.rotation.inverse() * current_hand.rotation),
               ee0.position + translation_gain * (current_hand.position - h0.position));
}

TeleopSession::TeleopSession(PedalConfig pedals, const std::array<Posed, 2>& initial_ee, double translation_gain)
    : pedals_(pedals), gain_(translation_gain), commanded_(initial_ee) {}

void TeleopSession::onHandPose(const HandPoseSample& sample) {
  const std::size_t i = index(sample.arm);
  hand_[i] = sample.pose;
  const ArmClutch& c = state_.arms[i];
  if (c.saved_hand && !c.engaged) commanded_[i] = relativeTarget(state_, sample.arm, sample.pose, gain_);
}

void TeleopSession::onPedal(const PedalEdge& edge) {
  std::array<Posed, 2> hands;
  for (Arm a : kArms) {
    // without a tracker sample yet the hand is anchored at the identity pose
    hands[index(a)] = hand_[index(a)].value_or(Posed::identity());
  }
  state_ = teleop::onPedal(state_, pedals_, edge, hands, commanded_);
  for (Arm a : kArms) {
    const ArmClutch& c = state_.arm(a);
    if (c.engaged) commanded_[index(a)] = *c.saved_ee;
  }
}

void TeleopSession::rebase(Arm arm, const Posed& ee) {
  const std::size_t i = index(arm);
  commanded_[i] = ee;
  ArmClutch& c = state_.arms[i];
  if (!c.saved_hand) return;
  c.saved_ee = ee;
  c.saved_hand = hand_[i].value_or(Posed::identity());
}

}  // namespace teleop
