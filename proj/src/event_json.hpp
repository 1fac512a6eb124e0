#pragma once

// JSON mapping of session events, shared by the session log and the bridge.

#include <json.hpp>

#include "teleop/teleop_session.hpp"

namespace teleop::detail {

using json = nlohmann::json;

json eventToJson(const SessionEvent& event);
/// Throws ParseError on unknown kinds or malformed fields.
SessionEvent eventFromJson(const json& j);

json poseToJson(const Posed& p);
Posed poseFromJson(const json& j);
json vecToJson(const Vec3& v);
Vec3 vecFromJson(const json& j);

}  // namespace teleop::detail
