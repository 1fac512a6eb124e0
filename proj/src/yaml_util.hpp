#pragma once

// Internal helpers shared by the structured-text loaders.

#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "teleop/errors.hpp"
#include "teleop/geometry.hpp"
#include "teleop/kinematics.hpp"

namespace teleop::yaml {

inline std::size_t lineOf(const YAML::Node& n) {
  return n.Mark().line >= 0 ? static_cast<std::size_t>(n.Mark().line) + 1 : 0;
}

inline YAML::Node loadFile(const std::string& path) {
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigurationError("cannot open '" + path + "'");
  } catch (const YAML::ParserException& e) {
    throw ParseError(path + ": " + e.msg, static_cast<std::size_t>(e.mark.line) + 1);
  }
}

inline YAML::Node loadString(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, static_cast<std::size_t>(e.mark.line) + 1);
  }
}

inline void requireFormat(const YAML::Node& root, const std::string& what) {
  if (!root.IsMap() || !root["format"]) throw ParseError(what + ": missing 'format' header", 1);
  const int version = root["format"].as<int>(0);
  if (version != 1)
    throw UnsupportedFormatError(what + ": unsupported format version " + root["format"].as<std::string>());
}

inline YAML::Node require(const YAML::Node& node, const std::string& key, const std::string& what) {
  YAML::Node child = node[key];
  if (!child) throw ParseError(what + ": missing key '" + key + "'", lineOf(node));
  return child;
}

template <typename T>
T as(const YAML::Node& node, const std::string& what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError(what + ": bad value", lineOf(node));
  }
}

template <typename T>
T get(const YAML::Node& node, const std::string& key, const T& fallback) {
  const YAML::Node child = node[key];
  if (!child) return fallback;
  return as<T>(child, key);
}

inline std::vector<double> doubles(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) throw ParseError(what + ": expected a list", lineOf(node));
  std::vector<double> out;
  for (const auto& item : node) out.push_back(as<double>(item, what));
  return out;
}

inline VecX vecX(const YAML::Node& node, const std::string& what) {
  const auto v = doubles(node, what);
  return Eigen::Map<const VecX>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Vec3 vec3(const YAML::Node& node, const std::string& what) {
  const auto v = doubles(node, what);
  if (v.size() != 3) throw ParseError(what + ": expected 3 values", lineOf(node));
  return Vec3(v[0], v[1], v[2]);
}

/// `{position: [x, y, z], rpy: [r, p, y]}` or `quaternion: [w, x, y, z]`;
/// every key optional.
inline Posed pose(const YAML::Node& node, const std::string& what) {
  Posed p;
  if (!node) return p;
  if (node["position"]) p.position = vec3(node["position"], what + ".position");
  if (node["rpy"]) {
    const Vec3 rpy = vec3(node["rpy"], what + ".rpy");
    p.rotation = Rotationd::fromRpy(rpy.x(), rpy.y(), rpy.z());
  } else if (node["quaternion"]) {
    const auto q = doubles(node["quaternion"], what + ".quaternion");
    if (q.size() != 4) throw ParseError(what + ".quaternion: expected 4 values", lineOf(node));
    p.rotation = Rotationd(Eigen::Quaterniond(q[0], q[1], q[2], q[3]));
  }
  return p;
}

}  // namespace teleop::yaml
