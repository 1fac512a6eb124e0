#include "teleop/run_config.hpp"

#include <filesystem>

#include "yaml_util.hpp"

namespace teleop {

namespace fs = std::filesystem;

void RunConfig::validate() const {
  if (!(control_rate_hz > 0.0)) throw ConfigurationError("control_rate_hz must be positive");
  if (!(snapshot_rate_hz > 0.0)) throw ConfigurationError("snapshot_rate_hz must be positive");
  gains.coupling.validate();
  gains.retarget.validate();
  if (!(gains.translation_gain > 0.0)) throw ConfigurationError("translation_gain must be positive");
  if (!(gains.admittance >= 0.0)) throw ConfigurationError("admittance gain must be non-negative");
  if (!(gains.snap_hysteresis > 0.0 && gains.snap_hysteresis <= 1.0))
    throw ConfigurationError("snap_hysteresis must lie in (0, 1]");
  if (scenario.empty() || templates.empty() || hand_model.empty() || chains[0].empty() || chains[1].empty())
    throw ConfigurationError("scenario, templates, hand_model and both chains are required");
  if (mode) {
    if (const auto* live = std::get_if<LiveMode>(&*mode); live && (live->port < 0 || live->port > 65535))
      throw ConfigurationError("port out of range");
  }
}

namespace {

std::string resolve(const std::string& p, const std::string& base) {
  if (p.empty()) return p;
  const fs::path path(p);
  return (path.is_absolute() ? path : fs::path(base) / path).lexically_normal().string();
}

RunConfig configFromNode(const YAML::Node& root, const std::string& base) {
  yaml::requireFormat(root, "run config");
  RunConfig c;
  const auto path = [&](const YAML::Node& n, const std::string& key) {
    return resolve(yaml::as<std::string>(yaml::require(n, key, "run config"), key), base);
  };
  c.scenario = path(root, "scenario");
  c.templates = path(root, "templates");
  c.hand_model = path(root, "hand_model");
  const YAML::Node chains = yaml::require(root, "chains", "run config");
  for (Arm a : kArms) c.chains[index(a)] = path(chains, toString(a));

  c.control_rate_hz = yaml::get(root, "control_rate_hz", c.control_rate_hz);
  c.snapshot_rate_hz = yaml::get(root, "snapshot_rate_hz", c.snapshot_rate_hz);
  c.gains.coupling.dt = c.control_rate_hz > 0.0 ? 1.0 / c.control_rate_hz : 0.0;

  if (const YAML::Node g = root["gains"]) {
    CouplingParams& cp = c.gains.coupling;
    cp.lambda = yaml::get(g, "lambda", cp.lambda);
    cp.beta = yaml::get(g, "beta", cp.beta);
    cp.dt = yaml::get(g, "dt", cp.dt);
    const auto law = yaml::get<std::string>(g, "coupling_law", "stable");
    if (law == "stable") cp.law = CouplingLaw::Stable;
    else if (law == "literal") cp.law = CouplingLaw::Literal;
    else throw ConfigurationError("coupling_law must be stable or literal");
    c.gains.retarget.alpha = yaml::get(g, "alpha", c.gains.retarget.alpha);
    c.gains.retarget.smoothness = yaml::get(g, "smoothness", c.gains.retarget.smoothness);
    c.gains.retarget.length_scale = yaml::get(g, "retarget_length_scale", c.gains.retarget.length_scale);
    c.gains.translation_gain = yaml::get(g, "translation_gain", c.gains.translation_gain);
    c.gains.admittance = yaml::get(g, "admittance", c.gains.admittance);
    c.gains.snap_hysteresis = yaml::get(g, "snap_hysteresis", c.gains.snap_hysteresis);
  }

  if (const YAML::Node p = root["pedals"]) {
    for (PedalId id : {PedalId::Left, PedalId::Right})
      if (p[toString(id)])
        c.pedals.actions[static_cast<std::size_t>(id)] =
            parsePedalAction(yaml::as<std::string>(p[toString(id)], "pedals"));
  }

  if (const YAML::Node m = root["mode"]) {
    const bool replay = static_cast<bool>(m["replay"]);
    const bool live = static_cast<bool>(m["live"]);
    if (replay == live) throw ConfigurationError("mode must name exactly one of replay or live");
    if (replay) c.mode = ReplayMode{path(m, "replay")};
    else c.mode = LiveMode{yaml::get(m["live"], "port", 0)};
  }

  c.seed = yaml::get<std::uint64_t>(root, "seed", 0);
  if (root["output_dir"]) c.output_dir = path(root, "output_dir");
  c.validate();
  return c;
}

}  // namespace

RunConfig loadRunConfig(const std::string& path) {
  const auto base = fs::absolute(fs::path(path)).parent_path().string();
  return configFromNode(yaml::loadFile(path), base);
}

RunConfig parseRunConfig(const std::string& text, const std::string& base_dir) {
  return configFromNode(yaml::loadString(text), fs::absolute(base_dir).string());
}

}  // namespace teleop
