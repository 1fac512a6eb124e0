#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "teleop/grasp_templates.hpp"
#include "teleop/run_config.hpp"
#include "teleop/scenario.hpp"
#include "teleop/session_log.hpp"
#include "teleop/sim_world.hpp"

namespace teleop {

/// Loaded and cross-checked inputs of a run.
struct Assets {
  Scenario scenario;
  HandModel hand;
  GraspTemplateLibrary templates;
  std::array<SerialChaind, 2> chains;
};

Assets loadAssets(const RunConfig& config);

/// Joint vector reaching `target` from `seed` by repeated tracking steps.
/// Throws ConfigurationError when the pose is out of reach.
JointVectord solveInitialPose(const SerialChaind& chain, const Posed& target, const VecX& seed);

struct ForceTrackingStats {
  Vec3 target = Vec3::Zero();
  std::size_t samples = 0;
  double mean_error = 0.0;  ///< N, contact force vs target
  double rms_error = 0.0;
  double max_error = 0.0;
  double final_error = 0.0;
  double mean_estimate_error = 0.0;  ///< N, estimator vs contact force
};

struct NeedleAttempt {
  double start = 0.0;
  double end = 0.0;
  std::size_t samples = 0;
  double max_deviation = 0.0;  ///< rad
  double mean_deviation = 0.0;
  double min_incidence = 0.0;
  double max_incidence = 0.0;
  double mean_incidence = 0.0;
};

struct RunMetrics {
  std::string scenario;
  std::size_t ticks = 0;
  double duration_s = 0.0;
  std::size_t events = 0;
  std::size_t dropped_frames = 0;   ///< keypoint frames that could not be fused
  std::size_t rejected_events = 0;  ///< e.g. unknown template requests
  std::optional<BvmMetrics> bvm;
  bool bvm_calibrated = false;  ///< bag constants are fitted, not measured
  std::string bvm_note;         ///< why bvm is absent, when a bag exists
  std::vector<NeedleAttempt> needle;
  std::array<std::optional<ForceTrackingStats>, 2> force;
  std::string state_hash;
  std::string command_hash;
};

/// Closed loop of one run: operator events in, simulated robot out. Each
/// tick maps hands to end-effector targets (clutch, coupling, admittance),
/// keypoints to hand joints (fusion, retargeting, snapping), then steps the
/// world and estimates the contact wrench.
class TeleopSystem {
 public:
  TeleopSystem(const RunConfig& config, Assets assets);
  ~TeleopSystem();
  TeleopSystem(const TeleopSystem&) = delete;
  TeleopSystem& operator=(const TeleopSystem&) = delete;

  /// Applies an event at the current tick boundary.
  void apply(const SessionEvent& event);
  void tick();

  std::size_t ticks() const;
  /// Time of the next tick boundary, ticks() * dt.
  double time() const;
  double dt() const;

  const SimWorld& sim() const;
  const TeleopSession& session() const;
  const GraspTemplateLibrary& templates() const;
  const Posed& commanded(Arm arm) const;
  const Wrench& estimatedWrench(Arm arm) const;
  const VecX& commandTorque(Arm arm) const;

  /// Per-tick state lines go here as well as into the hash.
  void setStateLog(std::ostream* out);
  std::string stateHash() const;
  std::string commandHash() const;
  RunMetrics metrics() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Feeds `events` tick by tick. Events stamped at or before a tick boundary
/// are applied there; an end event stops the run at its tick, otherwise the
/// run covers the last event's tick.
RunMetrics replay(TeleopSystem& system, const std::vector<SessionEvent>& events);

/// Replay mode end to end: loads inputs, runs, and writes metrics.json,
/// report.txt and state.log into the output directory when one is set.
RunMetrics runReplay(const RunConfig& config);

enum class ReportFormat { Text, Json };

std::string metricsToJson(const RunMetrics& metrics);
RunMetrics metricsFromJson(const std::string& text);
std::string renderReport(const RunMetrics& metrics, ReportFormat format);

void writeRunOutputs(const std::string& dir, const RunMetrics& metrics);

}  // namespace teleop
