#pragma once

#include <optional>
#include <string>
#include <vector>

#include "teleop/hand_retarget.hpp"

namespace teleop {

enum class HandSide { Left, Right, Either };

struct GraspTemplate {
  std::string name;
  HandSide side = HandSide::Either;
  std::string task;
  JointVectord q;
};

class GraspTemplateLibrary {
 public:
  GraspTemplateLibrary() = default;
  /// Throws ConfigurationError on duplicate names or templates outside the
  /// hand's joint limits.
  GraspTemplateLibrary(const HandModel& hand, std::vector<GraspTemplate> templates);

  const std::vector<GraspTemplate>& templates() const { return templates_; }
  std::size_t size() const { return templates_.size(); }
  const GraspTemplate& operator[](std::size_t i) const { return templates_[i]; }

  std::optional<std::size_t> find(const std::string& name) const;
  const GraspTemplate& at(const std::string& name) const;
  std::vector<std::string> names() const;
  std::vector<std::string> tasks() const;

 private:
  std::vector<GraspTemplate> templates_;
};

GraspTemplateLibrary loadTemplateLibrary(const std::string& path, const HandModel& hand);
GraspTemplateLibrary parseTemplateLibrary(const std::string& text, const HandModel& hand);

struct SnapResult {
  std::size_t index = 0;
  std::string name;
  JointVectord q;
  double distance = 0.0;
};

/// Template in `active_tasks` (restricted to `side` when given) nearest to
/// q_user in unweighted joint-space Euclidean distance. Ties go to the lowest
/// library index. Throws ConfigurationError when nothing is active.
SnapResult snapToTemplate(const JointVectord& q_user, const GraspTemplateLibrary& lib,
                          const std::vector<std::string>& active_tasks,
                          std::optional<HandSide> side = std::nullopt);

/// Stateful snapping with hysteresis: a different template replaces the
/// incumbent only when it is closer than `ratio` times the incumbent distance.
class TemplateSnapper {
 public:
  explicit TemplateSnapper(double ratio = 0.9) : ratio_(ratio) {}

  SnapResult update(const JointVectord& q_user, const GraspTemplateLibrary& lib,
                    const std::vector<std::string>& active_tasks, std::optional<HandSide> side = std::nullopt);
  const std::optional<std::size_t>& incumbent() const { return incumbent_; }
  void reset() { incumbent_.reset(); }

 private:
  double ratio_;
  std::optional<std::size_t> incumbent_;
};

}  // namespace teleop
