#pragma once

#include <string>

#include "toxictrap/dataset.hpp"
#include "toxictrap/text.hpp"
#include "toxictrap/victim.hpp"

namespace toxictrap {

enum class GoalStatus { kSearching, kSkipped };

// Per-seed attack target: push a correctly-predicted toxic seed to benign.
struct GoalState {
  AttackedText seed;
  ProbRow seed_output;
  TaskSpec task;
  GoalStatus status = GoalStatus::kSearching;
  std::string skip_reason;
  double tau = kMultilabelThreshold;
};

struct GoalResult {
  bool succeeded = false;
  double score = 0;  // higher = closer to benign
  ProbRow output;
};

// Queries the seed once. SKIPPED when the prediction differs from `truth`
// or is already benign.
GoalState init_goal(const AttackedText& seed, const LabelVector& truth, VictimOracle& oracle);

// argmax(candidate) == benign while argmax(seed) != benign; score = P(benign).
GoalResult check_binary_multiclass(const GoalState& state, const ProbRow& candidate_output);

// P(benign) >= tau and every toxic P < tau; score = P(benign) - max toxic P.
GoalResult check_multilabel(const GoalState& state, const ProbRow& candidate_output);

// Dispatches on state.task.kind.
GoalResult check_goal(const GoalState& state, const ProbRow& candidate_output);

}  // namespace toxictrap
