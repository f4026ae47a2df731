#include "toxictrap/goal.hpp"

#include <algorithm>

#include "toxictrap/error.hpp"

namespace toxictrap {
namespace {

bool predicts_toxic(const TaskSpec& task, const LabelVector& pred) {
  if (task.kind == TaskKind::kMultilabel) {
    return std::any_of(pred.begin() + 1, pred.end(), [](std::uint8_t v) { return v != 0; });
  }
  return pred[kBenignIndex] == 0;
}

}  // namespace

GoalState init_goal(const AttackedText& seed, const LabelVector& truth, VictimOracle& oracle) {
  GoalState state;
  state.seed = seed;
  state.task = oracle.task();
  if (truth.size() != state.task.num_labels()) {
    throw PreconditionError("seed label arity does not match the victim's label count");
  }
  state.seed_output = oracle.predict_one(seed.text());
  const auto pred = predicted_labels(state.task, state.seed_output, state.tau);
  if (pred != truth) {
    state.status = GoalStatus::kSkipped;
    state.skip_reason = "mispredicted";
  } else if (!predicts_toxic(state.task, pred)) {
    state.status = GoalStatus::kSkipped;
    state.skip_reason = "benign";
  }
  return state;
}

GoalResult check_binary_multiclass(const GoalState& state, const ProbRow& out) {
  if (state.task.kind == TaskKind::kMultilabel) {
    throw PreconditionError("check_binary_multiclass on a multilabel task");
  }
  GoalResult r;
  r.succeeded = argmax(out) == kBenignIndex && argmax(state.seed_output) != kBenignIndex;
  r.score = out.at(kBenignIndex);
  r.output = out;
  return r;
}

GoalResult check_multilabel(const GoalState& state, const ProbRow& out) {
  if (state.task.kind != TaskKind::kMultilabel) {
    throw PreconditionError("check_multilabel on a single-label task");
  }
  if (out.size() < 2) throw PreconditionError("multilabel output needs at least one toxic label");
  const double benign = out[kBenignIndex];
  const double worst = *std::max_element(out.begin() + 1, out.end());
  GoalResult r;
  r.succeeded = benign >= state.tau && worst < state.tau;
  r.score = benign - worst;
  r.output = out;
  return r;
}

GoalResult check_goal(const GoalState& state, const ProbRow& out) {
  return state.task.kind == TaskKind::kMultilabel ? check_multilabel(state, out)
                                                  : check_binary_multiclass(state, out);
}

}  // namespace toxictrap
