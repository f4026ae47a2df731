#include "toxictrap/victim.hpp"

#include <cmath>
#include <unordered_set>

#include "toxictrap/error.hpp"

namespace toxictrap {

std::size_t argmax(const ProbRow& row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

LabelVector predicted_labels(const TaskSpec& task, const ProbRow& row, double tau) {
  if (task.kind == TaskKind::kMultilabel) {
    LabelVector out(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i] >= tau;
    return out;
  }
  return one_hot(argmax(row), row.size());
}

bool valid_output_row(const TaskSpec& task, const ProbRow& row) {
  if (row.size() != task.num_labels()) return false;
  double sum = 0;
  for (double p : row) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) return false;
    sum += p;
  }
  return task.kind == TaskKind::kMultilabel || std::abs(sum - 1.0) <= 1e-6;
}

std::vector<double> VictimModel::gradient_word_scores(const AttackedText&) const {
  throw UnsupportedCapability("victim model does not expose gradients");
}

VictimOracle::VictimOracle(std::shared_ptr<const VictimModel> model, bool caching)
    : model_(std::move(model)), caching_(caching) {
  if (!model_) throw PreconditionError("VictimOracle needs a model");
}

VictimOutput VictimOracle::evaluate_locked(std::span<const std::string> texts) {
  VictimOutput out;
  out.probs.resize(texts.size());
  if (!caching_) {
    if (!texts.empty()) out = model_->predict(texts);
    queries_ += texts.size();
    return out;
  }
  std::vector<std::string> misses;
  std::unordered_set<std::string> pending;
  for (const auto& t : texts) {
    if (!cache_.contains(t) && pending.insert(t).second) misses.push_back(t);
  }
  if (!misses.empty()) {
    auto fresh = model_->predict(misses);
    if (fresh.probs.size() != misses.size()) {
      throw TransportError("victim returned " + std::to_string(fresh.probs.size()) +
                           " rows for " + std::to_string(misses.size()) + " texts");
    }
    for (std::size_t i = 0; i < misses.size(); ++i) cache_.emplace(misses[i], std::move(fresh.probs[i]));
    queries_ += misses.size();
  }
  for (std::size_t i = 0; i < texts.size(); ++i) out.probs[i] = cache_.at(texts[i]);
  return out;
}

VictimOutput VictimOracle::predict(std::span<const std::string> texts) {
  if (texts.empty()) throw PreconditionError("predict called with an empty batch");
  std::lock_guard lock(mu_);
  return evaluate_locked(texts);
}

ProbRow VictimOracle::predict_one(const std::string& text) {
  return predict(std::span<const std::string>(&text, 1)).probs.front();
}

VictimOutput VictimOracle::predict_prefix(std::span<const std::string> texts,
                                          std::size_t max_new_queries) {
  std::lock_guard lock(mu_);
  std::size_t fresh = 0;
  std::size_t take = 0;
  std::unordered_set<std::string> pending;
  for (; take < texts.size(); ++take) {
    const auto& t = texts[take];
    const bool is_new = !caching_ || (!cache_.contains(t) && !pending.contains(t));
    if (is_new) {
      if (fresh == max_new_queries) break;
      ++fresh;
      if (caching_) pending.insert(t);
    }
  }
  if (take == 0) return {};
  return evaluate_locked(texts.subspan(0, take));
}

std::size_t VictimOracle::queries() const {
  std::lock_guard lock(mu_);
  return queries_;
}

void VictimOracle::reset() {
  std::lock_guard lock(mu_);
  cache_.clear();
  queries_ = 0;
}

}  // namespace toxictrap
