#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "toxictrap/dataset.hpp"
#include "toxictrap/text.hpp"

namespace toxictrap {

using ProbRow = std::vector<double>;

struct VictimOutput {
  std::vector<ProbRow> probs;  // one row per input text, one column per label
};

// Index of the largest entry; ties go to the lowest index (benign wins).
std::size_t argmax(const ProbRow& row);

// BINARY/MULTICLASS: one-hot argmax. MULTILABEL: every label with prob >= tau.
LabelVector predicted_labels(const TaskSpec& task, const ProbRow& row,
                             double tau = kMultilabelThreshold);

// Checks the per-task row invariants (rows sum to 1, or entries in [0,1]).
bool valid_output_row(const TaskSpec& task, const ProbRow& row);

// The attacked classifier. Implementations must be safe to call from
// several threads at once.
class VictimModel {
 public:
  virtual ~VictimModel() = default;

  virtual const TaskSpec& task() const = 0;
  virtual VictimOutput predict(std::span<const std::string> texts) const = 0;

  virtual bool has_gradients() const { return false; }
  // Per-word importance from the loss gradient; see SurrogateModel.
  virtual std::vector<double> gradient_word_scores(const AttackedText& text) const;
};

// Query ledger and response cache in front of a VictimModel. `queries()`
// counts distinct texts that reached the model; cache hits are free.
class VictimOracle {
 public:
  explicit VictimOracle(std::shared_ptr<const VictimModel> model, bool caching = true);

  const TaskSpec& task() const { return model_->task(); }
  const VictimModel& model() const { return *model_; }

  VictimOutput predict(std::span<const std::string> texts);
  ProbRow predict_one(const std::string& text);

  // Evaluates the longest prefix of `texts` whose new (uncached) queries fit
  // in `max_new_queries`. The returned rows cover that prefix only.
  VictimOutput predict_prefix(std::span<const std::string> texts, std::size_t max_new_queries);

  std::size_t queries() const;
  void reset();

  bool has_gradients() const { return model_->has_gradients(); }
  std::vector<double> gradient_word_scores(const AttackedText& text) const {
    return model_->gradient_word_scores(text);
  }

 private:
  VictimOutput evaluate_locked(std::span<const std::string> texts);

  std::shared_ptr<const VictimModel> model_;
  bool caching_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, ProbRow> cache_;
  std::size_t queries_ = 0;
};

}  // namespace toxictrap
