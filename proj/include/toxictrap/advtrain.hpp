#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "toxictrap/engine.hpp"
#include "toxictrap/recipe.hpp"
#include "toxictrap/surrogate.hpp"

namespace toxictrap {

// One attack = SAT, several = EAT (their adversarial examples are pooled).
struct AdvTrainConfig {
  std::vector<AttackRecipe> attacks;
  double mix_weight = 1.0;  // weight of each adversarial record in the loss
  std::size_t per_attack_budget = 200;  // adversarial examples kept per attack and round
  std::size_t rounds = 1;
  std::uint64_t seed = 7;
  std::size_t parallelism = 1;
  TrainConfig train;

  void validate() const;
};

struct AugmentStats {
  std::string attack;
  std::size_t attempted = 0;
  std::size_t successes = 0;
  std::size_t added = 0;
};

// Runs every attack over the correctly-predicted toxic records of `data`
// (in a seeded random order) and appends the first `per_attack_budget`
// successful adversarial texts per attack with the seed's labels and a
// provenance tag "attack#record". Original records come first, unchanged.
Dataset augment(const Dataset& data, std::span<const AttackRecipe> attacks, std::shared_ptr<const VictimModel> model,
                const EngineContext& ctx, std::size_t per_attack_budget, std::uint64_t seed, std::size_t parallelism,
                std::vector<AugmentStats>* stats = nullptr);

struct RoundReport {
  std::size_t round = 0;
  std::vector<AugmentStats> attacks;
  std::size_t adversarial_records = 0;  // cumulative
  Evaluation holdout;
};

struct AdvTrainReport {
  std::vector<std::string> attacks;
  std::size_t train_size = 0;
  std::size_t holdout_size = 0;
  Evaluation base_holdout;
  Evaluation robust_holdout;
  std::vector<RoundReport> rounds;
};

struct AdvTrainResult {
  SurrogateModel base;
  SurrogateModel robust;
  AdvTrainReport report;
};

// Splits `corpus` (train.holdout_fraction, seed), fits the base model on the
// train part, then per round: attack the current model, pool the new
// adversarial records with earlier ones, and refit on clean + adversarial
// data with adversarial weight mix_weight. Deterministic for a given seed.
AdvTrainResult adversarial_train(const Dataset& corpus, const AdvTrainConfig& config, const EngineContext& ctx);

nlohmann::ordered_json report_to_json(const AdvTrainReport& report);

struct RobustnessRow {
  std::string recipe;
  bool unseen = false;
  RunMetrics metrics;
};

// One run_attacks per recipe; `unseen` names the held-out recipe, if any.
std::vector<RobustnessRow> evaluate_robustness(std::shared_ptr<const VictimModel> model,
                                               std::span<const AttackRecipe> recipes, const Dataset& seeds,
                                               const EngineContext& ctx, const RunOptions& options,
                                               const std::optional<std::string>& unseen = std::nullopt);

nlohmann::ordered_json robustness_to_json(std::span<const RobustnessRow> rows);

}  // namespace toxictrap
