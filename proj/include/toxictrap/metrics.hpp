#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "toxictrap/dataset.hpp"
#include "toxictrap/search.hpp"

namespace toxictrap {

// SKIPPED and FAILED_TRANSPORT results are excluded from every denominator.
// A metric over an empty set is nullopt (reported as null, never NaN).
struct RunMetrics {
  std::size_t total_seeds = 0;
  std::size_t skipped = 0;
  std::size_t transport_failures = 0;
  std::size_t attempted = 0;
  std::size_t successes = 0;
  std::optional<double> asr;              // successes / attempted
  std::optional<double> avg_queries;      // over attempted
  std::optional<double> avg_perturb_pct;  // 100 * mean perturbed ratio over successes

  bool operator==(const RunMetrics&) const = default;
};

bool counts_as_attempt(AttackStatus s);

std::optional<double> compute_asr(std::span<const AttackResult> results);
std::optional<double> avg_queries(std::span<const AttackResult> results);
std::optional<double> avg_perturb_pct(std::span<const AttackResult> results);
RunMetrics compute_metrics(std::span<const AttackResult> results);

nlohmann::ordered_json metrics_to_json(const RunMetrics& m);

// P(random positive outscores random negative), ties count one half.
// nullopt unless both classes are present.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> truths);

struct BiasMetric {
  std::optional<double> value;
  std::string undefined_reason;  // set when value is empty
};

// `scores` holds one toxicity score per dataset record.
BiasMetric subgroup_auc(std::span<const double> scores, const Dataset& data, const std::string& group);
// Non-toxic group members against toxic records outside the group.
BiasMetric bpsn_auc(std::span<const double> scores, const Dataset& data, const std::string& group);

// 1 for any record carrying a toxic label.
std::uint8_t is_toxic(const Record& r);

}  // namespace toxictrap
