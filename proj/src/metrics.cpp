#include "toxictrap/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "toxictrap/error.hpp"

namespace toxictrap {

bool counts_as_attempt(AttackStatus s) {
  return s != AttackStatus::kSkipped && s != AttackStatus::kFailedTransport;
}

std::optional<double> compute_asr(std::span<const AttackResult> results) {
  std::size_t attempted = 0, successes = 0;
  for (const auto& r : results) {
    if (!counts_as_attempt(r.status)) continue;
    ++attempted;
    successes += r.status == AttackStatus::kSuccess;
  }
  if (attempted == 0) return std::nullopt;
  return static_cast<double>(successes) / static_cast<double>(attempted);
}

std::optional<double> avg_queries(std::span<const AttackResult> results) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : results) {
    if (!counts_as_attempt(r.status)) continue;
    sum += static_cast<double>(r.queries);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::optional<double> avg_perturb_pct(std::span<const AttackResult> results) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : results) {
    if (r.status != AttackStatus::kSuccess) continue;
    sum += perturbed_ratio(r.final);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return 100.0 * sum / static_cast<double>(n);
}

RunMetrics compute_metrics(std::span<const AttackResult> results) {
  RunMetrics m;
  m.total_seeds = results.size();
  for (const auto& r : results) {
    m.skipped += r.status == AttackStatus::kSkipped;
    m.transport_failures += r.status == AttackStatus::kFailedTransport;
    m.successes += r.status == AttackStatus::kSuccess;
  }
  m.attempted = m.total_seeds - m.skipped - m.transport_failures;
  m.asr = compute_asr(results);
  m.avg_queries = avg_queries(results);
  m.avg_perturb_pct = avg_perturb_pct(results);
  return m;
}

nlohmann::ordered_json metrics_to_json(const RunMetrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
  nlohmann::ordered_json j;
  j["total_seeds"] = m.total_seeds;
  j["skipped"] = m.skipped;
  j["transport_failures"] = m.transport_failures;
  j["attempted"] = m.attempted;
  j["successes"] = m.successes;
  j["asr"] = opt(m.asr);
  j["avg_queries"] = opt(m.avg_queries);
  j["avg_perturb_pct"] = opt(m.avg_perturb_pct);
  if (!m.asr) j["undefined"] = "no attempted seeds";
  return j;
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> truths) {
  if (scores.size() != truths.size()) throw PreconditionError("roc_auc: scores and truths differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks (1-based); tied scores share the mean of their ranks.
  double pos_rank_sum = 0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (truths[order[k]]) {
        pos_rank_sum += midrank;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (pos_rank_sum - p * (p + 1) / 2.0) / (p * q);
}

std::uint8_t is_toxic(const Record& r) { return is_benign(r.labels) ? 0 : 1; }

namespace {

std::size_t group_index(const Dataset& data, const std::string& group) {
  const auto it = std::find(data.identity_groups.begin(), data.identity_groups.end(), group);
  if (it == data.identity_groups.end()) throw DataError("dataset has no identity column for group '" + group + "'");
  return static_cast<std::size_t>(it - data.identity_groups.begin());
}

BiasMetric subset_auc(std::span<const double> scores, const Dataset& data, const std::string& group,
                      const std::string& what, auto keep) {
  if (scores.size() != data.records.size()) throw PreconditionError("one score per record expected");
  const auto g = group_index(data, group);
  std::vector<double> s;
  std::vector<std::uint8_t> t;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& r = data.records[i];
    const bool member = r.identities.at(g) != 0;
    if (!keep(member, is_toxic(r))) continue;
    s.push_back(scores[i]);
    t.push_back(is_toxic(r));
  }
  BiasMetric m;
  m.value = roc_auc(s, t);
  if (!m.value) m.undefined_reason = what + " for group '" + group + "' contains a single class";
  return m;
}

}  // namespace

BiasMetric subgroup_auc(std::span<const double> scores, const Dataset& data, const std::string& group) {
  return subset_auc(scores, data, group, "subgroup", [](bool member, std::uint8_t) { return member; });
}

BiasMetric bpsn_auc(std::span<const double> scores, const Dataset& data, const std::string& group) {
  return subset_auc(scores, data, group, "BPSN subset",
                    [](bool member, std::uint8_t toxic) { return member ? toxic == 0 : toxic == 1; });
}

}  // namespace toxictrap
