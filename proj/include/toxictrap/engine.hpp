#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "toxictrap/dataset.hpp"
#include "toxictrap/encoder.hpp"
#include "toxictrap/metrics.hpp"
#include "toxictrap/recipe.hpp"
#include "toxictrap/resources.hpp"
#include "toxictrap/search.hpp"
#include "toxictrap/victim.hpp"

namespace toxictrap {

inline constexpr int kResultsSchemaVersion = 1;

// Shared read-only attack assets. Without an explicit encoder the
// similarity constraints use the mean word vector of `resources`.
struct EngineContext {
  const Resources* resources = nullptr;
  const SentenceEncoder* encoder = nullptr;
  const MaskedLanguageModel* mlm = nullptr;
};

struct RunOptions {
  std::size_t parallelism = 1;
  std::uint64_t seed = 0;
  std::optional<std::size_t> budget;  // overrides recipe.budget
  bool caching = true;
};

struct RunOutput {
  std::vector<AttackResult> results;  // input order
  RunMetrics metrics;
};

std::uint64_t seed_rng(std::uint64_t run_seed, std::size_t index);

// One seed against a fresh oracle (its own cache and ledger). Transport
// failures become FAILED_TRANSPORT; other errors propagate.
AttackResult attack_seed(const Record& record, const AttackRecipe& recipe, std::shared_ptr<const VictimModel> model,
                         const EngineContext& ctx, std::size_t budget, std::uint64_t rng_seed, bool caching = true);

// Results do not depend on `parallelism`.
RunOutput run_attacks(const Dataset& data, const AttackRecipe& recipe, std::shared_ptr<const VictimModel> model,
                      const EngineContext& ctx, const RunOptions& options);

nlohmann::ordered_json result_to_json(const AttackResult& r, std::size_t index);

// Header line {"schema_version", "config"} then one object per result.
void save_results(const std::filesystem::path& path, std::span<const AttackResult> results,
                  const nlohmann::ordered_json& config);

// Writes `j` with two-space indentation and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);

}  // namespace toxictrap
