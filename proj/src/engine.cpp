#include "toxictrap/engine.hpp"

#include <exception>
#include <fstream>

#include "toxictrap/error.hpp"

namespace toxictrap {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

nlohmann::ordered_json probs_json(const ProbRow& p) { return nlohmann::ordered_json(p); }

}  // namespace

std::uint64_t seed_rng(std::uint64_t run_seed, std::size_t index) {
  return splitmix64(splitmix64(run_seed) ^ static_cast<std::uint64_t>(index));
}

AttackResult attack_seed(const Record& record, const AttackRecipe& recipe, std::shared_ptr<const VictimModel> model,
                         const EngineContext& ctx, std::size_t budget, std::uint64_t rng_seed, bool caching) {
  if (!ctx.resources) throw PreconditionError("engine context has no resources");
  std::optional<MeanVectorEncoder> fallback;
  const SentenceEncoder* encoder = ctx.encoder;
  if (!encoder) encoder = &fallback.emplace(ctx.resources->embeddings);

  VictimOracle oracle(std::move(model), caching);
  const AttackedText seed(record.text);
  AttackResult result;
  result.final = seed;
  try {
    const GoalState goal = init_goal(seed, record.labels, oracle);
    if (goal.status == GoalStatus::kSkipped) {
      result.status = AttackStatus::kSkipped;
      result.message = goal.skip_reason;
      result.queries = oracle.queries();
      result.seed_output = result.final_output = goal.seed_output;
      result.seed_score = result.final_score = check_goal(goal, goal.seed_output).score;
      return result;
    }
    SearchContext sctx;
    sctx.transformation = &recipe.transformation;
    sctx.constraints = recipe.constraints;
    sctx.transform = {ctx.resources, ctx.mlm};
    sctx.constraint = {ctx.resources, encoder};
    QueryBudget qb(oracle, budget, oracle.queries());
    return run_search(recipe.search, goal, sctx, qb, rng_seed);
  } catch (const TransportError& e) {
    result.status = AttackStatus::kFailedTransport;
    result.message = e.what();
    result.queries = oracle.queries();
    return result;
  }
}

RunOutput run_attacks(const Dataset& data, const AttackRecipe& recipe, std::shared_ptr<const VictimModel> model,
                      const EngineContext& ctx, const RunOptions& options) {
  if (!model) throw PreconditionError("run_attacks needs a victim model");
  if (data.task.kind != recipe.task) {
    throw ConfigError("dataset task '" + std::string(to_string(data.task.kind)) + "' does not match recipe task '" +
                      std::string(to_string(recipe.task)) + "'");
  }
  if (model->task().kind != data.task.kind || model->task().num_labels() != data.task.num_labels()) {
    throw ConfigError("victim label space does not match the dataset");
  }
  if (options.parallelism == 0) throw ConfigError("parallelism must be >= 1");
  const std::size_t budget = options.budget.value_or(recipe.budget);
  if (budget == 0) throw ConfigError("budget must be >= 1");

  const std::size_t n = data.records.size();
  RunOutput out;
  out.results.resize(n);
  std::vector<std::exception_ptr> errors(n);
  auto one = [&](std::size_t i) {
    try {
      out.results[i] = attack_seed(data.records[i], recipe, model, ctx, budget, seed_rng(options.seed, i), options.caching);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (options.parallelism == 1) {
    for (std::size_t i = 0; i < n; ++i) one(i);
  } else {
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(options.parallelism))
    for (std::int64_t i = 0; i < count; ++i) one(static_cast<std::size_t>(i));
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  out.metrics = compute_metrics(out.results);
  return out;
}

nlohmann::ordered_json result_to_json(const AttackResult& r, std::size_t index) {
  nlohmann::ordered_json j;
  j["index"] = index;
  j["status"] = to_string(r.status);
  j["seed_text"] = r.final.original_text();
  j["final_text"] = r.final.text();
  j["queries"] = r.queries;
  j["perturbed_ratio"] = r.final.size() == 0 ? 0.0 : perturbed_ratio(r.final);
  j["seed_score"] = r.seed_score;
  j["final_score"] = r.final_score;
  j["seed_probs"] = probs_json(r.seed_output);
  j["final_probs"] = probs_json(r.final_output);
  auto edits = nlohmann::ordered_json::array();
  for (const auto& e : r.edits) {
    nlohmann::ordered_json ej;
    ej["index"] = e.index;
    ej["original"] = e.original;
    ej["replacement"] = e.replacement;
    ej["origin"] = e.origin == EditOrigin::kWord ? "word" : "character";
    edits.push_back(ej);
  }
  j["edits"] = edits;
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

void save_results(const std::filesystem::path& path, std::span<const AttackResult> results,
                  const nlohmann::ordered_json& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  nlohmann::ordered_json header;
  header["schema_version"] = kResultsSchemaVersion;
  header["config"] = config;
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < results.size(); ++i) out << result_to_json(results[i], i).dump() << '\n';
  if (!out) throw LoadError("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw LoadError("failed writing " + path.string());
}

}  // namespace toxictrap
