#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxictrap/constraint.hpp"
#include "toxictrap/goal.hpp"
#include "toxictrap/transform.hpp"
#include "toxictrap/victim.hpp"

namespace toxictrap {

enum class Ranking { kUnk, kDel, kWs, kGrad };
std::string_view to_string(Ranking r);
Ranking parse_ranking(std::string_view name);

enum class SearchKind { kGreedyWir, kBeam, kGenetic };
std::string_view to_string(SearchKind k);
SearchKind parse_search_kind(std::string_view name);

inline constexpr std::size_t kGreedyBudget = 2000;
inline constexpr std::size_t kPopulationBudget = 20000;

struct SearchStrategy {
  SearchKind kind = SearchKind::kGreedyWir;
  Ranking ranking = Ranking::kUnk;  // GREEDY_WIR
  std::size_t width = 8;            // BEAM
  std::size_t population = 60;      // GENETIC
  std::size_t generations = 20;
  double mutation_rate = 0.2;

  static SearchStrategy greedy(Ranking r) { return {SearchKind::kGreedyWir, r, 8, 60, 20, 0.2}; }
  static SearchStrategy beam(std::size_t width) { return {SearchKind::kBeam, Ranking::kUnk, width, 60, 20, 0.2}; }
  static SearchStrategy genetic(std::size_t population, std::size_t generations, double mutation_rate) {
    return {SearchKind::kGenetic, Ranking::kUnk, 8, population, generations, mutation_rate};
  }

  void validate() const;
  std::size_t default_budget() const { return kind == SearchKind::kGreedyWir ? kGreedyBudget : kPopulationBudget; }
  bool operator==(const SearchStrategy&) const = default;
};

std::string describe(const SearchStrategy& s);

enum class AttackStatus { kSuccess, kFailedBudget, kFailedExhausted, kSkipped, kFailedTransport };
std::string_view to_string(AttackStatus s);
AttackStatus parse_attack_status(std::string_view name);

struct AttackResult {
  AttackStatus status = AttackStatus::kFailedExhausted;
  AttackedText final;
  std::size_t queries = 0;  // ledger delta for this seed, seed query included
  std::vector<WordEdit> edits;
  ProbRow seed_output;
  ProbRow final_output;
  double seed_score = 0;
  double final_score = 0;
  std::string message;  // skip reason or transport error
};

// Everything a strategy needs besides the goal and the oracle.
struct SearchContext {
  const Transformation* transformation = nullptr;
  std::span<const Constraint> constraints;
  TransformContext transform;
  ConstraintContext constraint;
};

// Largest number of modified words any MAX_RATIO constraint allows.
std::optional<std::size_t> edit_cap(std::span<const Constraint> constraints, const AttackedText& seed);

// Charges queries against a per-seed limit. `spent` covers queries made
// before the search started (the seed query).
class QueryBudget {
 public:
  QueryBudget(VictimOracle& oracle, std::size_t limit, std::size_t spent = 0);

  std::size_t used() const;
  std::size_t remaining() const;
  bool exhausted() const noexcept { return exhausted_; }

  // Goal results for the longest affordable prefix of `texts`. Sets
  // exhausted() when the prefix is shorter than the input.
  std::vector<GoalResult> evaluate(const GoalState& goal, std::span<const std::string> texts);

  VictimOracle& oracle() noexcept { return oracle_; }

 private:
  VictimOracle& oracle_;
  std::size_t limit_;
  std::size_t base_;
  bool exhausted_ = false;
};

// Positions sorted by descending importance, ties by ascending position.
// Returns nullopt when the budget ran out mid-ranking.
std::optional<std::vector<std::size_t>> rank_words(Ranking ranking, const AttackedText& text,
                                                   std::span<const std::size_t> positions, const GoalState& goal,
                                                   QueryBudget& budget, const SearchContext& ctx);

// Raw importances in `positions` order (same contract as rank_words).
std::optional<std::vector<double>> word_importance(Ranking ranking, const AttackedText& text,
                                                   std::span<const std::size_t> positions, const GoalState& goal,
                                                   QueryBudget& budget, const SearchContext& ctx);

AttackResult greedy_wir_attack(const GoalState& goal, const SearchContext& ctx, Ranking ranking, QueryBudget& budget);
AttackResult beam_attack(const GoalState& goal, const SearchContext& ctx, std::size_t width, QueryBudget& budget);
AttackResult genetic_attack(const GoalState& goal, const SearchContext& ctx, std::size_t population,
                            std::size_t generations, double mutation_rate, std::uint64_t rng_seed,
                            QueryBudget& budget);

AttackResult run_search(const SearchStrategy& strategy, const GoalState& goal, const SearchContext& ctx,
                        QueryBudget& budget, std::uint64_t rng_seed);

}  // namespace toxictrap
