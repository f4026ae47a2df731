#include "toxictrap/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "toxictrap/error.hpp"

namespace toxictrap {
namespace {

struct Scored {
  AttackedText text;
  GoalResult goal;
};

AttackResult make_result(AttackStatus status, const GoalState& goal, const AttackedText& final,
                         const GoalResult& final_goal, const QueryBudget& budget) {
  AttackResult r;
  r.status = status;
  r.final = final;
  r.edits = final.edits();
  r.queries = budget.used();
  r.seed_output = goal.seed_output;
  r.seed_score = check_goal(goal, goal.seed_output).score;
  r.final_output = final_goal.output;
  r.final_score = final_goal.score;
  return r;
}

std::vector<std::string> texts_of(const std::vector<AttackedText>& xs) {
  std::vector<std::string> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.text());
  return out;
}

// Applies `edit` and runs the constraints; nullopt when inadmissible.
std::optional<AttackedText> try_edit(const AttackedText& from, const WordEdit& edit, const GoalState& goal,
                                     const SearchContext& ctx) {
  AttackedText next = from.apply(edit);
  if (!check_all(ctx.constraints, goal.seed, next, edit, ctx.constraint).pass) return std::nullopt;
  return next;
}

// Index of the best successful result, else of the best score; first wins ties.
std::size_t pick(const std::vector<GoalResult>& results, bool& any_success) {
  any_success = false;
  std::size_t best = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const auto& b = results[best];
    if (r.succeeded && !any_success) {
      any_success = true;
      best = i;
    } else if (r.succeeded == any_success && r.score > b.score) {
      best = i;
    }
  }
  return best;
}

std::vector<std::size_t> candidate_positions(const AttackedText& text, const SearchContext& ctx) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!text.attackable(i) || ctx.transform.resources->stopwords.contains(text.word(i))) continue;
    out.push_back(i);
  }
  return out;
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

// ------------------------------------------------------------------- names

std::string_view to_string(Ranking r) {
  switch (r) {
    case Ranking::kUnk: return "unk";
    case Ranking::kDel: return "del";
    case Ranking::kWs: return "ws";
    case Ranking::kGrad: return "grad";
  }
  return "?";
}

Ranking parse_ranking(std::string_view name) {
  for (auto r : {Ranking::kUnk, Ranking::kDel, Ranking::kWs, Ranking::kGrad}) {
    if (to_string(r) == name) return r;
  }
  throw ConfigError("unknown word ranking '" + std::string(name) + "' (expected unk, del, ws or grad)");
}

std::string_view to_string(SearchKind k) {
  switch (k) {
    case SearchKind::kGreedyWir: return "greedy_wir";
    case SearchKind::kBeam: return "beam";
    case SearchKind::kGenetic: return "genetic";
  }
  return "?";
}

SearchKind parse_search_kind(std::string_view name) {
  for (auto k : {SearchKind::kGreedyWir, SearchKind::kBeam, SearchKind::kGenetic}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown search kind '" + std::string(name) + "' (expected greedy_wir, beam or genetic)");
}

std::string_view to_string(AttackStatus s) {
  switch (s) {
    case AttackStatus::kSuccess: return "success";
    case AttackStatus::kFailedBudget: return "failed_budget";
    case AttackStatus::kFailedExhausted: return "failed_exhausted";
    case AttackStatus::kSkipped: return "skipped";
    case AttackStatus::kFailedTransport: return "failed_transport";
  }
  return "?";
}

AttackStatus parse_attack_status(std::string_view name) {
  for (auto s : {AttackStatus::kSuccess, AttackStatus::kFailedBudget, AttackStatus::kFailedExhausted,
                 AttackStatus::kSkipped, AttackStatus::kFailedTransport}) {
    if (to_string(s) == name) return s;
  }
  throw DataError("unknown attack status '" + std::string(name) + "'");
}

void SearchStrategy::validate() const {
  switch (kind) {
    case SearchKind::kGreedyWir:
      break;
    case SearchKind::kBeam:
      if (width < 1) throw ConfigError("beam width must be >= 1");
      break;
    case SearchKind::kGenetic:
      if (population < 2) throw ConfigError("genetic population must be >= 2");
      if (!(mutation_rate > 0.0 && mutation_rate < 1.0)) throw ConfigError("mutation_rate must be in (0, 1)");
      break;
  }
}

std::string describe(const SearchStrategy& s) {
  switch (s.kind) {
    case SearchKind::kGreedyWir: return "greedy_wir(" + std::string(to_string(s.ranking)) + ")";
    case SearchKind::kBeam: return "beam(" + std::to_string(s.width) + ")";
    case SearchKind::kGenetic: {
      std::ostringstream os;
      os << "genetic(" << s.population << ", " << s.generations << ", " << s.mutation_rate << ")";
      return os.str();
    }
  }
  return "?";
}

std::optional<std::size_t> edit_cap(std::span<const Constraint> constraints, const AttackedText& seed) {
  std::optional<std::size_t> cap;
  for (const auto& c : constraints) {
    if (c.kind != ConstraintKind::kMaxRatio) continue;
    const auto v = ratio_cap(c.threshold, seed.size());
    cap = cap ? std::min(*cap, v) : v;
  }
  return cap;
}

// ------------------------------------------------------------------ budget

QueryBudget::QueryBudget(VictimOracle& oracle, std::size_t limit, std::size_t spent)
    : oracle_(oracle), limit_(limit), base_(oracle.queries() - std::min(spent, oracle.queries())) {
  if (limit == 0) throw PreconditionError("query budget must be > 0");
}

std::size_t QueryBudget::used() const { return oracle_.queries() - base_; }

std::size_t QueryBudget::remaining() const {
  const auto u = used();
  return u >= limit_ ? 0 : limit_ - u;
}

std::vector<GoalResult> QueryBudget::evaluate(const GoalState& goal, std::span<const std::string> texts) {
  std::vector<GoalResult> out;
  if (texts.empty()) return out;
  const auto rows = oracle_.predict_prefix(texts, remaining());
  if (rows.probs.size() < texts.size()) exhausted_ = true;
  out.reserve(rows.probs.size());
  for (const auto& p : rows.probs) out.push_back(check_goal(goal, p));
  return out;
}

// ----------------------------------------------------------------- ranking

std::optional<std::vector<double>> word_importance(Ranking ranking, const AttackedText& text,
                                                   std::span<const std::size_t> positions, const GoalState& goal,
                                                   QueryBudget& budget, const SearchContext& ctx) {
  for (auto p : positions) {
    if (p >= text.size()) throw PreconditionError("ranking position out of range");
  }
  std::vector<double> importance(positions.size(), 0.0);
  if (positions.empty()) return importance;

  if (ranking == Ranking::kGrad) {
    if (!budget.oracle().has_gradients()) {
      throw UnsupportedCapability("gradient ranking needs a victim that exposes gradients");
    }
    const auto g = budget.oracle().gradient_word_scores(text);
    for (std::size_t j = 0; j < positions.size(); ++j) importance[j] = g.at(positions[j]);
    return importance;
  }

  std::vector<std::string> probes{text.text()};
  for (auto p : positions) {
    probes.push_back(ranking == Ranking::kDel ? text.text_without(p) : text.text_with_replacement(p, kUnkToken));
  }
  const auto res = budget.evaluate(goal, probes);
  if (res.size() < probes.size()) return std::nullopt;
  const double base = res[0].score;
  // Goal scores rise as the text turns benign, so a word's importance is
  // the gain from removing it (the drop in toxicity).
  for (std::size_t j = 0; j < positions.size(); ++j) importance[j] = res[j + 1].score - base;
  if (ranking != Ranking::kWs) return importance;

  // Softmax-weighted UNK delta times the best single-swap gain.
  const double mx = *std::max_element(importance.begin(), importance.end());
  double sum = 0;
  std::vector<double> weight(positions.size());
  for (std::size_t j = 0; j < positions.size(); ++j) sum += weight[j] = std::exp(importance[j] - mx);
  for (std::size_t j = 0; j < positions.size(); ++j) {
    const auto cands = candidates(*ctx.transformation, text, positions[j], ctx.transform);
    double gain = 0;
    if (!cands.empty()) {
      std::vector<std::string> swapped;
      for (const auto& e : cands) swapped.push_back(text.text_with_replacement(e.index, e.replacement));
      const auto r = budget.evaluate(goal, swapped);
      if (r.size() < swapped.size()) return std::nullopt;
      gain = -std::numeric_limits<double>::infinity();
      for (const auto& x : r) gain = std::max(gain, x.score - base);
    }
    importance[j] = weight[j] / sum * gain;
  }
  return importance;
}

std::optional<std::vector<std::size_t>> rank_words(Ranking ranking, const AttackedText& text,
                                                   std::span<const std::size_t> positions, const GoalState& goal,
                                                   QueryBudget& budget, const SearchContext& ctx) {
  const auto imp = word_importance(ranking, text, positions, goal, budget, ctx);
  if (!imp) return std::nullopt;
  std::vector<std::size_t> order(positions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if ((*imp)[a] != (*imp)[b]) return (*imp)[a] > (*imp)[b];
    return positions[a] < positions[b];
  });
  std::vector<std::size_t> out;
  for (auto j : order) out.push_back(positions[j]);
  return out;
}

// ------------------------------------------------------------------ greedy

AttackResult greedy_wir_attack(const GoalState& goal, const SearchContext& ctx, Ranking ranking, QueryBudget& budget) {
  AttackedText current = goal.seed;
  GoalResult current_goal = check_goal(goal, goal.seed_output);
  const auto cap = edit_cap(ctx.constraints, goal.seed);

  const auto positions = candidate_positions(current, ctx);
  const auto order = rank_words(ranking, current, positions, goal, budget, ctx);
  if (!order) return make_result(AttackStatus::kFailedBudget, goal, current, current_goal, budget);

  for (auto pos : *order) {
    if (cap && current.modified_indices().size() >= *cap) break;
    std::vector<AttackedText> admissible;
    for (const auto& e : candidates(*ctx.transformation, current, pos, ctx.transform)) {
      if (auto next = try_edit(current, e, goal, ctx)) admissible.push_back(std::move(*next));
    }
    if (admissible.empty()) continue;
    const auto results = budget.evaluate(goal, texts_of(admissible));
    if (!results.empty()) {
      bool success = false;
      const auto best = pick(results, success);
      if (success) return make_result(AttackStatus::kSuccess, goal, admissible[best], results[best], budget);
      if (results[best].score > current_goal.score) {
        current = admissible[best];
        current_goal = results[best];
      }
    }
    if (budget.exhausted()) return make_result(AttackStatus::kFailedBudget, goal, current, current_goal, budget);
  }
  return make_result(AttackStatus::kFailedExhausted, goal, current, current_goal, budget);
}

// -------------------------------------------------------------------- beam

AttackResult beam_attack(const GoalState& goal, const SearchContext& ctx, std::size_t width, QueryBudget& budget) {
  if (width < 1) throw PreconditionError("beam width must be >= 1");
  const auto cap = edit_cap(ctx.constraints, goal.seed);
  std::vector<Scored> beam{{goal.seed, check_goal(goal, goal.seed_output)}};
  Scored best = beam.front();

  for (std::size_t depth = 0;; ++depth) {
    if (cap && depth >= *cap) break;
    std::vector<AttackedText> expansions;
    std::unordered_set<std::string> seen;
    for (const auto& b : beam) {
      for (auto pos : candidate_positions(b.text, ctx)) {
        if (b.text.modified_indices().contains(pos)) continue;
        for (const auto& e : candidates(*ctx.transformation, b.text, pos, ctx.transform)) {
          auto next = try_edit(b.text, e, goal, ctx);
          if (next && seen.insert(next->text()).second) expansions.push_back(std::move(*next));
        }
      }
    }
    if (expansions.empty()) break;
    const auto results = budget.evaluate(goal, texts_of(expansions));
    if (!results.empty()) {
      bool success = false;
      const auto top = pick(results, success);
      if (success) return make_result(AttackStatus::kSuccess, goal, expansions[top], results[top], budget);
    }
    std::vector<std::size_t> order(results.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return results[a].score > results[b].score; });
    beam.clear();
    for (std::size_t k = 0; k < order.size() && k < width; ++k) beam.push_back({expansions[order[k]], results[order[k]]});
    if (!beam.empty() && beam.front().goal.score > best.goal.score) best = beam.front();
    if (budget.exhausted()) return make_result(AttackStatus::kFailedBudget, goal, best.text, best.goal, budget);
  }
  return make_result(AttackStatus::kFailedExhausted, goal, best.text, best.goal, budget);
}

// ----------------------------------------------------------------- genetic

AttackResult genetic_attack(const GoalState& goal, const SearchContext& ctx, std::size_t population,
                            std::size_t generations, double mutation_rate, std::uint64_t rng_seed,
                            QueryBudget& budget) {
  if (population < 2) throw PreconditionError("population must be >= 2");
  std::mt19937_64 rng(rng_seed);
  const AttackedText& seed = goal.seed;
  const GoalResult seed_goal = check_goal(goal, goal.seed_output);

  // Admissible single edits of the seed: the initial gene pool.
  std::vector<AttackedText> pool;
  for (const auto& [pos, edits] : all_position_candidates(*ctx.transformation, seed, ctx.transform)) {
    for (const auto& e : edits) {
      if (auto next = try_edit(seed, e, goal, ctx)) pool.push_back(std::move(*next));
    }
  }
  if (pool.empty()) return make_result(AttackStatus::kFailedExhausted, goal, seed, seed_goal, budget);

  std::vector<AttackedText> members;
  for (std::size_t i = 0; i < population; ++i) members.push_back(pool[rng() % pool.size()]);

  auto evaluate = [&](const std::vector<AttackedText>& xs, std::vector<Scored>& out) -> std::optional<AttackResult> {
    const auto results = budget.evaluate(goal, texts_of(xs));
    out.clear();
    for (std::size_t i = 0; i < results.size(); ++i) out.push_back({xs[i], results[i]});
    if (!results.empty()) {
      bool success = false;
      const auto top = pick(results, success);
      if (success) return make_result(AttackStatus::kSuccess, goal, xs[top], results[top], budget);
    }
    if (budget.exhausted()) {
      if (out.empty()) return make_result(AttackStatus::kFailedBudget, goal, seed, seed_goal, budget);
      bool ignored = false;
      const auto top = pick(results, ignored);
      return make_result(AttackStatus::kFailedBudget, goal, xs[top], results[top], budget);
    }
    return std::nullopt;
  };

  std::vector<Scored> scored;
  if (auto done = evaluate(members, scored)) return *done;

  auto tournament = [&]() -> const Scored& {
    const auto a = rng() % scored.size(), b = rng() % scored.size();
    if (scored[a].goal.score != scored[b].goal.score) return scored[a].goal.score > scored[b].goal.score ? scored[a] : scored[b];
    return scored[std::min(a, b)];
  };

  // Rebuilds a child from the seed; nullopt if any step is inadmissible.
  auto assemble = [&](const std::vector<WordEdit>& edits) -> std::optional<AttackedText> {
    AttackedText t = seed;
    for (const auto& e : edits) {
      auto next = try_edit(t, e, goal, ctx);
      if (!next) return std::nullopt;
      t = std::move(*next);
    }
    return t;
  };

  auto crossover = [&](const AttackedText& p1, const AttackedText& p2) -> AttackedText {
    std::map<std::size_t, WordEdit> e1, e2;
    for (const auto& e : p1.edits()) e1[e.index] = e;
    for (const auto& e : p2.edits()) e2[e.index] = e;
    std::vector<std::size_t> positions;
    for (const auto& [p, e] : e1) positions.push_back(p);
    for (const auto& [p, e] : e2) {
      if (!e1.contains(p)) positions.push_back(p);
    }
    std::sort(positions.begin(), positions.end());
    const std::size_t cut = rng() % (positions.size() + 1);
    std::vector<WordEdit> child;
    for (std::size_t k = 0; k < positions.size(); ++k) {
      const auto& src = k < cut ? e1 : e2;
      const auto it = src.find(positions[k]);
      if (it != src.end()) child.push_back(it->second);
    }
    if (child.empty()) return p1;
    auto built = assemble(child);
    return built ? std::move(*built) : p1;
  };

  auto mutate = [&](const AttackedText& x) -> AttackedText {
    std::vector<std::size_t> open;
    for (auto p : candidate_positions(x, ctx)) {
      if (!x.modified_indices().contains(p)) open.push_back(p);
    }
    if (open.empty()) return x;
    const auto pos = open[rng() % open.size()];
    std::vector<AttackedText> options;
    for (const auto& e : candidates(*ctx.transformation, x, pos, ctx.transform)) {
      if (auto next = try_edit(x, e, goal, ctx)) options.push_back(std::move(*next));
    }
    if (options.empty()) return x;
    return options[rng() % options.size()];
  };

  for (std::size_t gen = 0; gen < generations; ++gen) {
    bool ignored = false;
    std::vector<GoalResult> fitness;
    for (const auto& s : scored) fitness.push_back(s.goal);
    const auto elite = pick(fitness, ignored);
    std::vector<AttackedText> next{scored[elite].text};
    while (next.size() < population) {
      const auto& p1 = tournament();
      const auto& p2 = tournament();
      AttackedText child = crossover(p1.text, p2.text);
      if (unit(rng) < mutation_rate) child = mutate(child);
      next.push_back(std::move(child));
    }
    if (auto done = evaluate(next, scored)) return *done;
  }

  bool ignored = false;
  std::vector<GoalResult> fitness;
  for (const auto& s : scored) fitness.push_back(s.goal);
  const auto top = pick(fitness, ignored);
  return make_result(AttackStatus::kFailedExhausted, goal, scored[top].text, scored[top].goal, budget);
}

AttackResult run_search(const SearchStrategy& strategy, const GoalState& goal, const SearchContext& ctx,
                        QueryBudget& budget, std::uint64_t rng_seed) {
  if (!ctx.transformation) throw PreconditionError("search context has no transformation");
  switch (strategy.kind) {
    case SearchKind::kGreedyWir: return greedy_wir_attack(goal, ctx, strategy.ranking, budget);
    case SearchKind::kBeam: return beam_attack(goal, ctx, strategy.width, budget);
    case SearchKind::kGenetic:
      return genetic_attack(goal, ctx, strategy.population, strategy.generations, strategy.mutation_rate, rng_seed,
                            budget);
  }
  throw PreconditionError("unknown search kind");
}

}  // namespace toxictrap
