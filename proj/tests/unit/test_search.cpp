#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "support.hpp"
#include "toxictrap/encoder.hpp"
#include "toxictrap/error.hpp"
#include "toxictrap/search.hpp"
#include "toxictrap/surrogate.hpp"

using namespace toxictrap;
namespace ts = testing_support;

namespace {

// A random word-weight victim plus a lexicon with up to three synonyms per
// word. Weights come from a coarse grid so ties are common.
struct Instance {
  std::string text;
  std::map<std::string, double> weights;
  double bias = 0;
  Resources res;
};

Instance random_instance(std::mt19937_64& rng, std::size_t max_words, std::size_t max_candidates) {
  Instance in;
  const double grid[] = {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5};
  const std::size_t n = 1 + rng() % max_words;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string w = "w" + std::string(1, char('a' + i)) + std::to_string(rng() % 3);
    if (!in.text.empty()) in.text += ' ';
    in.text += w;
    if (rng() % 4 == 0) in.text += "!";
    in.weights[w] = grid[rng() % 6];
    std::vector<std::string> syn;
    const std::size_t k = rng() % (max_candidates + 1);
    for (std::size_t j = 0; j < k; ++j) {
      const std::string s = w + "x" + std::to_string(j);
      in.weights[s] = grid[rng() % 6] - 1.0;
      syn.push_back(s);
    }
    in.res.synonyms.add(w, syn);
  }
  in.bias = 1.0;
  return in;
}

struct Harness {
  std::shared_ptr<ts::FnVictim> victim;
  VictimOracle oracle;
  Transformation transformation;
  std::vector<Constraint> constraints;
  MeanVectorEncoder encoder;
  SearchContext ctx;
  GoalState goal;

  Harness(std::shared_ptr<ts::FnVictim> v, const std::string& text, const Resources& res, Transformation t,
          std::vector<Constraint> cs = {}, bool caching = true)
      : victim(v), oracle(v, caching), transformation(std::move(t)), constraints(std::move(cs)), encoder(res.embeddings) {
    ctx.transformation = &transformation;
    ctx.constraints = constraints;
    ctx.transform = {&res, nullptr};
    ctx.constraint = {&res, &encoder};
    goal = init_goal(AttackedText(text), one_hot(1, 2), oracle);
  }

  QueryBudget budget(std::size_t limit) { return QueryBudget(oracle, limit, oracle.queries()); }
};

std::vector<std::size_t> attackable_positions(const AttackedText& t, const Resources& res) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.attackable(i) && !res.stopwords.contains(t.word(i))) out.push_back(i);
  }
  return out;
}

// Selection sort on (importance desc, position asc), scores straight from the weights.
std::vector<std::size_t> brute_force_unk_ranking(const Instance& in, const std::vector<std::size_t>& positions) {
  const AttackedText t(in.text);
  const double base = ts::word_weight_benign(in.weights, in.bias, in.text);
  std::vector<std::pair<double, std::size_t>> rest;
  for (auto p : positions) {
    rest.push_back({ts::word_weight_benign(in.weights, in.bias, t.text_with_replacement(p, "[UNK]")) - base, p});
  }
  std::vector<std::size_t> out;
  while (!rest.empty()) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < rest.size(); ++j) {
      if (rest[j].first > rest[best].first || (rest[j].first == rest[best].first && rest[j].second < rest[best].second)) {
        best = j;
      }
    }
    out.push_back(rest[best].second);
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return out;
}

// Steepest descent coded from scratch: evaluate every admissible single
// edit on an unmodified position, move to the best (first on ties) until
// success, the edit cap or no moves.
struct DescentOutcome {
  AttackStatus status;
  std::string final_text;
};

DescentOutcome steepest_descent(const Instance& in, const Transformation& t, std::size_t cap) {
  AttackedText cur(in.text);
  TransformContext tc{&in.res, nullptr};
  for (std::size_t depth = 0; depth < cap; ++depth) {
    std::vector<AttackedText> moves;
    std::set<std::string> seen;
    for (std::size_t p = 0; p < cur.size(); ++p) {
      if (cur.modified_indices().contains(p)) continue;
      for (const auto& e : candidates(t, cur, p, tc)) {
        auto next = cur.apply(e);
        if (seen.insert(next.text()).second) moves.push_back(next);
      }
    }
    if (moves.empty()) break;
    std::size_t best = 0, best_success = moves.size();
    for (std::size_t j = 0; j < moves.size(); ++j) {
      const double s = ts::word_weight_benign(in.weights, in.bias, moves[j].text());
      const double b = ts::word_weight_benign(in.weights, in.bias, moves[best].text());
      if (s > b) best = j;
      if (s >= 0.5) {
        if (best_success == moves.size() ||
            s > ts::word_weight_benign(in.weights, in.bias, moves[best_success].text())) {
          best_success = j;
        }
      }
    }
    if (best_success < moves.size()) return {AttackStatus::kSuccess, moves[best_success].text()};
    cur = moves[best];
  }
  return {AttackStatus::kFailedExhausted, ""};
}

}  // namespace

TEST(RankWords, SingleWord) {
  const auto res = ts::tiny_resources();
  Harness h(ts::never_flips(), "idiot", res, Transformation::lexicon());
  auto b = h.budget(100);
  EXPECT_EQ(*rank_words(Ranking::kUnk, h.goal.seed, std::vector<std::size_t>{0}, h.goal, b, h.ctx),
            (std::vector<std::size_t>{0}));
}

TEST(RankWords, EqualDeltasKeepPositionalOrder) {
  const auto res = ts::tiny_resources();
  Harness h(ts::never_flips(), "aa bb cc dd", res, Transformation::lexicon());
  auto b = h.budget(100);
  const std::vector<std::size_t> pos{0, 1, 2, 3};
  EXPECT_EQ(*rank_words(Ranking::kUnk, h.goal.seed, pos, h.goal, b, h.ctx), pos);
  EXPECT_EQ(*rank_words(Ranking::kDel, h.goal.seed, pos, h.goal, b, h.ctx), pos);
}

TEST(RankWords, FixtureSurrogateMatchesBruteForce) {
  const auto corpus = load_dataset(ts::data_file("corpus_multiclass.csv"), DatasetFormat::kCsv, TaskKind::kMulticlass,
                                   {{"benign", "offensive", "hate"}});
  auto model = std::make_shared<SurrogateModel>(train_surrogate(corpus, TrainConfig{}).model);
  const auto& res = ts::shipped_resources();
  const std::string text = "you are stupid and vile";
  const AttackedText t(text);
  VictimOracle oracle(model);
  const auto goal = init_goal(t, one_hot(1, 3), oracle);
  const MeanVectorEncoder enc(res.embeddings);
  const auto tr = Transformation::emb_knn(5);
  SearchContext ctx{&tr, {}, {&res, nullptr}, {&res, &enc}};
  QueryBudget b(oracle, 100, oracle.queries());
  const std::vector<std::size_t> all{0, 1, 2, 3, 4};
  const auto got = *rank_words(Ranking::kUnk, t, all, goal, b, ctx);

  const auto p_benign = [&](const std::string& s) { return model->predict(std::vector<std::string>{s}).probs[0][0]; };
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i : all) scored.push_back({-(p_benign(t.text_with_replacement(i, "[UNK]")) - p_benign(text)), i});
  std::sort(scored.begin(), scored.end());
  std::vector<std::size_t> expected;
  for (const auto& [s, i] : scored) expected.push_back(i);
  EXPECT_EQ(got, expected);
  EXPECT_EQ(got.front(), 2u);  // "stupid" carries the toxicity
}

TEST(RankWords, RandomInstancesMatchBruteForce) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_instance(rng, 4, 3);
    Harness h(ts::word_weight_victim(in.weights, in.bias), in.text, in.res, Transformation::lexicon());
    const auto pos = attackable_positions(h.goal.seed, in.res);
    auto b = h.budget(1000);
    ASSERT_EQ(*rank_words(Ranking::kUnk, h.goal.seed, pos, h.goal, b, h.ctx), brute_force_unk_ranking(in, pos))
        << in.text;
  }
}

TEST(RankWords, GreedyVisitsPositionsInRankedOrder) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_instance(rng, 4, 3);
    in.bias = 20;  // never succeeds, so greedy walks the whole ranking
    Harness h(ts::word_weight_victim(in.weights, in.bias), in.text, in.res, Transformation::lexicon());
    auto b = h.budget(1000);
    const auto r = greedy_wir_attack(h.goal, h.ctx, Ranking::kUnk, b);
    EXPECT_EQ(r.status, AttackStatus::kFailedExhausted);
    const auto pos = attackable_positions(h.goal.seed, in.res);
    std::vector<std::size_t> expected;
    for (auto p : brute_force_unk_ranking(in, pos)) {
      if (!in.res.synonyms.synonyms(h.goal.seed.word(p)).empty()) expected.push_back(p);
    }
    // Candidate texts carry synonyms "<word>x<k>"; a position shows up in
    // the log first when greedy evaluates its candidates.
    std::vector<std::size_t> visited;
    for (const auto& logged : h.victim->log()) {
      const AttackedText t(logged);
      for (std::size_t p = 0; p < t.size(); ++p) {
        const bool swapped = t.word(p).starts_with(h.goal.seed.word(p) + "x");
        if (swapped && std::find(visited.begin(), visited.end(), p) == visited.end()) visited.push_back(p);
      }
    }
    EXPECT_EQ(visited, expected) << in.text;
  }
}

TEST(RankWords, GradRequiresGradients) {
  const auto res = ts::tiny_resources();
  Harness h(ts::never_flips(), "stupid tree", res, Transformation::lexicon());
  auto b = h.budget(100);
  EXPECT_THROW(rank_words(Ranking::kGrad, h.goal.seed, std::vector<std::size_t>{0, 1}, h.goal, b, h.ctx),
               UnsupportedCapability);
}

TEST(RankWords, DeleteRankingUsesDeletion) {
  const auto res = ts::tiny_resources();
  auto v = ts::word_weight_victim({{"bad", 2.0}, {"meh", 0.5}}, 0.0);
  Harness h(v, "meh bad ok", res, Transformation::lexicon());
  auto b = h.budget(100);
  EXPECT_EQ(*rank_words(Ranking::kDel, h.goal.seed, std::vector<std::size_t>{0, 1, 2}, h.goal, b, h.ctx),
            (std::vector<std::size_t>{1, 0, 2}));
  const auto log = v->log();
  EXPECT_NE(std::find(log.begin(), log.end(), AttackedText("meh bad ok").text_without(1)), log.end());
  EXPECT_EQ(std::find(log.begin(), log.end(), "meh [UNK] ok"), log.end());
}

TEST(RankWords, WeightedSaliencyScalesByBestSwapGain) {
  auto res = ts::tiny_resources();
  res.synonyms.add("bad", {"good"});
  auto v = ts::word_weight_victim({{"bad", 2.0}, {"meh", 0.5}, {"good", -2.0}}, 0.0);
  Harness h(v, "meh bad", res, Transformation::lexicon());
  auto b = h.budget(100);
  const auto imp = *word_importance(Ranking::kWs, h.goal.seed, std::vector<std::size_t>{0, 1}, h.goal, b, h.ctx);
  EXPECT_EQ(imp[0], 0.0);  // no candidates: gain 0
  const double base = ts::word_weight_benign({{"bad", 2.0}, {"meh", 0.5}}, 0, "meh bad");
  const double d0 = ts::word_weight_benign({{"bad", 2.0}}, 0, "bad") - base;
  const double d1 = ts::word_weight_benign({{"meh", 0.5}}, 0, "meh") - base;
  const double soft1 = std::exp(d1) / (std::exp(d0) + std::exp(d1));
  const double gain = ts::word_weight_benign({{"meh", 0.5}, {"good", -2.0}}, 0, "meh good") - base;
  EXPECT_NEAR(imp[1], soft1 * gain, 1e-12);
}

TEST(RankWords, BudgetExhaustionMidRanking) {
  const auto res = ts::tiny_resources();
  Harness h(ts::never_flips(), "aa bb cc dd", res, Transformation::lexicon());
  auto b = h.budget(3);
  EXPECT_FALSE(rank_words(Ranking::kUnk, h.goal.seed, std::vector<std::size_t>{0, 1, 2, 3}, h.goal, b, h.ctx));
  EXPECT_TRUE(b.exhausted());
  EXPECT_LE(b.used(), 3u);
}

TEST(Greedy, FlipOnAnyEditSucceedsWithOneEdit) {
  const auto res = ts::tiny_resources();
  Harness h(ts::flip_on_edit("you stupid tree"), "you stupid tree", res, Transformation::emb_knn(2));
  auto b = h.budget(100);
  const auto r = greedy_wir_attack(h.goal, h.ctx, Ranking::kUnk, b);
  EXPECT_EQ(r.status, AttackStatus::kSuccess);
  EXPECT_EQ(r.edits.size(), 1u);
  EXPECT_EQ(r.edits[0].index, 1u);  // equal deltas: first position wins
  EXPECT_EQ(r.final_output, (ProbRow{0.9, 0.1}));
  EXPECT_EQ(r.queries, h.oracle.queries());
}

TEST(Greedy, NeverFlipsExhausts) {
  const auto res = ts::tiny_resources();
  Harness h(ts::never_flips(), "you stupid tree", res, Transformation::emb_knn(2));
  auto b = h.budget(100);
  const auto r = greedy_wir_attack(h.goal, h.ctx, Ranking::kUnk, b);
  EXPECT_EQ(r.status, AttackStatus::kFailedExhausted);
  EXPECT_TRUE(r.edits.empty());
  EXPECT_EQ(r.final.text(), "you stupid tree");
}

TEST(Greedy, RespectsEditCap) {
  const auto res = ts::tiny_resources();
  auto v = ts::word_weight_victim({{"stupid", 3.0}, {"tree", 3.0}, {"dumb", 2.0}, {"happy", 2.0}}, 1.0);
  Harness h(v, "stupid tree", res, Transformation::emb_knn(1), {Constraint::max_ratio(0.5)});
  auto b = h.budget(100);
  const auto r = greedy_wir_attack(h.goal, h.ctx, Ranking::kUnk, b);
  EXPECT_EQ(r.status, AttackStatus::kFailedExhausted);
  EXPECT_EQ(r.final.modified_indices().size(), 1u);
}

TEST(Greedy, BudgetStopsSearch) {
  const auto res = ts::tiny_resources();
  Harness h(ts::never_flips(), "stupid dumb idiotic happy tree", res, Transformation::emb_knn(4));
  auto b = h.budget(9);
  const auto r = greedy_wir_attack(h.goal, h.ctx, Ranking::kUnk, b);
  EXPECT_EQ(r.status, AttackStatus::kFailedBudget);
  EXPECT_EQ(r.queries, 9u);
}

TEST(Beam, WidthOneEqualsSteepestDescent) {
  std::mt19937_64 rng(5);
  int successes = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto in = random_instance(rng, 4, 3);
    in.bias = 1.0 + static_cast<double>(rng() % 4);
    const auto t = Transformation::lexicon();
    Harness h(ts::word_weight_victim(in.weights, in.bias), in.text, in.res, t);
    if (h.goal.status == GoalStatus::kSkipped) continue;
    auto b = h.budget(10000);
    const auto r = beam_attack(h.goal, h.ctx, 1, b);
    const auto expected = steepest_descent(in, t, h.goal.seed.size());
    ASSERT_EQ(r.status, expected.status) << in.text;
    if (r.status == AttackStatus::kSuccess) {
      ++successes;
      EXPECT_EQ(r.final.text(), expected.final_text) << in.text;
    }
  }
  EXPECT_GT(successes, 10);
}

TEST(Beam, FlipOnEditSucceedsAtDepthOne) {
  const auto res = ts::tiny_resources();
  Harness h(ts::flip_on_edit("stupid tree"), "stupid tree", res, Transformation::emb_knn(3));
  auto b = h.budget(100);
  const auto r = beam_attack(h.goal, h.ctx, 4, b);
  EXPECT_EQ(r.status, AttackStatus::kSuccess);
  EXPECT_EQ(r.edits.size(), 1u);
}

TEST(Beam, WideBeamQueriesEveryDepthOneEdit) {
  const auto res = ts::tiny_resources();
  Harness h(ts::never_flips(), "stupid tree", res, Transformation::emb_knn(2), {Constraint::max_ratio(0.5)});
  auto b = h.budget(100);
  const auto r = beam_attack(h.goal, h.ctx, 100, b);
  EXPECT_EQ(r.status, AttackStatus::kFailedExhausted);
  TransformContext tc{&res, nullptr};
  const auto all = all_position_candidates(Transformation::emb_knn(2), h.goal.seed, tc);
  std::size_t n = 0;
  for (const auto& [p, e] : all) n += e.size();
  EXPECT_EQ(h.oracle.queries(), 1 + n);
}

TEST(Genetic, DeterministicForSeed) {
  const auto& res = ts::shipped_resources();
  auto v = ts::word_weight_victim({{"stupid", 2.0}, {"idiot", 2.0}, {"moron", 1.0}}, 0.5);
  const std::string text = "you stupid idiot and moron";
  Harness h1(v, text, res, Transformation::emb_knn(5));
  Harness h2(v, text, res, Transformation::emb_knn(5));
  auto b1 = h1.budget(5000);
  auto b2 = h2.budget(5000);
  const auto r1 = genetic_attack(h1.goal, h1.ctx, 12, 5, 0.3, 99, b1);
  const auto r2 = genetic_attack(h2.goal, h2.ctx, 12, 5, 0.3, 99, b2);
  EXPECT_EQ(r1.status, r2.status);
  EXPECT_EQ(r1.final, r2.final);
  EXPECT_EQ(r1.queries, r2.queries);
  EXPECT_EQ(r1.final_output, r2.final_output);
}

TEST(Genetic, ZeroGenerationsReturnsBestInitialMember) {
  const auto res = ts::tiny_resources();
  auto v = ts::word_weight_victim({{"stupid", 5.0}, {"dumb", 4.0}, {"idiotic", 3.0}}, 0.0);
  Harness h(v, "stupid", res, Transformation::emb_knn(2));
  auto b = h.budget(100);
  const auto r = genetic_attack(h.goal, h.ctx, 6, 0, 0.5, 1, b);
  EXPECT_EQ(r.status, AttackStatus::kFailedExhausted);
  // The log holds the seed and the distinct initial members.
  const auto log = v->log();
  ASSERT_GE(log.size(), 2u);
  const std::string best = std::find(log.begin(), log.end(), "idiotic") != log.end() ? "idiotic" : "dumb";
  EXPECT_EQ(r.final.text(), best);
}

TEST(Genetic, FlipOnEditSucceedsImmediately) {
  const auto res = ts::tiny_resources();
  Harness h(ts::flip_on_edit("stupid tree"), "stupid tree", res, Transformation::emb_knn(2));
  auto b = h.budget(100);
  const auto r = genetic_attack(h.goal, h.ctx, 4, 3, 0.2, 3, b);
  EXPECT_EQ(r.status, AttackStatus::kSuccess);
  EXPECT_LE(h.oracle.queries(), 1u + 4u);
}

TEST(Genetic, ChildrenStayAdmissible) {
  const auto& res = ts::shipped_resources();
  auto v = ts::word_weight_victim({{"stupid", 3.0}, {"idiot", 3.0}, {"moron", 3.0}}, 2.0);
  const std::string text = "stupid idiot moron clown fool loser dumb jerk creep nitwit";
  const std::vector<Constraint> cs{Constraint::max_ratio(0.2)};
  Harness h(v, text, res, Transformation::emb_knn(4), cs);
  auto b = h.budget(20000);
  genetic_attack(h.goal, h.ctx, 20, 6, 0.5, 4, b);
  for (const auto& t : v->log()) {
    const AttackedText a(t);
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff += a.word(i) != h.goal.seed.word(i);
    EXPECT_LE(diff, 2u) << t;
  }
}

TEST(Search, QueriesEqualDistinctTextsSent) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const auto in = random_instance(rng, 4, 3);
    for (auto kind : {SearchKind::kGreedyWir, SearchKind::kBeam, SearchKind::kGenetic}) {
      auto v = ts::word_weight_victim(in.weights, in.bias);
      Harness h(v, in.text, in.res, Transformation::lexicon());
      auto b = h.budget(50);
      SearchStrategy s = kind == SearchKind::kGreedyWir ? SearchStrategy::greedy(Ranking::kDel)
                         : kind == SearchKind::kBeam     ? SearchStrategy::beam(2)
                                                         : SearchStrategy::genetic(6, 3, 0.3);
      const auto r = run_search(s, h.goal, h.ctx, b, 17);
      const auto log = v->log();
      EXPECT_EQ(h.oracle.queries(), std::set<std::string>(log.begin(), log.end()).size());
      EXPECT_EQ(h.oracle.queries(), log.size());
      EXPECT_EQ(r.queries, h.oracle.queries());
      EXPECT_LE(r.queries, 50u);
    }
  }
}

TEST(Search, CachingDoesNotChangeOutcomes) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 60; ++trial) {
    const auto in = random_instance(rng, 4, 3);
    for (auto s : {SearchStrategy::greedy(Ranking::kUnk), SearchStrategy::beam(3), SearchStrategy::genetic(6, 3, 0.3)}) {
      Harness a(ts::word_weight_victim(in.weights, in.bias), in.text, in.res, Transformation::lexicon(), {}, true);
      Harness c(ts::word_weight_victim(in.weights, in.bias), in.text, in.res, Transformation::lexicon(), {}, false);
      auto ba = a.budget(100000);
      auto bc = c.budget(100000);
      const auto ra = run_search(s, a.goal, a.ctx, ba, 3);
      const auto rc = run_search(s, c.goal, c.ctx, bc, 3);
      EXPECT_EQ(ra.status, rc.status);
      EXPECT_EQ(ra.final, rc.final);
      EXPECT_EQ(ra.final_output, rc.final_output);
      EXPECT_GE(rc.queries, ra.queries);
    }
  }
}

TEST(SearchStrategy, NamesAndValidation) {
  EXPECT_EQ(parse_ranking("ws"), Ranking::kWs);
  EXPECT_THROW(parse_ranking("random"), ConfigError);
  EXPECT_EQ(parse_search_kind("beam"), SearchKind::kBeam);
  EXPECT_THROW(SearchStrategy::beam(0).validate(), ConfigError);
  EXPECT_THROW(SearchStrategy::genetic(1, 2, 0.1).validate(), ConfigError);
  EXPECT_THROW(SearchStrategy::genetic(4, 2, 1.0).validate(), ConfigError);
  EXPECT_EQ(SearchStrategy::greedy(Ranking::kUnk).default_budget(), kGreedyBudget);
  EXPECT_EQ(SearchStrategy::beam(4).default_budget(), kPopulationBudget);
  EXPECT_EQ(parse_attack_status("failed_budget"), AttackStatus::kFailedBudget);
  EXPECT_THROW(parse_attack_status("won"), DataError);
}
