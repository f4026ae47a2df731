#include <gtest/gtest.h>

#include "support.hpp"
#include "toxictrap/advtrain.hpp"
#include "toxictrap/error.hpp"

using namespace toxictrap;
namespace ts = testing_support;

namespace {

// Multiclass victim predicting each record's own label until edited, then benign.
std::shared_ptr<ts::FnVictim> echo_until_edited(const Dataset& d) {
  std::map<std::string, ProbRow> seeds;
  for (const auto& r : d.records) {
    ProbRow p(3, 0.05);
    for (std::size_t k = 0; k < 3; ++k) {
      if (r.labels[k]) p[k] = 0.9;
    }
    seeds[r.text] = p;
  }
  return std::make_shared<ts::FnVictim>(ts::multiclass3(), [seeds](const std::string& t) {
    const auto it = seeds.find(t);
    return it != seeds.end() ? it->second : ProbRow{0.9, 0.05, 0.05};
  });
}

Dataset small_multiclass(std::size_t n) {
  Dataset d;
  d.task = ts::multiclass3();
  for (std::size_t i = 0; i < n; ++i) {
    d.records.push_back({"you stupid tree " + std::to_string(i), one_hot(i % 3, 3), {}, std::nullopt});
  }
  return d;
}

AttackRecipe knn_recipe(const std::string& name) {
  auto r = builtin_recipe("pwws-toxic", TaskKind::kMulticlass);
  r.name = name;
  r.transformation = Transformation::emb_knn(2);
  return r;
}

struct Fixture {
  Dataset corpus = load_dataset(ts::data_file("corpus_multiclass.csv"), DatasetFormat::kCsv, TaskKind::kMulticlass,
                                {{"benign", "offensive", "hate"}});
  Dataset seeds = load_dataset(ts::data_file("seeds_multiclass.csv"), DatasetFormat::kCsv, TaskKind::kMulticlass,
                               {{"benign", "offensive", "hate"}});
  EngineContext ctx{&ts::shipped_resources(), nullptr, nullptr};
};

}  // namespace

TEST(Augment, NoSuccessesLeaveDataUnchanged) {
  const auto d = small_multiclass(9);
  const auto res = ts::tiny_resources();
  auto never = std::make_shared<ts::FnVictim>(ts::multiclass3(), [](const std::string&) {
    return ProbRow{0.1, 0.1, 0.8};
  });
  std::vector<AugmentStats> stats;
  const std::vector<AttackRecipe> attacks{knn_recipe("a")};
  const auto out = augment(d, attacks, never, {&res, nullptr, nullptr}, 100, 3, 1, &stats);
  ASSERT_EQ(out.records.size(), d.records.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    EXPECT_EQ(out.records[i].text, d.records[i].text);
    EXPECT_EQ(out.records[i].labels, d.records[i].labels);
  }
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_EQ(stats[0].added, 0u);
}

TEST(Augment, KeepsSeedLabelsAndProvenance) {
  const auto d = small_multiclass(9);
  const auto res = ts::tiny_resources();
  const std::vector<AttackRecipe> attacks{knn_recipe("a")};
  const auto out = augment(d, attacks, echo_until_edited(d), {&res, nullptr, nullptr}, 100, 3, 1);
  ASSERT_EQ(out.records.size(), 9u + 6u);  // six toxic records, each flips
  for (std::size_t i = 0; i < 9; ++i) EXPECT_FALSE(out.records[i].provenance);
  for (std::size_t i = 9; i < out.records.size(); ++i) {
    const auto& r = out.records[i];
    ASSERT_TRUE(r.provenance);
    ASSERT_TRUE(r.provenance->starts_with("a#"));
    const auto src = std::stoul(r.provenance->substr(2));
    EXPECT_EQ(r.labels, d.records[src].labels);
    EXPECT_FALSE(is_benign(r.labels));
    EXPECT_NE(r.text, d.records[src].text);
  }
}

TEST(Augment, PerAttackBudgetCapsAdditions) {
  const auto d = small_multiclass(30);
  const auto res = ts::tiny_resources();
  const std::vector<AttackRecipe> attacks{knn_recipe("a"), knn_recipe("b")};
  std::vector<AugmentStats> stats;
  const auto out = augment(d, attacks, echo_until_edited(d), {&res, nullptr, nullptr}, 5, 3, 1, &stats);
  EXPECT_EQ(out.records.size(), 30u + 10u);
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_EQ(stats[0].added, 5u);
  EXPECT_EQ(stats[1].added, 5u);
  EXPECT_EQ(stats[0].successes, 20u);
  std::size_t from_b = 0;
  for (std::size_t i = 30; i < out.records.size(); ++i) from_b += out.records[i].provenance->starts_with("b#");
  EXPECT_EQ(from_b, 5u);
}

TEST(AdvTrain, ConfigValidation) {
  AdvTrainConfig c;
  EXPECT_THROW(c.validate(), ConfigError);
  c.attacks = {builtin_recipe("pwws-toxic", TaskKind::kMulticlass)};
  c.mix_weight = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c.mix_weight = 1;
  c.rounds = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(AdvTrain, ZeroMixWeightEqualsPlainTraining) {
  const Fixture f;
  AdvTrainConfig c;
  c.attacks = {builtin_recipe("pwws-toxic", TaskKind::kMulticlass)};
  c.mix_weight = 0;
  c.per_attack_budget = 20;
  const auto r = adversarial_train(f.corpus, c, f.ctx);
  EXPECT_EQ(r.robust, r.base);
  EXPECT_GT(r.report.rounds[0].adversarial_records, 0u);
}

TEST(AdvTrain, SatReportAndDeterminism) {
  const Fixture f;
  AdvTrainConfig c;
  c.attacks = {builtin_recipe("pwws-toxic", TaskKind::kMulticlass)};
  const auto a = adversarial_train(f.corpus, c, f.ctx);
  const auto b = adversarial_train(f.corpus, c, f.ctx);
  EXPECT_EQ(a.robust, b.robust);
  EXPECT_EQ(report_to_json(a.report), report_to_json(b.report));
  ASSERT_EQ(a.report.rounds.size(), 1u);
  EXPECT_EQ(a.report.train_size + a.report.holdout_size, f.corpus.size());
  EXPECT_EQ(a.report.attacks, (std::vector<std::string>{"pwws-toxic"}));
  const auto meta = nlohmann::json::parse(a.robust.metadata());
  EXPECT_EQ(meta["kind"], "sat");

  // The robust model resists the attack it was trained on.
  const auto recipes = c.attacks;
  RunOptions o;
  const auto base = evaluate_robustness(std::make_shared<SurrogateModel>(a.base), recipes, f.seeds, f.ctx, o);
  const auto robust = evaluate_robustness(std::make_shared<SurrogateModel>(a.robust), recipes, f.seeds, f.ctx, o);
  ASSERT_TRUE(base[0].metrics.asr && robust[0].metrics.asr);
  EXPECT_LE(*robust[0].metrics.asr, *base[0].metrics.asr);
}

TEST(AdvTrain, RoundsAccumulateAdversarialRecords) {
  const Fixture f;
  AdvTrainConfig c;
  c.attacks = {builtin_recipe("pwws-toxic", TaskKind::kMulticlass), builtin_recipe("deepwordbug-toxic", TaskKind::kMulticlass)};
  c.rounds = 2;
  c.per_attack_budget = 15;
  c.train.iterations = 80;
  const auto r = adversarial_train(f.corpus, c, f.ctx);
  ASSERT_EQ(r.report.rounds.size(), 2u);
  EXPECT_EQ(nlohmann::json::parse(r.robust.metadata())["kind"], "eat");
  const auto& r1 = r.report.rounds[0];
  const auto& r2 = r.report.rounds[1];
  std::size_t added1 = 0, added2 = 0;
  for (const auto& s : r1.attacks) added1 += s.added;
  for (const auto& s : r2.attacks) added2 += s.added;
  EXPECT_LE(added1, 30u);
  EXPECT_EQ(r1.adversarial_records, added1);
  EXPECT_EQ(r2.adversarial_records, added1 + added2);
}

TEST(AdvTrain, TaskMismatchIsRejected) {
  const Fixture f;
  AdvTrainConfig c;
  c.attacks = {builtin_recipe("pwws-toxic", TaskKind::kBinary)};
  EXPECT_THROW(adversarial_train(f.corpus, c, f.ctx), ConfigError);
}

TEST(Robustness, EmptyRecipeListAndUnseenFlag) {
  const auto d = small_multiclass(6);
  const auto res = ts::tiny_resources();
  const EngineContext ctx{&res, nullptr, nullptr};
  EXPECT_TRUE(evaluate_robustness(echo_until_edited(d), {}, d, ctx, {}).empty());
  const std::vector<AttackRecipe> recipes{knn_recipe("a"), knn_recipe("b")};
  const auto rows = evaluate_robustness(echo_until_edited(d), recipes, d, ctx, {}, "b");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].recipe, "a");
  EXPECT_FALSE(rows[0].unseen);
  EXPECT_TRUE(rows[1].unseen);
  EXPECT_EQ(rows[1].metrics.asr, 1.0);
  const auto j = robustness_to_json(rows);
  EXPECT_EQ(j.size(), 2u);
}
