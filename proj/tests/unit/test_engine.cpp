#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "toxictrap/engine.hpp"
#include "toxictrap/error.hpp"
#include "toxictrap/surrogate.hpp"

using namespace toxictrap;
namespace ts = testing_support;
using nlohmann::json;

namespace {

Dataset binary_seeds(std::size_t n, std::size_t mispredicted = 0) {
  Dataset d;
  d.task = TaskSpec::binary();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string text = "you stupid tree number" + std::to_string(i);
    d.records.push_back({i < mispredicted ? "benign " + text : text, one_hot(1, 2), {}, std::nullopt});
  }
  return d;
}

// Toxic until edited; texts starting with "benign" are predicted benign so
// their toxic truth makes them mispredicted seeds.
std::shared_ptr<ts::FnVictim> flip_victim(const Dataset& d) {
  std::set<std::string> seeds;
  for (const auto& r : d.records) seeds.insert(r.text);
  return std::make_shared<ts::FnVictim>(TaskSpec::binary(), [seeds](const std::string& t) {
    if (t.starts_with("benign")) return ProbRow{0.9, 0.1};
    return seeds.contains(t) ? ProbRow{0.1, 0.9} : ProbRow{0.9, 0.1};
  });
}

class FailingVictim final : public VictimModel {
 public:
  const TaskSpec& task() const override { return task_; }
  VictimOutput predict(std::span<const std::string> texts) const override {
    for (const auto& t : texts) {
      if (t.find("broken") != std::string::npos) throw TransportError("server down", "{\"error\":\"down\"}");
    }
    VictimOutput out;
    for (std::size_t i = 0; i < texts.size(); ++i) out.probs.push_back({0.2, 0.8});
    return out;
  }

 private:
  TaskSpec task_ = TaskSpec::binary();
};

struct Fixture {
  Dataset corpus = load_dataset(ts::data_file("corpus_multiclass.csv"), DatasetFormat::kCsv, TaskKind::kMulticlass,
                                {{"benign", "offensive", "hate"}});
  Dataset seeds = load_dataset(ts::data_file("seeds_multiclass.csv"), DatasetFormat::kCsv, TaskKind::kMulticlass,
                               {{"benign", "offensive", "hate"}});
  std::shared_ptr<SurrogateModel> model =
      std::make_shared<SurrogateModel>(train_surrogate(corpus, TrainConfig{}).model);
  EngineContext ctx{&ts::shipped_resources(), nullptr, nullptr};
};

std::string outcome_lines(const RunOutput& out) {
  std::ostringstream os;
  for (std::size_t i = 0; i < out.results.size(); ++i) {
    const auto& r = out.results[i];
    json j;
    j["index"] = i;
    j["status"] = to_string(r.status);
    j["final_text"] = r.final.text();
    j["queries"] = r.queries;
    os << j.dump() << '\n';
  }
  return os.str();
}

}  // namespace

TEST(Engine, FlipMockSucceedsEverywhere) {
  const auto d = binary_seeds(10);
  const auto res = ts::tiny_resources();
  const auto recipe = builtin_recipe("pwws-toxic", TaskKind::kBinary);
  auto recipe_knn = recipe;
  recipe_knn.transformation = Transformation::emb_knn(2);
  const auto out = run_attacks(d, recipe_knn, flip_victim(d), {&res, nullptr, nullptr}, {});
  EXPECT_EQ(out.metrics.asr, 1.0);
  EXPECT_EQ(out.metrics.attempted, 10u);
  for (const auto& r : out.results) EXPECT_EQ(r.status, AttackStatus::kSuccess);
}

TEST(Engine, MispredictedSeedsAreSkipped) {
  const auto d = binary_seeds(10, 3);
  const auto res = ts::tiny_resources();
  auto recipe = builtin_recipe("pwws-toxic", TaskKind::kBinary);
  recipe.transformation = Transformation::emb_knn(2);
  const auto out = run_attacks(d, recipe, flip_victim(d), {&res, nullptr, nullptr}, {});
  EXPECT_EQ(out.metrics.skipped, 3u);
  EXPECT_EQ(out.metrics.attempted, 7u);
  EXPECT_EQ(out.metrics.asr, 1.0);
  EXPECT_EQ(out.results[0].status, AttackStatus::kSkipped);
  EXPECT_EQ(out.results[0].queries, 1u);
  EXPECT_FALSE(out.results[0].message.empty());
}

TEST(Engine, TransportFailuresAreRecordedNotThrown) {
  Dataset d = binary_seeds(4);
  d.records[2].text = "broken stupid thing";
  const auto res = ts::tiny_resources();
  auto recipe = builtin_recipe("pwws-toxic", TaskKind::kBinary);
  recipe.transformation = Transformation::emb_knn(2);
  const auto out = run_attacks(d, recipe, std::make_shared<FailingVictim>(), {&res, nullptr, nullptr}, {});
  EXPECT_EQ(out.results[2].status, AttackStatus::kFailedTransport);
  EXPECT_NE(out.results[2].message.find("server down"), std::string::npos);
  EXPECT_EQ(out.metrics.transport_failures, 1u);
  EXPECT_EQ(out.metrics.attempted, 3u);
  EXPECT_EQ(out.metrics.asr, 0.0);
}

TEST(Engine, Validation) {
  const auto d = binary_seeds(2);
  const auto res = ts::tiny_resources();
  const auto recipe = builtin_recipe("pwws-toxic", TaskKind::kMulticlass);
  EXPECT_THROW(run_attacks(d, recipe, flip_victim(d), {&res, nullptr, nullptr}, {}), ConfigError);
  const auto ok = builtin_recipe("pwws-toxic", TaskKind::kBinary);
  RunOptions zero;
  zero.parallelism = 0;
  EXPECT_THROW(run_attacks(d, ok, flip_victim(d), {&res, nullptr, nullptr}, zero), ConfigError);
  EXPECT_THROW(run_attacks(d, ok, flip_victim(d), {nullptr, nullptr, nullptr}, {}), PreconditionError);
}

TEST(Engine, SeedRngIsPerIndex) {
  EXPECT_EQ(seed_rng(1, 5), seed_rng(1, 5));
  EXPECT_NE(seed_rng(1, 5), seed_rng(1, 6));
  EXPECT_NE(seed_rng(1, 5), seed_rng(2, 5));
}

TEST(Engine, ResultsIndependentOfParallelism) {
  const Fixture f;
  auto recipe = builtin_recipe("textbugger-toxic", TaskKind::kMulticlass);
  recipe.budget = 300;
  RunOptions one;
  one.seed = 11;
  RunOptions four = one;
  four.parallelism = 4;
  const auto a = run_attacks(f.seeds, recipe, f.model, f.ctx, one);
  const auto b = run_attacks(f.seeds, recipe, f.model, f.ctx, four);
  EXPECT_EQ(outcome_lines(a), outcome_lines(b));
  EXPECT_EQ(a.metrics, b.metrics);
}

TEST(Engine, GeneticRunsAreSeeded) {
  const Fixture f;
  auto recipe = builtin_recipe("toxictrap-default", TaskKind::kMulticlass);
  recipe.search = SearchStrategy::genetic(8, 3, 0.3);
  recipe.budget = 200;
  Dataset few = f.seeds;
  few.records.resize(8);
  RunOptions o;
  o.seed = 5;
  EXPECT_EQ(outcome_lines(run_attacks(few, recipe, f.model, f.ctx, o)),
            outcome_lines(run_attacks(few, recipe, f.model, f.ctx, o)));
}

TEST(Engine, GoldenRunOnFixtureSeeds) {
  const Fixture f;
  const auto recipe = builtin_recipe("toxictrap-default", TaskKind::kMulticlass);
  const auto out = run_attacks(f.seeds, recipe, f.model, f.ctx, RunOptions{});
  ASSERT_EQ(out.results.size(), 50u);
  const auto lines = outcome_lines(out);
  const auto metrics = metrics_to_json(out.metrics).dump(2) + "\n";
  if (ts::update_golden()) {
    ts::write_file(ts::golden_file("default_run_outcomes.jsonl"), lines);
    ts::write_file(ts::golden_file("default_run_metrics.json"), metrics);
  }
  EXPECT_EQ(lines, ts::read_file(ts::golden_file("default_run_outcomes.jsonl")));
  EXPECT_EQ(metrics, ts::read_file(ts::golden_file("default_run_metrics.json")));
  EXPECT_GT(out.metrics.successes, 0u);
}

TEST(Engine, SaveResultsFormat) {
  const auto d = binary_seeds(3, 1);
  const auto res = ts::tiny_resources();
  auto recipe = builtin_recipe("pwws-toxic", TaskKind::kBinary);
  recipe.transformation = Transformation::emb_knn(2);
  const auto out = run_attacks(d, recipe, flip_victim(d), {&res, nullptr, nullptr}, {});
  ts::TempDir dir;
  json config{{"recipe", "pwws-toxic"}};
  save_results(dir / "results.jsonl", out.results, config);
  std::istringstream in(ts::read_file(dir / "results.jsonl"));
  std::string line;
  std::vector<json> rows;
  while (std::getline(in, line)) rows.push_back(json::parse(line));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0]["schema_version"], kResultsSchemaVersion);
  EXPECT_EQ(rows[0]["config"], config);
  EXPECT_EQ(rows[1]["status"], "skipped");
  EXPECT_EQ(rows[2]["status"], "success");
  EXPECT_EQ(rows[2]["index"], 1);
  EXPECT_EQ(rows[2]["seed_text"], d.records[1].text);
  EXPECT_NE(rows[2]["final_text"], d.records[1].text);
  ASSERT_EQ(rows[2]["edits"].size(), 1u);
  EXPECT_EQ(rows[2]["edits"][0]["origin"], "word");
  EXPECT_EQ(rows[2]["queries"], out.results[1].queries);
  EXPECT_DOUBLE_EQ(rows[2]["perturbed_ratio"].get<double>(), perturbed_ratio(out.results[1].final));

  write_json(dir / "m.json", metrics_to_json(out.metrics));
  const auto text = ts::read_file(dir / "m.json");
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(json::parse(text)["successes"], 2);
}
