#include <gtest/gtest.h>

#include <cstdio>
#include <sys/wait.h>

#include <json.hpp>

#include "support.hpp"

namespace ts = testing_support;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string output;  // stdout and stderr
};

CliRun cli(const std::string& args) {
  const std::string cmd = std::string("\"") + TOXICTRAP_CLI + "\" " + args + " 2>&1";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

const std::string kLabels = "--labels benign,offensive,hate";

std::string data(const std::string& name) { return "\"" + ts::data_file(name).string() + "\""; }

}  // namespace

TEST(Cli, UnknownRecipeListsNames) {
  ts::TempDir dir;
  const auto train = cli("train --dataset " + data("corpus_multiclass.csv") + " " + kLabels + " --iterations 20 --out \"" +
                         dir.path().string() + "\"");
  ASSERT_EQ(train.code, 0) << train.output;
  const auto r = cli("attack --model \"" + (dir / "model.bin").string() + "\" --dataset " + data("seeds_multiclass.csv") +
                     " " + kLabels + " --recipe nope --out \"" + (dir / "a").string() + "\"");
  EXPECT_EQ(r.code, 1) << r.output;
  EXPECT_NE(r.output.find("toxictrap-default"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("textbugger-toxic"), std::string::npos) << r.output;
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("attack --dataset /nonexistent.csv").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
}

TEST(Cli, BiasWithoutIdentityColumnsIsDataError) {
  ts::TempDir dir;
  ASSERT_EQ(cli("train --dataset " + data("corpus_multiclass.csv") + " " + kLabels + " --iterations 20 --out \"" +
                dir.path().string() + "\"")
                .code,
            0);
  const auto r = cli("bias --model \"" + (dir / "model.bin").string() + "\" --dataset \"" +
                     ts::fixture("three_rows.csv").string() + "\" " + kLabels + " --out \"" + (dir / "b").string() + "\"");
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("identity"), std::string::npos) << r.output;
}

TEST(Cli, RemoteVictimUnreachableIsTransportError) {
  ts::TempDir dir;
  const auto r = cli("attack --remote http://127.0.0.1:9 --dataset " + data("seeds_multiclass.csv") + " " + kLabels +
                     " --recipe pwws-toxic --out \"" + (dir / "a").string() + "\"");
  EXPECT_EQ(r.code, 3) << r.output;
}

TEST(Cli, FullPipeline) {
  ts::TempDir dir;
  const auto d = dir.path().string();
  auto ok = [](const CliRun& r) { return r.code == 0; };

  const auto train = cli("train --dataset " + data("corpus_multiclass.csv") + " " + kLabels + " --out \"" + d + "/train\"");
  ASSERT_TRUE(ok(train)) << train.output;
  const auto tm = json::parse(ts::read_file(dir / "train/train_metrics.json"));
  EXPECT_EQ(tm["command"], "train");
  EXPECT_GT(tm["holdout"]["accuracy"].get<double>(), 0.8);

  const auto attack = cli("attack --model \"" + d + "/train/model.bin\" --dataset " + data("seeds_multiclass.csv") + " " +
                          kLabels + " --recipe toxictrap-default --out \"" + d + "/attack\"");
  ASSERT_TRUE(ok(attack)) << attack.output;
  const auto am = json::parse(ts::read_file(dir / "attack/metrics.json"));
  EXPECT_EQ(am["command"], "attack");
  EXPECT_EQ(am["metrics"]["total_seeds"], 50);
  const auto lines = ts::read_file(dir / "attack/results.jsonl");
  EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 51);

  const auto adv = cli("advtrain --dataset " + data("corpus_multiclass.csv") + " " + kLabels +
                       " --recipe toxictrap-default --out \"" + d + "/adv\"");
  ASSERT_TRUE(ok(adv)) << adv.output;
  const auto report = json::parse(ts::read_file(dir / "adv/advtrain_report.json"));
  EXPECT_EQ(report["report"]["rounds"].size(), 1u);

  const auto eval = cli("eval --model \"" + d + "/adv/robust_model.bin\" --base-model \"" + d +
                        "/adv/base_model.bin\" --dataset " + data("seeds_multiclass.csv") + " " + kLabels +
                        " --recipe toxictrap-default --out \"" + d + "/eval\"");
  ASSERT_TRUE(ok(eval)) << eval.output;
  const auto ej = json::parse(ts::read_file(dir / "eval/eval.json"));
  EXPECT_EQ(ej["command"], "eval");
  ASSERT_EQ(ej["model"].size(), 1u);
  const double delta = ej["asr_delta"]["toxictrap-default"].get<double>();
  EXPECT_LT(delta, 0.0) << ej.dump(2);

  const auto unseen = cli("eval --model \"" + d + "/adv/robust_model.bin\" --dataset " + data("seeds_multiclass.csv") +
                          " " + kLabels + " --recipe pwws-toxic --unseen toxictrap-default --out \"" + d + "/e2\"");
  EXPECT_EQ(unseen.code, 1) << unseen.output;
}

TEST(Cli, RecipeFileAndTaskMismatch) {
  ts::TempDir dir;
  const auto d = dir.path().string();
  ASSERT_EQ(cli("train --dataset " + data("corpus_multiclass.csv") + " " + kLabels + " --iterations 20 --out \"" + d +
                "/t\"")
                .code,
            0);
  const std::string recipe = std::string(TOXICTRAP_RECIPE_DIR) + "/pwws-toxic.toml";
  const auto r = cli("attack --model \"" + d + "/t/model.bin\" --dataset " + data("seeds_multiclass.csv") + " " + kLabels +
                     " --recipe-file \"" + recipe + "\" --budget 50 --out \"" + d + "/a\"");
  EXPECT_EQ(r.code, 0) << r.output;
  ts::write_file(dir / "binary.toml", ts::read_file(recipe) + "\n[goal]\ntask = \"binary\"\n");
  const auto mismatch = cli("attack --model \"" + d + "/t/model.bin\" --dataset " + data("seeds_multiclass.csv") + " " +
                            kLabels + " --recipe-file \"" + (dir / "binary.toml").string() + "\" --out \"" + d + "/b\"");
  EXPECT_EQ(mismatch.code, 1) << mismatch.output;
}
