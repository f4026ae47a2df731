// toxictrap: train / attack / advtrain / eval / bias front end.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "toxictrap/advtrain.hpp"
#include "toxictrap/engine.hpp"
#include "toxictrap/error.hpp"
#include "toxictrap/metrics.hpp"
#include "toxictrap/recipe.hpp"
#include "toxictrap/remote.hpp"
#include "toxictrap/surrogate.hpp"

#ifndef TOXICTRAP_DATA_DIR
#define TOXICTRAP_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace toxictrap;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kTransport = 3 };

struct Common {
  std::string task = "multiclass";
  std::string dataset;
  std::string format;
  std::string labels;
  std::string out = ".";
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  std::string resources = TOXICTRAP_DATA_DIR;
};

struct TrainOpts {
  std::size_t iterations = TrainConfig{}.iterations;
  double learning_rate = TrainConfig{}.learning_rate;
  double l2 = TrainConfig{}.l2;
  double holdout = TrainConfig{}.holdout_fraction;
};

struct VictimOpts {
  std::string model;
  std::string remote;
  std::string base_model;
  std::string encoder = "mean";
  bool mlm = false;
};

struct RecipeOpts {
  std::vector<std::string> names;
  std::vector<std::string> files;
  std::optional<std::size_t> budget;
};

void add_common(CLI::App* app, Common& c, bool needs_dataset = true) {
  app->add_option("--task", c.task, "binary, multiclass or multilabel")
      ->check(CLI::IsMember({"binary", "multiclass", "multilabel"}));
  auto* ds = app->add_option("--dataset", c.dataset, "CSV or JSONL dataset")->check(CLI::ExistingFile);
  if (needs_dataset) ds->required();
  app->add_option("--format", c.format, "csv or jsonl (default: from the file extension)")
      ->check(CLI::IsMember({"csv", "jsonl"}));
  app->add_option("--labels", c.labels, "comma-separated single-label class names, benign first");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--seed", c.seed, "run seed");
}

void add_run(CLI::App* app, Common& c) {
  app->add_option("--parallelism", c.parallelism, "attack worker threads")->check(CLI::PositiveNumber);
  app->add_option("--resources", c.resources, "directory with embeddings.txt, synonyms.tsv, ...")
      ->check(CLI::ExistingDirectory);
}

void add_train(CLI::App* app, TrainOpts& t) {
  app->add_option("--iterations", t.iterations, "optimizer iterations");
  app->add_option("--learning-rate", t.learning_rate, "Adam step size");
  app->add_option("--l2", t.l2, "L2 penalty");
  app->add_option("--holdout", t.holdout, "held-out fraction")->check(CLI::Range(0.0, 0.99));
}

std::vector<std::string> split_labels(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

TaskKind task_of(const Common& c) { return parse_task_kind(c.task); }

Dataset load(const Common& c) {
  const auto fmt = c.format.empty() ? (fs::path(c.dataset).extension() == ".jsonl" ? DatasetFormat::kJsonl
                                                                                    : DatasetFormat::kCsv)
                                    : parse_dataset_format(c.format);
  DatasetOptions opts;
  opts.label_names = split_labels(c.labels);
  try {
    return load_dataset(c.dataset, fmt, task_of(c), opts);
  } catch (const PreconditionError& e) {
    throw DataError(c.dataset + ": " + e.what());
  }
}

TrainConfig train_config(const Common& c, const TrainOpts& t) {
  TrainConfig tc;
  tc.iterations = t.iterations;
  tc.learning_rate = t.learning_rate;
  tc.l2 = t.l2;
  tc.holdout_fraction = t.holdout;
  tc.seed = c.seed;
  return tc;
}

json common_json(const Common& c) {
  json j;
  j["task"] = c.task;
  j["dataset"] = c.dataset;
  j["seed"] = c.seed;
  if (!c.labels.empty()) j["labels"] = c.labels;
  return j;
}

json train_json(const TrainOpts& t) {
  json j;
  j["iterations"] = t.iterations;
  j["learning_rate"] = t.learning_rate;
  j["l2"] = t.l2;
  j["holdout_fraction"] = t.holdout;
  return j;
}

fs::path prepare_out(const std::string& dir) {
  fs::create_directories(dir);
  return fs::path(dir);
}

std::string fmt_opt(const std::optional<double>& v, const char* spec) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, *v);
  return buf;
}

void print_metrics_header() {
  std::printf("%-20s %6s %6s %8s %7s %10s %9s\n", "recipe", "seeds", "skip", "attempt", "asr%", "avg_query", "avg_pert%");
}

void print_metrics_row(const std::string& name, const RunMetrics& m) {
  const auto asr = m.asr ? std::optional<double>(*m.asr * 100.0) : std::nullopt;
  std::printf("%-20s %6zu %6zu %8zu %7s %10s %9s\n", name.c_str(), m.total_seeds, m.skipped, m.attempted,
              fmt_opt(asr, "%.1f").c_str(), fmt_opt(m.avg_queries, "%.1f").c_str(),
              fmt_opt(m.avg_perturb_pct, "%.2f").c_str());
}

struct Assets {
  Resources resources;
  std::unique_ptr<RemoteSentenceEncoder> remote_encoder;
  std::unique_ptr<RemoteMaskedLm> remote_mlm;
  EngineContext ctx;
};

RemoteConfig remote_config(const std::string& url) {
  RemoteConfig rc;
  rc.base_url = url;
  rc.bearer_token = RemoteConfig::token_from_env();
  return rc;
}

void load_assets(Assets& a, const Common& c, const VictimOpts& v) {
  a.resources = Resources::load_directory(c.resources);
  a.ctx.resources = &a.resources;
  if (v.encoder == "remote" || v.mlm) {
    if (v.remote.empty()) throw ConfigError("--encoder remote and --mlm need --remote");
  }
  if (v.encoder == "remote") {
    a.remote_encoder = std::make_unique<RemoteSentenceEncoder>(remote_config(v.remote));
    a.ctx.encoder = a.remote_encoder.get();
  }
  if (v.mlm) {
    a.remote_mlm = std::make_unique<RemoteMaskedLm>(remote_config(v.remote));
    a.ctx.mlm = a.remote_mlm.get();
  }
}

std::shared_ptr<const VictimModel> open_victim(const std::string& model, const std::string& remote) {
  if (!remote.empty()) return std::make_shared<RemoteVictim>(remote_config(remote));
  return std::make_shared<SurrogateModel>(SurrogateModel::load(model));
}

std::vector<AttackRecipe> resolve_recipes(const RecipeOpts& r, TaskKind task, bool mlm,
                                          const std::vector<std::string>& defaults) {
  std::vector<AttackRecipe> out;
  RecipeOptions ro;
  ro.a2t_mlm = mlm;
  for (const auto& n : r.names) out.push_back(builtin_recipe(n, task, ro));
  for (const auto& f : r.files) {
    auto rec = load_recipe(f, task);
    if (rec.task != task) {
      throw ConfigError(f + ": recipe task '" + std::string(to_string(rec.task)) + "' differs from --task");
    }
    out.push_back(std::move(rec));
  }
  if (out.empty()) {
    for (const auto& n : defaults) out.push_back(builtin_recipe(n, task, ro));
  }
  if (r.budget) {
    if (*r.budget == 0) throw ConfigError("--budget must be >= 1");
    for (auto& rec : out) rec.budget = *r.budget;
  }
  return out;
}

void check_victim(const VictimModel& v, const Dataset& d) {
  if (v.task().kind != d.task.kind || v.task().num_labels() != d.task.num_labels()) {
    throw ConfigError("model task (" + std::string(to_string(v.task().kind)) + ", " +
                      std::to_string(v.task().num_labels()) + " labels) does not match the dataset (" +
                      std::string(to_string(d.task.kind)) + ", " + std::to_string(d.task.num_labels()) + " labels)");
  }
}

// ----------------------------------------------------------------- commands

int cmd_train(const Common& c, const TrainOpts& t) {
  const auto data = load(c);
  const auto out = prepare_out(c.out);
  const auto result = train_surrogate(data, train_config(c, t));
  auto model = result.model;
  json meta = json::parse(model.metadata());
  meta["command"] = "train";
  meta["config"] = common_json(c);
  model.set_metadata(meta.dump());
  model.save(out / "model.bin");

  json j;
  j["command"] = "train";
  j["config"] = common_json(c);
  j["config"]["train"] = train_json(t);
  j["labels"] = data.task.labels;
  j["train_size"] = result.train_size;
  j["holdout_size"] = result.holdout_size;
  j["holdout"] = {{"accuracy", result.holdout.accuracy}, {"macro_f1", result.holdout.macro_f1}};
  write_json(out / "train_metrics.json", j);
  std::printf("trained on %zu records, held out %zu: accuracy %.4f, macro-F1 %.4f\n", result.train_size,
              result.holdout_size, result.holdout.accuracy, result.holdout.macro_f1);
  return kOk;
}

int cmd_attack(const Common& c, const VictimOpts& v, const RecipeOpts& r) {
  if (r.names.size() + r.files.size() != 1) throw ConfigError("attack takes exactly one --recipe or --recipe-file");
  const auto data = load(c);
  const auto recipe = resolve_recipes(r, task_of(c), v.mlm, {}).front();
  Assets assets;
  load_assets(assets, c, v);
  const auto victim = open_victim(v.model, v.remote);
  check_victim(*victim, data);
  const auto out = prepare_out(c.out);

  RunOptions opts;
  opts.parallelism = c.parallelism;
  opts.seed = c.seed;
  const auto run = run_attacks(data, recipe, victim, assets.ctx, opts);

  json config = common_json(c);
  config["victim"] = v.remote.empty() ? json{{"model", v.model}} : json{{"remote", v.remote}};
  config["encoder"] = v.encoder;
  config["parallelism"] = c.parallelism;
  config["recipe"] = recipe_to_json(recipe);
  save_results(out / "results.jsonl", run.results, config);
  json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["command"] = "attack";
  j["config"] = config;
  j["metrics"] = metrics_to_json(run.metrics);
  write_json(out / "metrics.json", j);

  print_metrics_header();
  print_metrics_row(recipe.name, run.metrics);
  return run.metrics.transport_failures > 0 && run.metrics.attempted == 0 ? kTransport : kOk;
}

int cmd_advtrain(const Common& c, const TrainOpts& t, const RecipeOpts& r, double mix_weight, std::size_t rounds,
                 std::size_t per_attack_budget) {
  const auto data = load(c);
  AdvTrainConfig cfg;
  cfg.attacks = resolve_recipes(r, task_of(c), false, {"toxictrap-default"});
  cfg.mix_weight = mix_weight;
  cfg.rounds = rounds;
  cfg.per_attack_budget = per_attack_budget;
  cfg.seed = c.seed;
  cfg.parallelism = c.parallelism;
  cfg.train = train_config(c, t);
  Assets assets;
  load_assets(assets, c, {});
  const auto out = prepare_out(c.out);
  auto result = adversarial_train(data, cfg, assets.ctx);

  json config = common_json(c);
  config["train"] = train_json(t);
  config["mix_weight"] = mix_weight;
  config["rounds"] = rounds;
  config["per_attack_budget"] = per_attack_budget;
  config["parallelism"] = c.parallelism;
  config["attacks"] = json::array();
  for (const auto& a : cfg.attacks) config["attacks"].push_back(recipe_to_json(a));
  result.base.save(out / "base_model.bin");
  result.robust.save(out / "robust_model.bin");
  json j;
  j["command"] = "advtrain";
  j["config"] = config;
  j["report"] = report_to_json(result.report);
  write_json(out / "advtrain_report.json", j);

  std::printf("%s on %zu records (%zu held out), %zu round(s)\n", cfg.attacks.size() == 1 ? "SAT" : "EAT",
              result.report.train_size, result.report.holdout_size, rounds);
  for (const auto& rr : result.report.rounds) {
    for (const auto& a : rr.attacks) {
      std::printf("  round %zu %-20s attempted %zu successes %zu added %zu\n", rr.round, a.attack.c_str(), a.attempted,
                  a.successes, a.added);
    }
  }
  std::printf("held-out accuracy: base %.4f, robust %.4f\n", result.report.base_holdout.accuracy,
              result.report.robust_holdout.accuracy);
  return kOk;
}

int cmd_eval(const Common& c, const VictimOpts& v, const RecipeOpts& r, const std::string& unseen) {
  const auto data = load(c);
  std::vector<std::string> defaults = builtin_recipe_names();
  const auto recipes = resolve_recipes(r, task_of(c), v.mlm, defaults);
  if (!unseen.empty() && std::none_of(recipes.begin(), recipes.end(), [&](const auto& x) { return x.name == unseen; })) {
    throw ConfigError("--unseen '" + unseen + "' is not among the evaluated recipes");
  }
  Assets assets;
  load_assets(assets, c, v);
  const auto victim = open_victim(v.model, v.remote);
  check_victim(*victim, data);
  std::shared_ptr<const VictimModel> base;
  if (!v.base_model.empty()) {
    base = open_victim(v.base_model, "");
    check_victim(*base, data);
  }
  const auto out = prepare_out(c.out);
  RunOptions opts;
  opts.parallelism = c.parallelism;
  opts.seed = c.seed;
  const std::optional<std::string> held = unseen.empty() ? std::nullopt : std::optional<std::string>(unseen);
  const auto rows = evaluate_robustness(victim, recipes, data, assets.ctx, opts, held);

  json config = common_json(c);
  config["model"] = v.remote.empty() ? v.model : v.remote;
  if (base) config["base_model"] = v.base_model;
  config["parallelism"] = c.parallelism;
  config["recipes"] = json::array();
  for (const auto& x : recipes) config["recipes"].push_back(recipe_to_json(x));
  if (held) config["unseen"] = *held;
  json j;
  j["command"] = "eval";
  j["config"] = config;
  j["model"] = robustness_to_json(rows);

  std::printf("model: %s\n", (v.remote.empty() ? v.model : v.remote).c_str());
  print_metrics_header();
  for (const auto& row : rows) print_metrics_row(row.recipe + (row.unseen ? "*" : ""), row.metrics);
  if (base) {
    const auto base_rows = evaluate_robustness(base, recipes, data, assets.ctx, opts, held);
    j["base"] = robustness_to_json(base_rows);
    json delta = json::object();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& a = rows[i].metrics.asr;
      const auto& b = base_rows[i].metrics.asr;
      delta[rows[i].recipe] = a && b ? json(*a - *b) : json();
    }
    j["asr_delta"] = delta;
    std::printf("base: %s\n", v.base_model.c_str());
    print_metrics_header();
    for (const auto& row : base_rows) print_metrics_row(row.recipe + (row.unseen ? "*" : ""), row.metrics);
  }
  write_json(out / "eval.json", j);
  return kOk;
}

std::vector<double> toxicity_scores(const VictimModel& model, const Dataset& data) {
  std::vector<std::string> texts;
  for (const auto& r : data.records) texts.push_back(r.text);
  const auto out = model.predict(texts);
  std::vector<double> s;
  for (const auto& row : out.probs) s.push_back(1.0 - row[kBenignIndex]);
  return s;
}

int cmd_bias(const Common& c, const VictimOpts& v) {
  const auto data = load(c);
  if (data.identity_groups.empty()) {
    throw DataError(c.dataset + ": no identity columns (expected identity_<group> columns, e.g. identity_female)");
  }
  const auto model = open_victim(v.model, v.remote);
  check_victim(*model, data);
  std::shared_ptr<const VictimModel> base;
  if (!v.base_model.empty()) {
    base = open_victim(v.base_model, "");
    check_victim(*base, data);
  }
  const auto out = prepare_out(c.out);
  const auto scores = toxicity_scores(*model, data);
  std::vector<double> base_scores;
  if (base) base_scores = toxicity_scores(*base, data);

  auto metric_json = [](const BiasMetric& m) {
    json j;
    j["value"] = m.value ? json(*m.value) : json();
    if (!m.value) j["undefined"] = m.undefined_reason;
    return j;
  };
  json groups = json::array();
  std::printf("%-16s %10s %10s %10s %10s\n", "group", "subgroup", "bpsn", "d_subgroup", "d_bpsn");
  for (const auto& g : data.identity_groups) {
    const auto sg = subgroup_auc(scores, data, g);
    const auto bp = bpsn_auc(scores, data, g);
    json gj;
    gj["group"] = g;
    gj["subgroup_auc"] = metric_json(sg);
    gj["bpsn_auc"] = metric_json(bp);
    std::optional<double> dsg, dbp;
    if (base) {
      const auto bsg = subgroup_auc(base_scores, data, g);
      const auto bbp = bpsn_auc(base_scores, data, g);
      gj["base_subgroup_auc"] = metric_json(bsg);
      gj["base_bpsn_auc"] = metric_json(bbp);
      if (sg.value && bsg.value) dsg = *sg.value - *bsg.value;
      if (bp.value && bbp.value) dbp = *bp.value - *bbp.value;
      gj["subgroup_delta"] = dsg ? json(*dsg) : json();
      gj["bpsn_delta"] = dbp ? json(*dbp) : json();
    }
    groups.push_back(gj);
    std::printf("%-16s %10s %10s %10s %10s\n", g.c_str(), fmt_opt(sg.value, "%.4f").c_str(),
                fmt_opt(bp.value, "%.4f").c_str(), fmt_opt(dsg, "%+.4f").c_str(), fmt_opt(dbp, "%+.4f").c_str());
  }
  json config = common_json(c);
  config["model"] = v.remote.empty() ? v.model : v.remote;
  if (base) config["base_model"] = v.base_model;
  json j;
  j["command"] = "bias";
  j["config"] = config;
  j["groups"] = groups;
  write_json(out / "bias.json", j);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toxictrap: targeted predict-as-benign attacks and adversarial training for toxicity classifiers"};
  app.require_subcommand(1);

  Common common;
  TrainOpts train;
  VictimOpts victim;
  RecipeOpts recipes;
  std::size_t budget = 0;
  double mix_weight = 1.0;
  std::size_t rounds = 1;
  std::size_t per_attack_budget = 200;
  std::string unseen;

  auto add_victim = [&](CLI::App* sub, bool remote_ok) {
    auto* m = sub->add_option("--model", victim.model, "surrogate model file")->check(CLI::ExistingFile);
    if (remote_ok) {
      auto* r = sub->add_option("--remote", victim.remote, "model-server base URL (token from " +
                                                               std::string(kApiTokenEnv) + ")");
      m->excludes(r);
      r->excludes(m);
      sub->add_option("--encoder", victim.encoder, "sentence encoder: mean or remote")
          ->check(CLI::IsMember({"mean", "remote"}));
      sub->add_flag("--mlm", victim.mlm, "a2t-toxic also uses remote masked-LM swaps");
    }
    return m;
  };
  auto add_recipes = [&](CLI::App* sub, bool many) {
    auto* n = sub->add_option("--recipe", recipes.names, many ? "builtin recipe name (repeatable)" : "builtin recipe name");
    auto* f = sub->add_option("--recipe-file", recipes.files, "TOML recipe file")->check(CLI::ExistingFile);
    if (!many) {
      n->expected(1);
      f->expected(1);
      n->excludes(f);
      f->excludes(n);
    }
    sub->add_option("--budget", budget, "max victim queries per seed");
  };

  auto* train_cmd = app.add_subcommand("train", "fit the built-in surrogate classifier");
  add_common(train_cmd, common);
  add_train(train_cmd, train);

  auto* attack_cmd = app.add_subcommand("attack", "attack every seed of a dataset");
  add_common(attack_cmd, common);
  add_run(attack_cmd, common);
  add_victim(attack_cmd, true);
  add_recipes(attack_cmd, false);

  auto* adv_cmd = app.add_subcommand("advtrain", "adversarial training (one recipe: SAT, several: EAT)");
  add_common(adv_cmd, common);
  add_run(adv_cmd, common);
  add_train(adv_cmd, train);
  add_recipes(adv_cmd, true);
  adv_cmd->add_option("--mix-weight", mix_weight, "weight of adversarial records")->check(CLI::NonNegativeNumber);
  adv_cmd->add_option("--rounds", rounds, "generate/retrain cycles")->check(CLI::PositiveNumber);
  adv_cmd->add_option("--per-attack-budget", per_attack_budget, "adversarial examples kept per attack and round");

  auto* eval_cmd = app.add_subcommand("eval", "robustness table: recipe -> attack metrics");
  add_common(eval_cmd, common);
  add_run(eval_cmd, common);
  add_victim(eval_cmd, true);
  eval_cmd->add_option("--base-model", victim.base_model, "baseline model for deltas")->check(CLI::ExistingFile);
  add_recipes(eval_cmd, true);
  eval_cmd->add_option("--unseen", unseen, "recipe held out of adversarial training");

  auto* bias_cmd = app.add_subcommand("bias", "subgroup and BPSN AUC per identity group");
  add_common(bias_cmd, common);
  add_victim(bias_cmd, false)->required();
  bias_cmd->add_option("--base-model", victim.base_model, "baseline model for deltas")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }
  if (budget > 0) recipes.budget = budget;

  try {
    if (*train_cmd) return cmd_train(common, train);
    if (*adv_cmd) return cmd_advtrain(common, train, recipes, mix_weight, rounds, per_attack_budget);
    if (victim.model.empty() && victim.remote.empty()) throw ConfigError("one of --model or --remote is required");
    if (*attack_cmd) return cmd_attack(common, victim, recipes);
    if (*eval_cmd) return cmd_eval(common, victim, recipes, unseen);
    if (*bias_cmd) return cmd_bias(common, victim);
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << '\n';
    return kTransport;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const UnsupportedCapability& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
