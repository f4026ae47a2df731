#include "toxictrap/advtrain.hpp"

#include <numeric>
#include <random>

#include "toxictrap/error.hpp"

namespace toxictrap {

void AdvTrainConfig::validate() const {
  if (attacks.empty()) throw ConfigError("adversarial training needs at least one attack");
  if (!(mix_weight >= 0.0) || !std::isfinite(mix_weight)) throw ConfigError("mix_weight must be >= 0");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  for (const auto& a : attacks) a.validate();
}

Dataset augment(const Dataset& data, std::span<const AttackRecipe> attacks, std::shared_ptr<const VictimModel> model,
                const EngineContext& ctx, std::size_t per_attack_budget, std::uint64_t seed, std::size_t parallelism,
                std::vector<AugmentStats>* stats) {
  Dataset out = data;
  // Seeded visiting order; a fixed permutation keeps "first k successes"
  // independent of thread scheduling.
  std::vector<std::size_t> order(data.records.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

  Dataset toxic;
  toxic.task = data.task;
  toxic.identity_groups = data.identity_groups;
  std::vector<std::size_t> source;
  for (auto i : order) {
    if (is_benign(data.records[i].labels)) continue;
    toxic.records.push_back(data.records[i]);
    source.push_back(i);
  }

  for (std::size_t a = 0; a < attacks.size(); ++a) {
    const auto& attack = attacks[a];
    RunOptions opts;
    opts.parallelism = parallelism;
    opts.seed = seed_rng(seed, a);
    const auto run = run_attacks(toxic, attack, model, ctx, opts);
    AugmentStats st{attack.name, run.metrics.attempted, run.metrics.successes, 0};
    for (std::size_t k = 0; k < run.results.size() && st.added < per_attack_budget; ++k) {
      const auto& r = run.results[k];
      if (r.status != AttackStatus::kSuccess) continue;
      Record rec = toxic.records[k];
      rec.text = r.final.text();
      rec.provenance = attack.name + "#" + std::to_string(source[k]);
      out.records.push_back(std::move(rec));
      ++st.added;
    }
    if (stats) stats->push_back(st);
  }
  return out;
}

AdvTrainResult adversarial_train(const Dataset& corpus, const AdvTrainConfig& config, const EngineContext& ctx) {
  config.validate();
  if (corpus.records.empty()) throw PreconditionError("cannot adversarially train on an empty corpus");
  for (const auto& a : config.attacks) {
    if (a.task != corpus.task.kind) throw ConfigError("attack '" + a.name + "' targets a different task");
  }
  const auto split = split_dataset(corpus, config.train.holdout_fraction, config.seed);
  TrainConfig tc = config.train;
  tc.seed = config.seed;
  SurrogateModel base = fit_surrogate(split.train, {}, tc);

  AdvTrainReport report;
  for (const auto& a : config.attacks) report.attacks.push_back(a.name);
  report.train_size = split.train.size();
  report.holdout_size = split.holdout.size();
  if (!split.holdout.records.empty()) report.base_holdout = evaluate_classifier(base, split.holdout);

  std::vector<Record> adversarial;
  auto current = std::make_shared<SurrogateModel>(base);
  for (std::size_t round = 0; round < config.rounds; ++round) {
    RoundReport rr;
    rr.round = round + 1;
    const auto augmented = augment(split.train, config.attacks, current, ctx, config.per_attack_budget,
                                   seed_rng(config.seed, round), config.parallelism, &rr.attacks);
    adversarial.insert(adversarial.end(), augmented.records.begin() + static_cast<std::ptrdiff_t>(split.train.size()),
                       augmented.records.end());

    Dataset mixed = split.train;
    mixed.records.insert(mixed.records.end(), adversarial.begin(), adversarial.end());
    std::vector<double> weights(split.train.size(), 1.0);
    weights.resize(mixed.records.size(), config.mix_weight);
    current = std::make_shared<SurrogateModel>(fit_surrogate(mixed, weights, tc));

    rr.adversarial_records = adversarial.size();
    if (!split.holdout.records.empty()) rr.holdout = evaluate_classifier(*current, split.holdout);
    report.rounds.push_back(std::move(rr));
  }
  report.robust_holdout = report.rounds.back().holdout;

  nlohmann::ordered_json meta;
  meta["kind"] = config.attacks.size() == 1 ? "sat" : "eat";
  meta["attacks"] = report.attacks;
  meta["mix_weight"] = config.mix_weight;
  meta["rounds"] = config.rounds;
  meta["per_attack_budget"] = config.per_attack_budget;
  meta["seed"] = config.seed;
  SurrogateModel robust = *current;
  robust.set_metadata(meta.dump());
  return {std::move(base), std::move(robust), std::move(report)};
}

nlohmann::ordered_json report_to_json(const AdvTrainReport& report) {
  auto eval = [](const Evaluation& e) {
    nlohmann::ordered_json j;
    j["accuracy"] = e.accuracy;
    j["macro_f1"] = e.macro_f1;
    return j;
  };
  nlohmann::ordered_json j;
  j["attacks"] = report.attacks;
  j["train_size"] = report.train_size;
  j["holdout_size"] = report.holdout_size;
  j["base_holdout"] = eval(report.base_holdout);
  j["robust_holdout"] = eval(report.robust_holdout);
  j["clean_accuracy_delta"] = report.robust_holdout.accuracy - report.base_holdout.accuracy;
  j["rounds"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rounds) {
    nlohmann::ordered_json rj;
    rj["round"] = r.round;
    rj["attacks"] = nlohmann::ordered_json::array();
    for (const auto& a : r.attacks) {
      nlohmann::ordered_json aj;
      aj["attack"] = a.attack;
      aj["attempted"] = a.attempted;
      aj["successes"] = a.successes;
      aj["added"] = a.added;
      rj["attacks"].push_back(aj);
    }
    rj["adversarial_records"] = r.adversarial_records;
    rj["holdout"] = eval(r.holdout);
    j["rounds"].push_back(rj);
  }
  return j;
}

std::vector<RobustnessRow> evaluate_robustness(std::shared_ptr<const VictimModel> model,
                                               std::span<const AttackRecipe> recipes, const Dataset& seeds,
                                               const EngineContext& ctx, const RunOptions& options,
                                               const std::optional<std::string>& unseen) {
  std::vector<RobustnessRow> rows;
  for (const auto& r : recipes) {
    const auto run = run_attacks(seeds, r, model, ctx, options);
    rows.push_back({r.name, unseen && *unseen == r.name, run.metrics});
  }
  return rows;
}

nlohmann::ordered_json robustness_to_json(std::span<const RobustnessRow> rows) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json rj;
    rj["recipe"] = r.recipe;
    rj["unseen"] = r.unseen;
    rj["metrics"] = metrics_to_json(r.metrics);
    j.push_back(rj);
  }
  return j;
}

}  // namespace toxictrap
