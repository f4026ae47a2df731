#include "toxictrap/surrogate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "toxictrap/error.hpp"

namespace toxictrap {
namespace {

constexpr std::string_view kMagic = "toxictrap-surrogate 1";

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint32_t bucket(std::string_view feature, std::size_t dim) {
  return static_cast<std::uint32_t>(1 + fnv1a(feature) % (dim - 1));
}

bool is_unk(const std::string& w) { return w == kUnkToken; }

std::uint32_t unigram_bucket(const std::string& w, std::size_t dim) {
  if (is_unk(w)) return 0;
  return bucket("u\x1f" + ascii_lower(w), dim);
}

std::uint32_t bigram_bucket(const std::string& a, const std::string& b, std::size_t dim) {
  if (is_unk(a) || is_unk(b)) return 0;
  return bucket("b\x1f" + ascii_lower(a) + "\x1f" + ascii_lower(b), dim);
}

std::vector<std::string> token_texts(std::string_view text) {
  std::vector<std::string> words;
  for (auto& t : tokenize(text)) words.push_back(std::move(t.text));
  return words;
}

void check_dim(std::size_t dim) {
  if (dim < 2) throw PreconditionError("feature_dim must be >= 2");
}

}  // namespace

FeatureVector featurize_words(const std::vector<std::string>& words, std::size_t dim) {
  check_dim(dim);
  std::map<std::uint32_t, double> counts;
  for (std::size_t i = 0; i < words.size(); ++i) {
    counts[unigram_bucket(words[i], dim)] += 1.0;
    if (i + 1 < words.size()) counts[bigram_bucket(words[i], words[i + 1], dim)] += 1.0;
  }
  FeatureVector fv;
  for (const auto& [idx, v] : counts) {
    fv.index.push_back(idx);
    fv.value.push_back(v);
  }
  return fv;
}

FeatureVector featurize(std::string_view text, std::size_t dim) {
  return featurize_words(token_texts(text), dim);
}

std::vector<std::uint32_t> word_feature_buckets(const std::vector<std::string>& words,
                                                std::size_t i, std::size_t dim) {
  check_dim(dim);
  std::vector<std::uint32_t> out{unigram_bucket(words.at(i), dim)};
  if (i > 0) out.push_back(bigram_bucket(words[i - 1], words[i], dim));
  if (i + 1 < words.size()) out.push_back(bigram_bucket(words[i], words[i + 1], dim));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (!out.empty() && out.front() == 0) out.erase(out.begin());
  return out;
}

// ------------------------------------------------------------------- model

SurrogateModel::SurrogateModel(TaskSpec task, std::size_t feature_dim)
    : task_(std::move(task)),
      feature_dim_(feature_dim),
      weights_(task_.num_labels() * feature_dim, 0.0),
      bias_(task_.num_labels(), 0.0) {
  task_.validate();
  check_dim(feature_dim);
}

SurrogateModel::SurrogateModel(TaskSpec task, std::size_t feature_dim, std::vector<double> weights,
                               std::vector<double> bias)
    : task_(std::move(task)), feature_dim_(feature_dim), weights_(std::move(weights)), bias_(std::move(bias)) {
  task_.validate();
  check_dim(feature_dim);
  if (bias_.size() != task_.num_labels() || weights_.size() != task_.num_labels() * feature_dim_) {
    throw PreconditionError("surrogate parameter shape does not match task/feature_dim");
  }
  for (double w : weights_) {
    if (!std::isfinite(w)) throw PreconditionError("surrogate weights must be finite");
  }
  for (std::size_t k = 0; k < task_.num_labels(); ++k) weights_[k * feature_dim_] = 0.0;
}

ProbRow SurrogateModel::activate(std::span<const double> logits) const {
  ProbRow p(logits.begin(), logits.end());
  if (task_.kind == TaskKind::kMultilabel) {
    for (auto& v : p) v = 1.0 / (1.0 + std::exp(-v));
    return p;
  }
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0;
  for (auto& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

ProbRow SurrogateModel::probabilities(const FeatureVector& x) const {
  const std::size_t labels = task_.num_labels();
  std::vector<double> z(bias_);
  for (std::size_t k = 0; k < labels; ++k) {
    const double* w = weights_.data() + k * feature_dim_;
    for (std::size_t j = 0; j < x.index.size(); ++j) z[k] += w[x.index[j]] * x.value[j];
  }
  return activate(z);
}

double SurrogateModel::loss(const FeatureVector& x, const LabelVector& target) const {
  const auto p = probabilities(x);
  constexpr double kFloor = 1e-300;
  double l = 0;
  if (task_.kind == TaskKind::kMultilabel) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      l -= target[k] ? std::log(std::max(p[k], kFloor)) : std::log(std::max(1.0 - p[k], kFloor));
    }
    return l;
  }
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (target[k]) l -= std::log(std::max(p[k], kFloor));
  }
  return l;
}

VictimOutput SurrogateModel::predict(std::span<const std::string> texts) const {
  kernels::SparseRows rows;
  for (const auto& t : texts) {
    const auto fv = featurize(t, feature_dim_);
    rows.index.insert(rows.index.end(), fv.index.begin(), fv.index.end());
    rows.value.insert(rows.value.end(), fv.value.begin(), fv.value.end());
    rows.offsets.push_back(rows.index.size());
  }
  const std::size_t labels = task_.num_labels();
  std::vector<double> logits(texts.size() * labels);
  kernels::linear_scores(rows, weights_, bias_, feature_dim_, logits);
  VictimOutput out;
  out.probs.reserve(texts.size());
  for (std::size_t r = 0; r < texts.size(); ++r) {
    out.probs.push_back(activate(std::span<const double>(logits).subspan(r * labels, labels)));
  }
  return out;
}

std::vector<double> SurrogateModel::gradient_word_scores(const AttackedText& text) const {
  const auto& words = text.words();
  const auto x = featurize_words(words, feature_dim_);
  const auto p = probabilities(x);
  const auto target = predicted_labels(task_, p);
  std::vector<double> delta(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) delta[k] = p[k] - target[k];

  std::vector<double> scores(words.size(), 0.0);
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (auto f : word_feature_buckets(words, i, feature_dim_)) {
      double g = 0;
      for (std::size_t k = 0; k < delta.size(); ++k) g += delta[k] * weights_[k * feature_dim_ + f];
      scores[i] += std::abs(g);
    }
  }
  return scores;
}

void SurrogateModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write model " + path.string());
  nlohmann::ordered_json header;
  header["task"] = to_string(task_.kind);
  header["labels"] = task_.labels;
  header["feature_dim"] = feature_dim_;
  header["metadata"] = nlohmann::ordered_json::parse(metadata_);
  out << kMagic << '\n' << header.dump() << '\n';
  static_assert(std::endian::native == std::endian::little, "model files are little-endian");
  out.write(reinterpret_cast<const char*>(bias_.data()),
            static_cast<std::streamsize>(bias_.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(weights_.data()),
            static_cast<std::streamsize>(weights_.size() * sizeof(double)));
  if (!out) throw LoadError("failed writing model " + path.string());
}

SurrogateModel SurrogateModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open model " + path.string());
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != kMagic) throw LoadError(path.string() + ": not a toxictrap surrogate model");
  std::getline(in, header_line);
  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": bad header: " + e.what());
  }
  TaskSpec task{parse_task_kind(header.at("task").get<std::string>()),
                header.at("labels").get<std::vector<std::string>>()};
  const auto dim = header.at("feature_dim").get<std::size_t>();
  std::vector<double> bias(task.num_labels()), weights(task.num_labels() * dim);
  in.read(reinterpret_cast<char*>(bias.data()), static_cast<std::streamsize>(bias.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(weights.data()),
          static_cast<std::streamsize>(weights.size() * sizeof(double)));
  if (!in) throw LoadError(path.string() + ": truncated parameter block");
  SurrogateModel model(std::move(task), dim, std::move(weights), std::move(bias));
  model.metadata_ = header.value("metadata", nlohmann::ordered_json::object()).dump();
  return model;
}

// ---------------------------------------------------------------- training

Evaluation evaluate_classifier(const VictimModel& model, const Dataset& data) {
  Evaluation ev;
  if (data.records.empty()) return ev;
  std::vector<std::string> texts;
  for (const auto& r : data.records) texts.push_back(r.text);
  const auto out = model.predict(texts);
  const std::size_t labels = model.task().num_labels();
  std::vector<double> tp(labels, 0), fp(labels, 0), fn(labels, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto pred = predicted_labels(model.task(), out.probs[i]);
    const auto& truth = data.records[i].labels;
    correct += pred == truth;
    for (std::size_t k = 0; k < labels; ++k) {
      if (pred[k] && truth[k]) tp[k] += 1;
      if (pred[k] && !truth[k]) fp[k] += 1;
      if (!pred[k] && truth[k]) fn[k] += 1;
    }
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(data.records.size());
  double f1_sum = 0;
  for (std::size_t k = 0; k < labels; ++k) {
    const double denom = 2 * tp[k] + fp[k] + fn[k];
    f1_sum += denom == 0 ? 0.0 : 2 * tp[k] / denom;
  }
  ev.macro_f1 = f1_sum / static_cast<double>(labels);
  return ev;
}

DatasetSplit split_dataset(const Dataset& data, double holdout_fraction, std::uint64_t seed) {
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0) {
    throw PreconditionError("holdout_fraction must be in [0, 1)");
  }
  std::vector<std::size_t> order(data.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

  const auto holdout_n = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(order.size())));
  DatasetSplit split;
  split.train.task = split.holdout.task = data.task;
  split.train.identity_groups = split.holdout.identity_groups = data.identity_groups;
  // Keep original relative order inside each part.
  std::vector<char> in_holdout(order.size(), 0);
  for (std::size_t i = 0; i < holdout_n; ++i) in_holdout[order[i]] = 1;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    (in_holdout[i] ? split.holdout : split.train).records.push_back(data.records[i]);
  }
  return split;
}

SurrogateModel fit_surrogate(const Dataset& train, std::span<const double> sample_weights,
                             const TrainConfig& config) {
  if (train.records.empty()) throw PreconditionError("cannot train on an empty corpus");
  if (!sample_weights.empty() && sample_weights.size() != train.records.size()) {
    throw PreconditionError("sample_weights size does not match the corpus");
  }
  const TaskSpec& task = train.task;
  task.validate();
  const std::size_t labels = task.num_labels();
  const std::size_t dim = config.feature_dim;

  struct Sample {
    FeatureVector x;
    const LabelVector* y;
    double w;
  };
  std::vector<Sample> samples;
  double total_weight = 0;
  for (std::size_t i = 0; i < train.records.size(); ++i) {
    const double w = sample_weights.empty() ? 1.0 : sample_weights[i];
    if (w < 0.0 || !std::isfinite(w)) throw PreconditionError("sample weights must be finite and >= 0");
    if (w == 0.0) continue;
    const auto& rec = train.records[i];
    if (rec.labels.size() != labels) {
      throw PreconditionError("record " + std::to_string(i) + " has " + std::to_string(rec.labels.size()) +
                              " labels, task expects " + std::to_string(labels));
    }
    if (task.kind != TaskKind::kMultilabel &&
        std::count(rec.labels.begin(), rec.labels.end(), std::uint8_t{1}) != 1) {
      throw PreconditionError("record " + std::to_string(i) + " is not single-label");
    }
    samples.push_back({featurize(rec.text, dim), &rec.labels, w});
    total_weight += w;
  }
  if (samples.empty()) throw PreconditionError("all training samples have zero weight");

  // Compact the active buckets; everything else keeps weight 0.
  std::vector<std::uint32_t> active;
  for (const auto& s : samples) active.insert(active.end(), s.x.index.begin(), s.x.index.end());
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  if (!active.empty() && active.front() == 0) active.erase(active.begin());
  const std::size_t m = active.size();
  const auto compact = [&](std::uint32_t b) -> std::ptrdiff_t {
    const auto it = std::lower_bound(active.begin(), active.end(), b);
    return (it != active.end() && *it == b) ? it - active.begin() : -1;
  };
  struct Entry {
    std::size_t j;
    double v;
  };
  std::vector<std::vector<Entry>> xs(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t t = 0; t < samples[i].x.index.size(); ++t) {
      const auto j = compact(samples[i].x.index[t]);
      if (j >= 0) xs[i].push_back({static_cast<std::size_t>(j), samples[i].x.value[t]});
    }
  }

  std::vector<double> w(labels * m, 0.0), b(labels, 0.0);
  std::vector<double> gw(w.size()), gb(labels);
  std::vector<double> mw(w.size(), 0.0), vw(w.size(), 0.0), mb(labels, 0.0), vb(labels, 0.0);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::vector<double> z(labels);

  for (std::size_t it = 1; it <= config.iterations; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t k = 0; k < labels; ++k) {
        double acc = b[k];
        for (const auto& e : xs[i]) acc += w[k * m + e.j] * e.v;
        z[k] = acc;
      }
      if (task.kind == TaskKind::kMultilabel) {
        for (auto& v : z) v = 1.0 / (1.0 + std::exp(-v));
      } else {
        const double mx = *std::max_element(z.begin(), z.end());
        double sum = 0;
        for (auto& v : z) {
          v = std::exp(v - mx);
          sum += v;
        }
        for (auto& v : z) v /= sum;
      }
      const double scale = samples[i].w / total_weight;
      for (std::size_t k = 0; k < labels; ++k) {
        const double d = (z[k] - (*samples[i].y)[k]) * scale;
        gb[k] += d;
        for (const auto& e : xs[i]) gw[k * m + e.j] += d * e.v;
      }
    }
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(it));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(it));
    for (std::size_t p = 0; p < w.size(); ++p) {
      const double g = gw[p] + config.l2 * w[p];
      mw[p] = kBeta1 * mw[p] + (1 - kBeta1) * g;
      vw[p] = kBeta2 * vw[p] + (1 - kBeta2) * g * g;
      w[p] -= config.learning_rate * (mw[p] / c1) / (std::sqrt(vw[p] / c2) + kEps);
    }
    for (std::size_t k = 0; k < labels; ++k) {
      mb[k] = kBeta1 * mb[k] + (1 - kBeta1) * gb[k];
      vb[k] = kBeta2 * vb[k] + (1 - kBeta2) * gb[k] * gb[k];
      b[k] -= config.learning_rate * (mb[k] / c1) / (std::sqrt(vb[k] / c2) + kEps);
    }
  }

  std::vector<double> full(labels * dim, 0.0);
  for (std::size_t k = 0; k < labels; ++k) {
    for (std::size_t j = 0; j < m; ++j) full[k * dim + active[j]] = w[k * m + j];
  }
  SurrogateModel model(task, dim, std::move(full), std::move(b));
  nlohmann::ordered_json meta;
  meta["trainer"] = "full-batch-adam";
  meta["iterations"] = config.iterations;
  meta["learning_rate"] = config.learning_rate;
  meta["l2"] = config.l2;
  meta["seed"] = config.seed;
  meta["samples"] = samples.size();
  model.set_metadata(meta.dump());
  return model;
}

TrainResult train_surrogate(const Dataset& corpus, const TrainConfig& config) {
  if (corpus.records.empty()) throw PreconditionError("cannot train on an empty corpus");
  auto split = split_dataset(corpus, config.holdout_fraction, config.seed);
  auto model = fit_surrogate(split.train, {}, config);
  TrainResult result{std::move(model), {}, split.train.size(), split.holdout.size()};
  if (!split.holdout.records.empty()) result.holdout = evaluate_classifier(result.model, split.holdout);
  return result;
}

}  // namespace toxictrap
