#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "toxictrap/dataset.hpp"
#include "toxictrap/kernels.hpp"
#include "toxictrap/victim.hpp"

namespace toxictrap {

inline constexpr std::size_t kDefaultFeatureDim = std::size_t{1} << 18;

// Hashed lower-cased unigram + bigram counts. Bucket 0 is reserved for any
// feature touching kUnkToken and carries zero weight.
struct FeatureVector {
  std::vector<std::uint32_t> index;  // ascending, unique
  std::vector<double> value;
};

FeatureVector featurize(std::string_view text, std::size_t feature_dim);
FeatureVector featurize_words(const std::vector<std::string>& words, std::size_t feature_dim);

// Distinct non-reserved buckets activated by word i: its unigram and the
// bigrams it takes part in.
std::vector<std::uint32_t> word_feature_buckets(const std::vector<std::string>& words,
                                                std::size_t i, std::size_t feature_dim);

struct TrainConfig {
  std::size_t feature_dim = kDefaultFeatureDim;
  std::size_t iterations = 300;
  double learning_rate = 0.05;
  double l2 = 1e-3;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 7;
};

// Linear logistic victim: softmax over labels for BINARY/MULTICLASS,
// one-vs-rest sigmoids for MULTILABEL.
class SurrogateModel final : public VictimModel {
 public:
  SurrogateModel(TaskSpec task, std::size_t feature_dim);
  SurrogateModel(TaskSpec task, std::size_t feature_dim, std::vector<double> weights,
                 std::vector<double> bias);

  const TaskSpec& task() const override { return task_; }
  VictimOutput predict(std::span<const std::string> texts) const override;

  bool has_gradients() const override { return true; }
  // Score of word i: L1 norm of d(loss)/d(x_f) over the buckets f the word
  // activates, with loss the negative log-likelihood of the current
  // prediction.
  std::vector<double> gradient_word_scores(const AttackedText& text) const override;

  ProbRow probabilities(const FeatureVector& x) const;
  double loss(const FeatureVector& x, const LabelVector& target) const;

  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::span<const double> weights() const noexcept { return weights_; }  // labels x dim
  std::span<const double> bias() const noexcept { return bias_; }

  // Free-form JSON describing how the model was produced.
  const std::string& metadata() const noexcept { return metadata_; }
  void set_metadata(std::string json) { metadata_ = std::move(json); }

  // Layout: "toxictrap-surrogate 1\n", one JSON header line (task, labels,
  // feature_dim, metadata), then little-endian doubles: bias[labels], then
  // weights[labels][feature_dim] row-major.
  void save(const std::filesystem::path& path) const;
  static SurrogateModel load(const std::filesystem::path& path);

  bool operator==(const SurrogateModel& other) const {
    return task_ == other.task_ && feature_dim_ == other.feature_dim_ &&
           weights_ == other.weights_ && bias_ == other.bias_;
  }

 private:
  ProbRow activate(std::span<const double> logits) const;

  TaskSpec task_;
  std::size_t feature_dim_;
  std::vector<double> weights_;
  std::vector<double> bias_;
  std::string metadata_ = "{}";
};

struct Evaluation {
  double accuracy = 0;  // exact match of the predicted label vector
  double macro_f1 = 0;
};

Evaluation evaluate_classifier(const VictimModel& model, const Dataset& data);

struct DatasetSplit {
  Dataset train;
  Dataset holdout;
};

DatasetSplit split_dataset(const Dataset& data, double holdout_fraction, std::uint64_t seed);

// Full-batch Adam on the weighted mean log-loss plus L2. Records with zero
// weight are ignored entirely. Deterministic for a given input.
SurrogateModel fit_surrogate(const Dataset& train, std::span<const double> sample_weights,
                             const TrainConfig& config);

struct TrainResult {
  SurrogateModel model;
  Evaluation holdout;
  std::size_t train_size = 0;
  std::size_t holdout_size = 0;
};

TrainResult train_surrogate(const Dataset& corpus, const TrainConfig& config);

}  // namespace toxictrap
