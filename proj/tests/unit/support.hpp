#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "toxictrap/resources.hpp"
#include "toxictrap/victim.hpp"

namespace testing_support {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(TOXICTRAP_TEST_FIXTURES) / name;
}
inline std::filesystem::path data_file(const std::string& name) {
  return std::filesystem::path(TOXICTRAP_DATA_DIR) / name;
}
inline std::filesystem::path golden_file(const std::string& name) {
  return std::filesystem::path(TOXICTRAP_TEST_GOLDEN) / name;
}
inline std::filesystem::path protocol_file(const std::string& name) {
  return std::filesystem::path(TOXICTRAP_PROTOCOL_DIR) / name;
}

// Set TOXICTRAP_UPDATE_GOLDEN=1 to rewrite golden files instead of comparing.
bool update_golden();
std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Resources built from the small files in tests/fixtures.
toxictrap::Resources tiny_resources();
// The shipped resource directory.
const toxictrap::Resources& shipped_resources();

// Victim whose per-text output comes from a function. Records every text
// that reaches it.
class FnVictim final : public toxictrap::VictimModel {
 public:
  using Fn = std::function<toxictrap::ProbRow(const std::string&)>;
  FnVictim(toxictrap::TaskSpec task, Fn fn) : task_(std::move(task)), fn_(std::move(fn)) {}

  const toxictrap::TaskSpec& task() const override { return task_; }
  toxictrap::VictimOutput predict(std::span<const std::string> texts) const override;

  std::size_t calls() const;
  // Texts in the order they reached the model.
  std::vector<std::string> log() const;

 private:
  toxictrap::TaskSpec task_;
  Fn fn_;
  mutable std::mutex mu_;
  mutable std::vector<std::string> log_;
};

toxictrap::TaskSpec multiclass3();
toxictrap::TaskSpec multilabel(std::size_t toxic_labels);

// Binary victim: toxic while the text still equals `seed`, benign after any edit.
std::shared_ptr<FnVictim> flip_on_edit(const std::string& seed);
// Binary victim that always answers toxic.
std::shared_ptr<FnVictim> never_flips();

// Binary victim with P(toxic) = sigmoid(bias + sum of per-token weights);
// tokens without a weight (including [UNK]) contribute nothing.
std::shared_ptr<FnVictim> word_weight_victim(std::map<std::string, double> weights, double bias);
double word_weight_benign(const std::map<std::string, double>& weights, double bias, const std::string& text);

}  // namespace testing_support
