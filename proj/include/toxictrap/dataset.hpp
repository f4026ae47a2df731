#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace toxictrap {

enum class TaskKind { kBinary, kMulticlass, kMultilabel };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

inline constexpr std::size_t kBenignIndex = 0;
inline constexpr double kMultilabelThreshold = 0.5;

// Label space of a victim. Index 0 is always the benign label.
struct TaskSpec {
  TaskKind kind = TaskKind::kBinary;
  std::vector<std::string> labels;

  std::size_t num_labels() const noexcept { return labels.size(); }
  void validate() const;
  bool operator==(const TaskSpec&) const = default;

  static TaskSpec binary();
};

// One 0/1 entry per label. Single-label tasks store a one-hot vector.
using LabelVector = std::vector<std::uint8_t>;

LabelVector one_hot(std::size_t label, std::size_t num_labels);
bool is_benign(const LabelVector& labels);

struct Record {
  std::string text;
  LabelVector labels;
  // One flag per Dataset::identity_groups entry; empty when the dataset has none.
  std::vector<std::uint8_t> identities;
  // Set for records appended by adversarial augmentation.
  std::optional<std::string> provenance;
};

struct Dataset {
  TaskSpec task;
  std::vector<std::string> identity_groups;
  std::vector<Record> records;

  std::size_t size() const noexcept { return records.size(); }
};

enum class DatasetFormat { kCsv, kJsonl };
DatasetFormat parse_dataset_format(std::string_view name);

struct DatasetOptions {
  // Names for single-label classes; defaults to benign, label_1, ...
  std::vector<std::string> label_names;
};

// CSV single-label: text,label[,identity_*]. CSV multilabel: text plus one
// 0/1 column per label (a leading "benign" column is optional and derived
// as "no toxic label set" when absent) plus optional identity_* columns.
// JSONL mirrors the same fields: {"text", "label"} or {"text", "labels":
// {name: 0/1}} with an optional "identity": {group: 0/1} object.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format, TaskKind task,
                     const DatasetOptions& options = {});

// Minimal RFC 4180 reader; exposed for tests.
std::vector<std::vector<std::string>> parse_csv(std::string_view content);

}  // namespace toxictrap
