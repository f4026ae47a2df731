#include "toxictrap/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "toxictrap/error.hpp"

namespace toxictrap {
namespace {

constexpr std::string_view kIdentityPrefix = "identity_";
// Jigsaw's toxicity label shares the identity prefix.
constexpr std::string_view kIdentityHateLabel = "identity_hate";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool parse_flag(std::string_view s, const std::string& where) {
  double v = 0;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw DataError(where + ": expected 0/1, got '" + std::string(s) + "'");
  }
  return v >= 0.5;
}

std::vector<std::string> default_label_names(TaskKind task, std::size_t count) {
  if (task == TaskKind::kBinary) return {"benign", "toxic"};
  std::vector<std::string> names{"benign"};
  for (std::size_t i = 1; i < count; ++i) names.push_back("label_" + std::to_string(i));
  return names;
}

std::size_t parse_single_label(std::string_view raw, const std::vector<std::string>& names,
                               const std::string& where) {
  std::size_t value = 0;
  const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), value);
  if (res.ec == std::errc{} && res.ptr == raw.data() + raw.size()) return value;
  const auto it = std::find(names.begin(), names.end(), raw);
  if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
  throw DataError(where + ": unrecognised label '" + std::string(raw) + "'");
}

// Resolves single-label names and one-hot encodes the collected indices.
void finalize_single_label(Dataset& ds, const std::vector<std::size_t>& indices,
                           const DatasetOptions& options) {
  std::size_t count = options.label_names.size();
  if (count == 0) {
    const std::size_t max_label =
        indices.empty() ? 1 : *std::max_element(indices.begin(), indices.end());
    count = std::max<std::size_t>(2, max_label + 1);
  }
  ds.task.labels = options.label_names.empty() ? default_label_names(ds.task.kind, count)
                                               : options.label_names;
  if (ds.task.kind == TaskKind::kBinary && ds.task.labels.size() != 2) {
    throw DataError("binary task requires exactly 2 labels");
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= ds.task.labels.size()) {
      throw DataError("record " + std::to_string(i) + ": label " + std::to_string(indices[i]) +
                      " out of range for " + std::to_string(ds.task.labels.size()) + " labels");
    }
    ds.records[i].labels = one_hot(indices[i], ds.task.labels.size());
  }
}

Dataset load_csv(const std::filesystem::path& path, TaskKind task, const DatasetOptions& options) {
  const auto rows = parse_csv(read_file(path));
  if (rows.empty()) throw DataError(path.string() + ": empty file, missing header");
  const auto& header = rows.front();
  for (std::size_t i = 0; i < header.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (header[i] == header[j]) throw DataError("duplicate header column '" + header[i] + "'");
    }
  }
  const auto col = [&](std::string_view name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto text_col = col("text");
  if (!text_col) throw DataError(path.string() + ": missing required column \"text\"");

  Dataset ds;
  ds.task.kind = task;
  std::vector<std::size_t> identity_cols, label_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].starts_with(kIdentityPrefix) && header[i] != kIdentityHateLabel) {
      identity_cols.push_back(i);
      ds.identity_groups.push_back(header[i].substr(kIdentityPrefix.size()));
    } else if (i != *text_col) {
      label_cols.push_back(i);
    }
  }

  std::optional<std::size_t> label_col;
  bool explicit_benign = false;
  if (task == TaskKind::kMultilabel) {
    if (label_cols.empty()) throw DataError(path.string() + ": multilabel data has no label columns");
    explicit_benign = header[label_cols.front()] == "benign";
    if (!explicit_benign) ds.task.labels.push_back("benign");
    for (auto c : label_cols) ds.task.labels.push_back(header[c]);
  } else {
    label_col = col("label");
    if (!label_col) throw DataError(path.string() + ": missing required column \"label\"");
  }

  std::vector<std::size_t> single;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    const auto where = path.string() + ":" + std::to_string(r + 1);
    if (row.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(row.size()));
    }
    Record rec;
    rec.text = row[*text_col];
    for (auto c : identity_cols) rec.identities.push_back(parse_flag(row[c], where + " column \"" + header[c] + "\""));
    if (task == TaskKind::kMultilabel) {
      if (!explicit_benign) rec.labels.push_back(0);
      for (auto c : label_cols) rec.labels.push_back(parse_flag(row[c], where + " column \"" + header[c] + "\""));
      if (!explicit_benign) {
        rec.labels[0] = std::all_of(rec.labels.begin() + 1, rec.labels.end(),
                                    [](std::uint8_t v) { return v == 0; });
      }
    } else {
      single.push_back(parse_single_label(row[*label_col], options.label_names, where));
    }
    ds.records.push_back(std::move(rec));
  }
  if (task != TaskKind::kMultilabel) finalize_single_label(ds, single, options);
  ds.task.validate();
  return ds;
}

Dataset load_jsonl(const std::filesystem::path& path, TaskKind task, const DatasetOptions& options) {
  using ordered = nlohmann::ordered_json;
  std::istringstream in(read_file(path));
  Dataset ds;
  ds.task.kind = task;
  std::vector<std::size_t> single;
  bool first = true;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(lineno);
    ordered obj;
    try {
      obj = ordered::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("text") || !obj["text"].is_string()) {
      throw DataError(where + ": missing required field \"text\"");
    }
    Record rec;
    rec.text = obj["text"].get<std::string>();

    if (obj.contains("identity")) {
      const auto& id = obj["identity"];
      if (first) {
        for (const auto& [k, v] : id.items()) ds.identity_groups.push_back(k);
      }
      for (const auto& g : ds.identity_groups) {
        if (!id.contains(g)) throw DataError(where + ": identity object lacks group \"" + g + "\"");
        rec.identities.push_back(id[g].get<double>() >= 0.5);
      }
    } else if (!ds.identity_groups.empty()) {
      throw DataError(where + ": missing field \"identity\"");
    }

    if (task == TaskKind::kMultilabel) {
      if (!obj.contains("labels") || !obj["labels"].is_object()) {
        throw DataError(where + ": missing field \"labels\"");
      }
      const auto& labels = obj["labels"];
      if (first) {
        std::vector<std::string> names;
        for (const auto& [k, v] : labels.items()) names.push_back(k);
        if (names.empty() || names.front() != "benign") ds.task.labels.push_back("benign");
        ds.task.labels.insert(ds.task.labels.end(), names.begin(), names.end());
      }
      const bool explicit_benign = labels.contains("benign");
      for (std::size_t k = 0; k < ds.task.labels.size(); ++k) {
        const auto& name = ds.task.labels[k];
        if (k == 0 && !explicit_benign) {
          rec.labels.push_back(0);
          continue;
        }
        if (!labels.contains(name)) throw DataError(where + ": labels object lacks \"" + name + "\"");
        rec.labels.push_back(labels[name].get<double>() >= 0.5);
      }
      if (!explicit_benign) {
        rec.labels[0] = std::all_of(rec.labels.begin() + 1, rec.labels.end(),
                                    [](std::uint8_t v) { return v == 0; });
      }
    } else {
      if (!obj.contains("label")) throw DataError(where + ": missing field \"label\"");
      const auto& l = obj["label"];
      single.push_back(l.is_string() ? parse_single_label(l.get<std::string>(), options.label_names, where)
                                     : l.get<std::size_t>());
    }
    ds.records.push_back(std::move(rec));
    first = false;
  }
  if (task != TaskKind::kMultilabel) finalize_single_label(ds, single, options);
  ds.task.validate();
  return ds;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kBinary: return "binary";
    case TaskKind::kMulticlass: return "multiclass";
    case TaskKind::kMultilabel: return "multilabel";
  }
  return "binary";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "binary") return TaskKind::kBinary;
  if (name == "multiclass") return TaskKind::kMulticlass;
  if (name == "multilabel") return TaskKind::kMultilabel;
  throw ConfigError("unknown task '" + std::string(name) + "' (expected binary, multiclass or multilabel)");
}

void TaskSpec::validate() const {
  if (labels.empty()) throw PreconditionError("task has no labels");
  if (kind == TaskKind::kBinary && labels.size() != 2) {
    throw PreconditionError("binary task requires exactly 2 labels");
  }
  if (labels.size() < 2) throw PreconditionError("task requires a benign and at least one toxic label");
}

TaskSpec TaskSpec::binary() { return {TaskKind::kBinary, {"benign", "toxic"}}; }

LabelVector one_hot(std::size_t label, std::size_t num_labels) {
  LabelVector v(num_labels, 0);
  v.at(label) = 1;
  return v;
}

bool is_benign(const LabelVector& labels) {
  if (labels.empty()) return false;
  if (labels[kBenignIndex] != 1) return false;
  return std::all_of(labels.begin() + 1, labels.end(), [](std::uint8_t v) { return v == 0; });
}

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "csv") return DatasetFormat::kCsv;
  if (name == "jsonl") return DatasetFormat::kJsonl;
  throw ConfigError("unknown dataset format '" + std::string(name) + "' (expected csv or jsonl)");
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format, TaskKind task,
                     const DatasetOptions& options) {
  return format == DatasetFormat::kCsv ? load_csv(path, task, options)
                                       : load_jsonl(path, task, options);
}

std::vector<std::vector<std::string>> parse_csv(std::string_view content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        field_started = false;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  if (quoted) throw DataError("unterminated quoted CSV field");
  return rows;
}

}  // namespace toxictrap
