#include "support.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace testing_support {

using namespace toxictrap;

bool update_golden() {
  const char* v = std::getenv("TOXICTRAP_UPDATE_GOLDEN");
  return v && std::string(v) == "1";
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

TempDir::TempDir() {
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  for (;;) {
    path_ = base / ("toxictrap-test-" + std::to_string(rd()));
    if (std::filesystem::create_directory(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

Resources tiny_resources() {
  Resources r;
  r.embeddings = EmbeddingStore::load(fixture("tiny_embeddings.txt"));
  r.pos = PosDictionary::load(fixture("pos.tsv"));
  r.synonyms = SynonymLexicon::load(fixture("synonyms.tsv"));
  r.chars = CharMaps::load(fixture("homoglyphs.tsv"), fixture("keyboard.tsv"));
  return r;
}

const Resources& shipped_resources() {
  static const Resources r = Resources::load_directory(TOXICTRAP_DATA_DIR);
  return r;
}

VictimOutput FnVictim::predict(std::span<const std::string> texts) const {
  VictimOutput out;
  for (const auto& t : texts) {
    out.probs.push_back(fn_(t));
    std::lock_guard lock(mu_);
    log_.push_back(t);
  }
  return out;
}

std::size_t FnVictim::calls() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

std::vector<std::string> FnVictim::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

TaskSpec multiclass3() { return {TaskKind::kMulticlass, {"benign", "offensive", "hate"}}; }

TaskSpec multilabel(std::size_t toxic_labels) {
  TaskSpec t{TaskKind::kMultilabel, {"benign"}};
  for (std::size_t i = 0; i < toxic_labels; ++i) t.labels.push_back("toxic_" + std::to_string(i + 1));
  return t;
}

std::shared_ptr<FnVictim> flip_on_edit(const std::string& seed) {
  return std::make_shared<FnVictim>(TaskSpec::binary(), [seed](const std::string& t) {
    return t == seed ? ProbRow{0.1, 0.9} : ProbRow{0.9, 0.1};
  });
}

std::shared_ptr<FnVictim> never_flips() {
  return std::make_shared<FnVictim>(TaskSpec::binary(), [](const std::string&) { return ProbRow{0.2, 0.8}; });
}

double word_weight_benign(const std::map<std::string, double>& weights, double bias, const std::string& text) {
  double z = bias;
  for (const auto& t : tokenize(text)) {
    const auto it = weights.find(t.text);
    if (it != weights.end()) z += it->second;
  }
  return 1.0 - 1.0 / (1.0 + std::exp(-z));
}

std::shared_ptr<FnVictim> word_weight_victim(std::map<std::string, double> weights, double bias) {
  return std::make_shared<FnVictim>(TaskSpec::binary(), [weights = std::move(weights), bias](const std::string& t) {
    const double benign = word_weight_benign(weights, bias, t);
    return ProbRow{benign, 1.0 - benign};
  });
}

}  // namespace testing_support
