#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "toxictrap/error.hpp"

namespace toxictrap {

template <typename T>
double cosine_similarity(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) throw PreconditionError("cosine_similarity: dimension mismatch");
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * static_cast<double>(v[i]);
    nu += static_cast<double>(u[i]) * static_cast<double>(u[i]);
    nv += static_cast<double>(v[i]) * static_cast<double>(v[i]);
  }
  if (nu == 0.0 || nv == 0.0) throw PreconditionError("cosine_similarity: zero vector");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

// 1 - arccos(clamp(cos, -1, 1)) / pi
template <typename T>
double angular_similarity(std::span<const T> u, std::span<const T> v) {
  const double c = std::clamp(cosine_similarity(u, v), -1.0, 1.0);
  return 1.0 - std::acos(c) / M_PI;
}

// Word vectors in the textual "word v1 ... vd" format. Lookup keys are
// lower-cased; the first record for a word wins.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;

  static EmbeddingStore load(const std::filesystem::path& path);
  static EmbeddingStore from_entries(
      const std::vector<std::pair<std::string, std::vector<float>>>& entries);

  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }
  std::optional<std::size_t> dimension() const {
    return empty() ? std::nullopt : std::optional<std::size_t>(dim_);
  }
  const std::vector<std::string>& vocabulary() const noexcept { return words_; }
  std::span<const float> matrix() const noexcept { return data_; }
  std::span<const double> norms() const noexcept { return norms_; }

  bool contains(std::string_view word) const;
  std::optional<std::span<const float>> vector(std::string_view word) const;

  // Up to n words by descending cosine, excluding the query itself; ties
  // broken by ascending word. Unknown word -> empty. Empty store -> throws.
  std::vector<std::string> nearest_neighbors(std::string_view word, std::size_t n) const;

  // Lines skipped during load (non-numeric fields, zero vectors, duplicates).
  const std::vector<std::string>& load_warnings() const noexcept { return warnings_; }

 private:
  void add(std::string word, std::span<const float> values);

  std::vector<std::string> words_;
  std::vector<float> data_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t dim_ = 0;
  std::vector<std::string> warnings_;
};

class SynonymLexicon {
 public:
  SynonymLexicon() = default;
  static SynonymLexicon load(const std::filesystem::path& path);
  void add(std::string_view word, const std::vector<std::string>& synonyms);

  // Case-insensitive; unknown word -> empty.
  std::vector<std::string> synonyms(std::string_view word) const;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::unordered_map<std::string, std::vector<std::string>> entries_;
};

enum class PosTag { kNoun, kVerb, kAdj, kAdv, kPron, kOther };
std::string_view to_string(PosTag tag);
PosTag parse_pos_tag(std::string_view name);

// Flat word -> tag dictionary; the first tag listed for a word wins.
class PosDictionary {
 public:
  PosDictionary() = default;
  static PosDictionary load(const std::filesystem::path& path);
  void add(std::string_view word, PosTag tag);
  PosTag tag(std::string_view word) const;

 private:
  std::unordered_map<std::string, PosTag> tags_;
};

class StopwordList {
 public:
  StopwordList() = default;
  static StopwordList load(const std::filesystem::path& path);
  static StopwordList english();
  bool contains(std::string_view word) const;
  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

// Character -> variants maps for homoglyph and keyboard-typo edits.
struct Resources;

class CharMaps {
 public:
  CharMaps() = default;
  static CharMaps load(const std::filesystem::path& homoglyphs,
                       const std::filesystem::path& keyboard);
  static std::map<char32_t, std::vector<char32_t>> load_map(const std::filesystem::path& path);

  void add_homoglyphs(char32_t c, std::u32string_view variants);
  void add_keyboard(char32_t c, std::u32string_view neighbors);

  std::vector<char32_t> homoglyph_variants(char32_t c) const;
  std::vector<char32_t> keyboard_neighbors(char32_t c) const;

 private:
  friend struct Resources;
  std::map<char32_t, std::vector<char32_t>> homoglyphs_;
  std::map<char32_t, std::vector<char32_t>> keyboard_;
};

// All linguistic assets an attack needs. Immutable after load.
struct Resources {
  EmbeddingStore embeddings;
  SynonymLexicon synonyms;
  PosDictionary pos;
  StopwordList stopwords = StopwordList::english();
  CharMaps chars;

  // Reads embeddings.txt, synonyms.tsv, pos.tsv, stopwords.txt,
  // homoglyphs.tsv and keyboard.tsv from `dir`; missing files leave the
  // corresponding asset empty (stopwords fall back to the built-in list).
  static Resources load_directory(const std::filesystem::path& dir);
};

}  // namespace toxictrap
