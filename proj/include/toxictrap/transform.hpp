#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "toxictrap/encoder.hpp"
#include "toxictrap/resources.hpp"
#include "toxictrap/text.hpp"

namespace toxictrap {

enum class TransformKind {
  kEmbKnn,
  kLexicon,
  kMlm,
  kCharInsert,
  kCharDelete,
  kCharNeighborSwap,
  kCharHomoglyph,
  kComposite,
};

std::string_view to_string(TransformKind kind);
TransformKind parse_transform_kind(std::string_view name);

inline constexpr std::size_t kMlmTopK = 20;
inline constexpr std::size_t kMinCharEditLength = 3;  // shorter words get no character edits
inline constexpr char32_t kInsertFallback = U'\'';

struct Transformation {
  TransformKind kind = TransformKind::kEmbKnn;
  std::size_t n = 0;      // EMB_KNN neighbours, MLM top_k
  bool keyboard = false;  // CHAR_HOMOGLYPH: also substitute keyboard neighbours
  std::vector<Transformation> members;  // COMPOSITE only

  static Transformation emb_knn(std::size_t n);
  static Transformation lexicon();
  static Transformation mlm(std::size_t top_k = kMlmTopK);
  static Transformation char_insert();
  static Transformation char_delete();
  static Transformation char_neighbor_swap();
  static Transformation char_homoglyph(bool keyboard = false);
  static Transformation composite(std::vector<Transformation> members);

  // Throws ConfigError: n == 0 for EMB_KNN/MLM, composite with fewer than
  // two distinct member kinds, nested composites.
  void validate() const;

  bool produces_character_edits() const;
  bool produces_word_edits() const;
  bool needs_mlm() const;

  bool operator==(const Transformation&) const = default;
};

std::string describe(const Transformation& t);

struct TransformContext {
  const Resources* resources = nullptr;
  const MaskedLanguageModel* mlm = nullptr;
};

// Deterministic candidate edits for word `index`. Stopwords and tokens
// without letters yield nothing; no candidate equals the original word and
// every candidate renders as exactly one token.
std::vector<WordEdit> candidates(const Transformation& t, const AttackedText& text, std::size_t index,
                                 const TransformContext& ctx);

// candidates() at every position, omitting empty lists.
std::map<std::size_t, std::vector<WordEdit>> all_position_candidates(const Transformation& t,
                                                                     const AttackedText& text,
                                                                     const TransformContext& ctx);

}  // namespace toxictrap
