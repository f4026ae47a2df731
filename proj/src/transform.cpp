#include "toxictrap/transform.hpp"

#include <algorithm>
#include <set>

#include "toxictrap/error.hpp"

namespace toxictrap {
namespace {

bool renders_as_single_word(const std::string& s) {
  const auto toks = tokenize(s);
  return toks.size() == 1 && toks[0].text == s && toks[0].attackable;
}

bool all_letters(std::string_view s) {
  if (s.empty()) return false;
  for (char32_t c : utf8_decode(s)) {
    const bool ascii_alpha = (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
    if (!ascii_alpha && c < 0x80) return false;
  }
  return true;
}

// Appends `replacement` unless it is the original or already present.
void push_unique(std::vector<WordEdit>& out, std::set<std::string>& seen, std::size_t index,
                 const std::string& original, std::string replacement, EditOrigin origin) {
  if (replacement == original || !renders_as_single_word(replacement)) return;
  if (!seen.insert(replacement).second) return;
  out.push_back({index, original, std::move(replacement), origin});
}

void word_swaps(const std::vector<std::string>& words, std::size_t index, const std::string& original,
                std::vector<WordEdit>& out, std::set<std::string>& seen) {
  const auto lower = ascii_lower(original);
  for (const auto& w : words) {
    if (ascii_lower(w) == lower) continue;
    push_unique(out, seen, index, original, match_case(w, original), EditOrigin::kWord);
  }
}

void char_edits(const Transformation& t, const CharMaps& maps, std::size_t index, const std::string& original,
                std::vector<WordEdit>& out, std::set<std::string>& seen) {
  const auto cps = utf8_decode(original);
  const std::size_t len = cps.size();
  if (len < kMinCharEditLength) return;
  auto emit = [&](const std::u32string& s) {
    push_unique(out, seen, index, original, utf8_encode(s), EditOrigin::kCharacter);
  };
  switch (t.kind) {
    case TransformKind::kCharInsert:
      for (std::size_t p = 1; p < len; ++p) {
        const auto nb = maps.keyboard_neighbors(cps[p - 1]);
        std::u32string s = cps;
        s.insert(s.begin() + static_cast<std::ptrdiff_t>(p), nb.empty() ? kInsertFallback : nb.front());
        emit(s);
      }
      break;
    case TransformKind::kCharDelete:
      for (std::size_t p = 0; p < len; ++p) {
        std::u32string s = cps;
        s.erase(p, 1);
        emit(s);
      }
      break;
    case TransformKind::kCharNeighborSwap:
      for (std::size_t p = 0; p + 1 < len; ++p) {
        if (cps[p] == cps[p + 1]) continue;
        std::u32string s = cps;
        std::swap(s[p], s[p + 1]);
        emit(s);
      }
      break;
    case TransformKind::kCharHomoglyph:
      for (std::size_t p = 0; p < len; ++p) {
        auto variants = maps.homoglyph_variants(cps[p]);
        if (t.keyboard) {
          const auto nb = maps.keyboard_neighbors(cps[p]);
          variants.insert(variants.end(), nb.begin(), nb.end());
        }
        for (char32_t v : variants) {
          std::u32string s = cps;
          s[p] = v;
          emit(s);
        }
      }
      break;
    default:
      break;
  }
}

void generate(const Transformation& t, const AttackedText& text, std::size_t index, const TransformContext& ctx,
              std::vector<WordEdit>& out, std::set<std::string>& seen) {
  const auto& original = text.word(index);
  const Resources& res = *ctx.resources;
  switch (t.kind) {
    case TransformKind::kEmbKnn:
      if (res.embeddings.empty()) return;
      word_swaps(res.embeddings.nearest_neighbors(ascii_lower(original), t.n), index, original, out, seen);
      return;
    case TransformKind::kLexicon:
      word_swaps(res.synonyms.synonyms(original), index, original, out, seen);
      return;
    case TransformKind::kMlm: {
      if (!ctx.mlm) throw UnsupportedCapability("MLM transformation needs a remote masked language model");
      const auto masked = text.text_with_replacement(index, kMaskToken);
      std::vector<std::string> words;
      for (auto& w : ctx.mlm->fill_mask(masked, index, t.n)) {
        if (all_letters(w)) words.push_back(std::move(w));
      }
      word_swaps(words, index, original, out, seen);
      return;
    }
    case TransformKind::kComposite:
      for (const auto& m : t.members) generate(m, text, index, ctx, out, seen);
      return;
    default:
      char_edits(t, res.chars, index, original, out, seen);
      return;
  }
}

}  // namespace

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::kEmbKnn: return "emb_knn";
    case TransformKind::kLexicon: return "lexicon";
    case TransformKind::kMlm: return "mlm";
    case TransformKind::kCharInsert: return "char_insert";
    case TransformKind::kCharDelete: return "char_delete";
    case TransformKind::kCharNeighborSwap: return "char_neighbor_swap";
    case TransformKind::kCharHomoglyph: return "char_homoglyph";
    case TransformKind::kComposite: return "composite";
  }
  return "?";
}

TransformKind parse_transform_kind(std::string_view name) {
  for (auto k : {TransformKind::kEmbKnn, TransformKind::kLexicon, TransformKind::kMlm, TransformKind::kCharInsert,
                 TransformKind::kCharDelete, TransformKind::kCharNeighborSwap, TransformKind::kCharHomoglyph,
                 TransformKind::kComposite}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown transformation kind '" + std::string(name) + "'");
}

Transformation Transformation::emb_knn(std::size_t n) { return {TransformKind::kEmbKnn, n, false, {}}; }
Transformation Transformation::lexicon() { return {TransformKind::kLexicon, 0, false, {}}; }
Transformation Transformation::mlm(std::size_t top_k) { return {TransformKind::kMlm, top_k, false, {}}; }
Transformation Transformation::char_insert() { return {TransformKind::kCharInsert, 0, false, {}}; }
Transformation Transformation::char_delete() { return {TransformKind::kCharDelete, 0, false, {}}; }
Transformation Transformation::char_neighbor_swap() { return {TransformKind::kCharNeighborSwap, 0, false, {}}; }
Transformation Transformation::char_homoglyph(bool keyboard) {
  return {TransformKind::kCharHomoglyph, 0, keyboard, {}};
}
Transformation Transformation::composite(std::vector<Transformation> members) {
  return {TransformKind::kComposite, 0, false, std::move(members)};
}

void Transformation::validate() const {
  if ((kind == TransformKind::kEmbKnn || kind == TransformKind::kMlm) && n == 0) {
    throw ConfigError(std::string(to_string(kind)) + " needs n >= 1");
  }
  if (keyboard && kind != TransformKind::kCharHomoglyph) {
    throw ConfigError("the keyboard option only applies to char_homoglyph");
  }
  if (kind != TransformKind::kComposite) {
    if (!members.empty()) throw ConfigError("only composite transformations have members");
    return;
  }
  std::set<TransformKind> kinds;
  for (const auto& m : members) {
    if (m.kind == TransformKind::kComposite) throw ConfigError("composite transformations cannot be nested");
    m.validate();
    kinds.insert(m.kind);
  }
  if (kinds.size() < 2) throw ConfigError("composite needs at least two distinct member kinds");
}

bool Transformation::produces_character_edits() const {
  switch (kind) {
    case TransformKind::kCharInsert:
    case TransformKind::kCharDelete:
    case TransformKind::kCharNeighborSwap:
    case TransformKind::kCharHomoglyph:
      return true;
    case TransformKind::kComposite:
      return std::any_of(members.begin(), members.end(), [](const auto& m) { return m.produces_character_edits(); });
    default:
      return false;
  }
}

bool Transformation::produces_word_edits() const {
  switch (kind) {
    case TransformKind::kEmbKnn:
    case TransformKind::kLexicon:
    case TransformKind::kMlm:
      return true;
    case TransformKind::kComposite:
      return std::any_of(members.begin(), members.end(), [](const auto& m) { return m.produces_word_edits(); });
    default:
      return false;
  }
}

bool Transformation::needs_mlm() const {
  if (kind == TransformKind::kMlm) return true;
  return std::any_of(members.begin(), members.end(), [](const auto& m) { return m.needs_mlm(); });
}

std::string describe(const Transformation& t) {
  std::string s(to_string(t.kind));
  if (t.kind == TransformKind::kEmbKnn || t.kind == TransformKind::kMlm) s += "(" + std::to_string(t.n) + ")";
  if (t.keyboard) s += "(keyboard)";
  if (t.kind == TransformKind::kComposite) {
    s += "(";
    for (std::size_t i = 0; i < t.members.size(); ++i) s += (i ? ", " : "") + describe(t.members[i]);
    s += ")";
  }
  return s;
}

std::vector<WordEdit> candidates(const Transformation& t, const AttackedText& text, std::size_t index,
                                 const TransformContext& ctx) {
  if (!ctx.resources) throw PreconditionError("transformation context has no resources");
  if (index >= text.size()) throw PreconditionError("word index out of range");
  std::vector<WordEdit> out;
  if (!text.attackable(index) || ctx.resources->stopwords.contains(text.word(index))) return out;
  std::set<std::string> seen;
  generate(t, text, index, ctx, out, seen);
  return out;
}

std::map<std::size_t, std::vector<WordEdit>> all_position_candidates(const Transformation& t,
                                                                     const AttackedText& text,
                                                                     const TransformContext& ctx) {
  std::map<std::size_t, std::vector<WordEdit>> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto c = candidates(t, text, i, ctx);
    if (!c.empty()) out.emplace(i, std::move(c));
  }
  return out;
}

}  // namespace toxictrap
