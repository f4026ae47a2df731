#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxictrap/encoder.hpp"
#include "toxictrap/resources.hpp"
#include "toxictrap/text.hpp"

namespace toxictrap {

enum class ConstraintKind {
  kMaxRatio,
  kSentAngular,
  kSentCosine,
  kPosMatch,
  kWordCos,
  kEditDistance,
  kNoStopwordSwap,
};

std::string_view to_string(ConstraintKind kind);
ConstraintKind parse_constraint_kind(std::string_view name);

struct Constraint {
  ConstraintKind kind = ConstraintKind::kNoStopwordSwap;
  double threshold = 0;  // ratio, similarity floor or edit-distance bound

  static Constraint max_ratio(double r) { return {ConstraintKind::kMaxRatio, r}; }
  static Constraint sent_angular(double t) { return {ConstraintKind::kSentAngular, t}; }
  static Constraint sent_cosine(double t) { return {ConstraintKind::kSentCosine, t}; }
  static Constraint pos_match() { return {ConstraintKind::kPosMatch, 0}; }
  static Constraint word_cos(double t) { return {ConstraintKind::kWordCos, t}; }
  static Constraint edit_distance(std::size_t max) {
    return {ConstraintKind::kEditDistance, static_cast<double>(max)};
  }
  static Constraint no_stopword_swap() { return {ConstraintKind::kNoStopwordSwap, 0}; }

  bool has_threshold() const;
  // Throws ConfigError when the threshold is outside its metric's range.
  void validate() const;

  bool operator==(const Constraint&) const = default;
};

std::string describe(const Constraint& c);

// Position of a kind in the cheap-to-expensive evaluation order.
int cost_rank(ConstraintKind kind);
void sort_by_cost(std::vector<Constraint>& constraints);

// max(1, floor(r * n)): short texts keep one editable word.
std::size_t ratio_cap(double r, std::size_t seed_words);

struct Verdict {
  bool pass = true;
  std::string reason;  // set on failure

  static Verdict ok() { return {}; }
  static Verdict fail(std::string why) { return {false, std::move(why)}; }
};

struct ConstraintContext {
  const Resources* resources = nullptr;
  const SentenceEncoder* encoder = nullptr;  // required by SENT_* only
};

// Character edits bypass POS_MATCH (their output is out of vocabulary).
// Similarity checks fail closed when the encoder has no representation.
// Encoder transport errors propagate as exceptions.
Verdict admissible(const Constraint& c, const AttackedText& seed, const AttackedText& candidate,
                   const WordEdit& last_edit, const ConstraintContext& ctx);

// In listed order; the first failure wins.
Verdict check_all(std::span<const Constraint> constraints, const AttackedText& seed,
                  const AttackedText& candidate, const WordEdit& last_edit, const ConstraintContext& ctx);

}  // namespace toxictrap
