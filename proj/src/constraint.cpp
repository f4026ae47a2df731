#include "toxictrap/constraint.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "toxictrap/error.hpp"

namespace toxictrap {
namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

bool zero_vector(const SentenceVector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

Verdict sentence_similarity(const Constraint& c, const AttackedText& seed, const AttackedText& candidate,
                            const ConstraintContext& ctx) {
  if (!ctx.encoder) throw PreconditionError(describe(c) + " needs a sentence encoder");
  const std::array<std::string, 2> texts{seed.text(), candidate.text()};
  const auto vecs = ctx.encoder->encode(texts);
  if (vecs.size() != 2) throw PreconditionError("sentence encoder returned the wrong number of vectors");
  if (!vecs[0] || !vecs[1] || zero_vector(*vecs[0]) || zero_vector(*vecs[1])) {
    return Verdict::fail(describe(c) + ": no sentence representation");
  }
  if (vecs[0]->size() != vecs[1]->size()) {
    return Verdict::fail(describe(c) + ": sentence vectors differ in dimension");
  }
  if (texts[0] == texts[1]) return Verdict::ok();
  const std::span<const double> u(*vecs[0]), v(*vecs[1]);
  const double sim = c.kind == ConstraintKind::kSentAngular ? angular_similarity(u, v) : cosine_similarity(u, v);
  if (sim >= c.threshold) return Verdict::ok();
  return Verdict::fail(describe(c) + ": similarity " + fmt_num(sim));
}

}  // namespace

std::string_view to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::kMaxRatio: return "max_ratio";
    case ConstraintKind::kSentAngular: return "sent_angular";
    case ConstraintKind::kSentCosine: return "sent_cosine";
    case ConstraintKind::kPosMatch: return "pos_match";
    case ConstraintKind::kWordCos: return "word_cos";
    case ConstraintKind::kEditDistance: return "edit_distance";
    case ConstraintKind::kNoStopwordSwap: return "no_stopword_swap";
  }
  return "?";
}

ConstraintKind parse_constraint_kind(std::string_view name) {
  for (auto k : {ConstraintKind::kMaxRatio, ConstraintKind::kSentAngular, ConstraintKind::kSentCosine,
                 ConstraintKind::kPosMatch, ConstraintKind::kWordCos, ConstraintKind::kEditDistance,
                 ConstraintKind::kNoStopwordSwap}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown constraint kind '" + std::string(name) + "'");
}

bool Constraint::has_threshold() const {
  return kind != ConstraintKind::kPosMatch && kind != ConstraintKind::kNoStopwordSwap;
}

void Constraint::validate() const {
  const auto bad = [&](const char* range) {
    return ConfigError(std::string(to_string(kind)) + " threshold " + fmt_num(threshold) + " outside " + range);
  };
  switch (kind) {
    case ConstraintKind::kMaxRatio:
      if (!(threshold > 0.0 && threshold <= 1.0)) throw bad("(0, 1]");
      break;
    case ConstraintKind::kSentAngular:
      if (!(threshold >= 0.0 && threshold <= 1.0)) throw bad("[0, 1]");
      break;
    case ConstraintKind::kSentCosine:
    case ConstraintKind::kWordCos:
      if (!(threshold >= -1.0 && threshold <= 1.0)) throw bad("[-1, 1]");
      break;
    case ConstraintKind::kEditDistance:
      if (!(threshold >= 1.0) || threshold != std::floor(threshold)) throw bad("positive integers");
      break;
    case ConstraintKind::kPosMatch:
    case ConstraintKind::kNoStopwordSwap:
      if (threshold != 0.0) throw ConfigError(std::string(to_string(kind)) + " takes no threshold");
      break;
  }
}

std::string describe(const Constraint& c) {
  std::string s(to_string(c.kind));
  if (c.has_threshold()) s += "(" + fmt_num(c.threshold) + ")";
  return s;
}

int cost_rank(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::kMaxRatio: return 0;
    case ConstraintKind::kNoStopwordSwap: return 1;
    case ConstraintKind::kPosMatch: return 2;
    case ConstraintKind::kWordCos: return 3;
    case ConstraintKind::kEditDistance: return 4;
    case ConstraintKind::kSentAngular:
    case ConstraintKind::kSentCosine: return 5;
  }
  return 6;
}

void sort_by_cost(std::vector<Constraint>& constraints) {
  std::stable_sort(constraints.begin(), constraints.end(),
                   [](const Constraint& a, const Constraint& b) { return cost_rank(a.kind) < cost_rank(b.kind); });
}

std::size_t ratio_cap(double r, std::size_t seed_words) {
  const auto f = static_cast<std::size_t>(std::floor(r * static_cast<double>(seed_words)));
  return std::max<std::size_t>(1, f);
}

Verdict admissible(const Constraint& c, const AttackedText& seed, const AttackedText& candidate,
                   const WordEdit& last_edit, const ConstraintContext& ctx) {
  if (!ctx.resources) throw PreconditionError("constraint context has no resources");
  const Resources& res = *ctx.resources;
  switch (c.kind) {
    case ConstraintKind::kMaxRatio: {
      const auto cap = ratio_cap(c.threshold, seed.size());
      const auto n = candidate.modified_indices().size();
      if (n <= cap) return Verdict::ok();
      return Verdict::fail(describe(c) + ": " + std::to_string(n) + " words modified, cap " + std::to_string(cap));
    }
    case ConstraintKind::kNoStopwordSwap:
      if (!res.stopwords.contains(last_edit.original)) return Verdict::ok();
      return Verdict::fail(describe(c) + ": '" + last_edit.original + "' is a stopword");
    case ConstraintKind::kPosMatch: {
      if (last_edit.origin == EditOrigin::kCharacter) return Verdict::ok();
      const auto a = res.pos.tag(last_edit.original), b = res.pos.tag(last_edit.replacement);
      if (a == b) return Verdict::ok();
      return Verdict::fail(describe(c) + ": " + std::string(to_string(a)) + " -> " + std::string(to_string(b)));
    }
    case ConstraintKind::kWordCos: {
      const auto u = res.embeddings.vector(last_edit.original);
      const auto v = res.embeddings.vector(last_edit.replacement);
      if (!u || !v) return Verdict::fail(describe(c) + ": out-of-vocabulary word");
      const double sim = cosine_similarity(*u, *v);
      if (sim > c.threshold) return Verdict::ok();
      return Verdict::fail(describe(c) + ": cosine " + fmt_num(sim));
    }
    case ConstraintKind::kEditDistance: {
      const auto d = levenshtein(seed.text(), candidate.text());
      if (static_cast<double>(d) < c.threshold) return Verdict::ok();
      return Verdict::fail(describe(c) + ": distance " + std::to_string(d));
    }
    case ConstraintKind::kSentAngular:
    case ConstraintKind::kSentCosine:
      return sentence_similarity(c, seed, candidate, ctx);
  }
  return Verdict::fail("unknown constraint");
}

Verdict check_all(std::span<const Constraint> constraints, const AttackedText& seed,
                  const AttackedText& candidate, const WordEdit& last_edit, const ConstraintContext& ctx) {
  for (const auto& c : constraints) {
    auto v = admissible(c, seed, candidate, last_edit, ctx);
    if (!v.pass) return v;
  }
  return Verdict::ok();
}

}  // namespace toxictrap
