#include "toxictrap/text.hpp"

#include <algorithm>
#include <numeric>

#include "toxictrap/error.hpp"

namespace toxictrap {
namespace {

struct CodePoint {
  char32_t value;
  std::size_t offset;
  std::size_t length;
};

std::vector<CodePoint> decode_with_offsets(std::string_view text) {
  std::vector<CodePoint> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    char32_t cp = 0xFFFD;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
    }
    if (len > 1) {
      if (i + len > text.size()) {
        len = 1;
      } else {
        cp = b0 & (0xFF >> (len + 1));
        for (std::size_t k = 1; k < len; ++k) {
          const auto b = static_cast<unsigned char>(text[i + k]);
          if ((b & 0xC0) != 0x80) {
            cp = 0xFFFD;
            len = 1;
            break;
          }
          cp = (cp << 6) | (b & 0x3F);
        }
      }
    } else if (b0 >= 0x80) {
      cp = 0xFFFD;
    }
    out.push_back({cp, i, len});
    i += len;
  }
  return out;
}

bool is_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_ascii_punct(char32_t c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
         (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
}

bool is_letter(char32_t c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= 0x80 && c != 0xFFFD);
}

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }

}  // namespace

std::u32string utf8_decode(std::string_view text) {
  std::u32string out;
  for (const auto& cp : decode_with_offsets(text)) out.push_back(cp.value);
  return out;
}

std::string utf8_encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

std::string utf8_encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) out += utf8_encode(c);
  return out;
}

std::size_t utf8_length(std::string_view text) { return decode_with_offsets(text).size(); }

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (is_upper(c)) c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string match_case(std::string_view replacement, std::string_view original) {
  const auto letters = std::count_if(original.begin(), original.end(),
                                     [](char c) { return is_upper(c) || is_lower(c); });
  const auto uppers = std::count_if(original.begin(), original.end(), is_upper);
  std::string out(replacement);
  if (letters == 0) return out;
  if (uppers == letters && letters > 1) {
    for (auto& c : out) {
      if (is_lower(c)) c = static_cast<char>(c - 'a' + 'A');
    }
    return out;
  }
  const auto first = std::find_if(original.begin(), original.end(),
                                  [](char c) { return is_upper(c) || is_lower(c); });
  if (uppers == 1 && is_upper(*first)) {
    auto it = std::find_if(out.begin(), out.end(), [](char c) { return is_lower(c) || is_upper(c); });
    if (it != out.end() && is_lower(*it)) *it = static_cast<char>(*it - 'a' + 'A');
    return out;
  }
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  const auto cps = decode_with_offsets(text);
  std::vector<Token> tokens;
  auto emit = [&](std::size_t from, std::size_t to, bool attackable) {
    const std::size_t begin = cps[from].offset;
    const std::size_t end = cps[to - 1].offset + cps[to - 1].length;
    tokens.push_back({std::string(text.substr(begin, end - begin)), begin, attackable});
  };
  // Splits one whitespace-free segment into [lead punct] word [trail punct].
  auto emit_segment = [&](std::size_t from, std::size_t to) {
    if (from == to) return;
    std::size_t lead = from;
    while (lead < to && is_ascii_punct(cps[lead].value)) ++lead;
    if (lead == to) {
      emit(from, to, false);
      return;
    }
    std::size_t trail = to;
    while (trail > lead && is_ascii_punct(cps[trail - 1].value)) --trail;
    if (lead > from) emit(from, lead, false);
    bool letters = false;
    for (std::size_t k = lead; k < trail; ++k) letters = letters || is_letter(cps[k].value);
    emit(lead, trail, letters);
    if (trail < to) emit(trail, to, false);
  };
  auto unk_at = [&](std::size_t k, std::size_t end) {
    if (k + kUnkToken.size() > end) return false;
    for (std::size_t j = 0; j < kUnkToken.size(); ++j) {
      if (cps[k + j].value != static_cast<char32_t>(kUnkToken[j])) return false;
    }
    return true;
  };

  std::size_t i = 0;
  while (i < cps.size()) {
    if (is_space(cps[i].value)) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < cps.size() && !is_space(cps[end].value)) ++end;
    // The placeholder token is kept whole even when glued to punctuation.
    std::size_t seg = i;
    for (std::size_t k = i; k < end;) {
      if (unk_at(k, end)) {
        emit_segment(seg, k);
        emit(k, k + kUnkToken.size(), false);
        k += kUnkToken.size();
        seg = k;
      } else {
        ++k;
      }
    }
    emit_segment(seg, end);
    i = end;
  }
  return tokens;
}

AttackedText::AttackedText(std::string text) : original_(std::move(text)) {
  const auto tokens = tokenize(original_);
  std::size_t cursor = 0;
  for (const auto& tok : tokens) {
    gaps_.push_back(original_.substr(cursor, tok.offset - cursor));
    words_.push_back(tok.text);
    attackable_.push_back(tok.attackable);
    cursor = tok.offset + tok.text.size();
  }
  gaps_.push_back(original_.substr(cursor));
  seed_word_count_ = words_.size();
}

std::string AttackedText::text() const {
  std::string out = gaps_.front();
  for (std::size_t i = 0; i < words_.size(); ++i) {
    out += words_[i];
    out += gaps_[i + 1];
  }
  return out;
}

AttackedText AttackedText::apply(const WordEdit& edit) const {
  if (edit.index >= words_.size()) {
    throw PreconditionError("edit index " + std::to_string(edit.index) +
                            " out of range for text of " + std::to_string(words_.size()) +
                            " words");
  }
  if (words_[edit.index] != edit.original) {
    throw PreconditionError("edit original '" + edit.original + "' does not match word '" +
                            words_[edit.index] + "' at index " + std::to_string(edit.index));
  }
  if (edit.replacement == edit.original) {
    throw PreconditionError("edit replacement equals the original word");
  }

  AttackedText next = *this;
  next.words_[edit.index] = edit.replacement;
  const auto retokenized = tokenize(next.text());
  bool same = retokenized.size() == next.words_.size();
  for (std::size_t i = 0; same && i < retokenized.size(); ++i) {
    same = retokenized[i].text == next.words_[i];
  }
  if (!same) {
    throw PreconditionError("replacement '" + edit.replacement +
                            "' does not render as a single word token");
  }
  next.attackable_[edit.index] = retokenized[edit.index].attackable;
  next.modified_.insert(edit.index);
  next.edits_.push_back(edit);
  return next;
}

std::string AttackedText::text_with_replacement(std::size_t i, std::string_view word) const {
  std::string out = gaps_.front();
  for (std::size_t k = 0; k < words_.size(); ++k) {
    out += (k == i) ? std::string(word) : words_[k];
    out += gaps_[k + 1];
  }
  return out;
}

std::string AttackedText::text_without(std::size_t i) const {
  if (i >= words_.size()) return text();
  // The separators around the removed word collapse into one. At the
  // edges the outer separator wins; inside, the non-empty one (left first).
  const auto& left = gaps_[i];
  const auto& right = gaps_[i + 1];
  std::string merged;
  if (i == 0) {
    merged = left;
  } else if (i + 1 == words_.size()) {
    merged = right;
  } else {
    merged = left.empty() ? right : left;
  }
  std::string out;
  for (std::size_t k = 0; k < words_.size(); ++k) {
    if (k == i) continue;
    out += (k == i + 1) ? merged : gaps_[k];
    out += words_[k];
  }
  out += (i + 1 == words_.size()) ? merged : gaps_.back();
  return out;
}

double perturbed_ratio(const AttackedText& text) {
  if (text.seed_word_count() == 0) {
    throw PreconditionError("perturbed_ratio of an empty text");
  }
  return static_cast<double>(text.modified_indices().size()) /
         static_cast<double>(text.seed_word_count());
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const auto s = utf8_decode(a);
  const auto t = utf8_decode(b);
  if (s.empty()) return t.size();
  if (t.empty()) return s.size();
  std::vector<std::size_t> prev(t.size() + 1), cur(t.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= s.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[t.size()];
}

}  // namespace toxictrap
