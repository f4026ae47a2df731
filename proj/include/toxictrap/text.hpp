#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace toxictrap {

// UTF-8 helpers. Invalid byte sequences decode to U+FFFD.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);
std::string utf8_encode(char32_t cp);
std::size_t utf8_length(std::string_view text);

// ASCII-only case folding; non-ASCII bytes pass through.
std::string ascii_lower(std::string_view text);

// Copies the capitalization pattern of `original` (ALL CAPS, Title, lower)
// onto `replacement`. Mixed patterns leave the replacement untouched.
std::string match_case(std::string_view replacement, std::string_view original);

// Placeholder substituted for a word when measuring its importance.
inline constexpr std::string_view kUnkToken = "[UNK]";

struct Token {
  std::string text;
  std::size_t offset = 0;   // byte offset into the source text
  bool attackable = false;  // contains at least one letter
};

// Splits on Unicode whitespace, then peels leading/trailing ASCII
// punctuation into separate non-attackable tokens. Interior apostrophes
// stay inside the word ("don't"). kUnkToken is always a single token.
std::vector<Token> tokenize(std::string_view text);

enum class EditOrigin { kWord, kCharacter };

struct WordEdit {
  std::size_t index = 0;
  std::string original;
  std::string replacement;
  EditOrigin origin = EditOrigin::kWord;

  bool operator==(const WordEdit&) const = default;
};

// Tokenized text plus its edit history. Immutable: apply() returns a new
// value and leaves the receiver untouched.
class AttackedText {
 public:
  AttackedText() : AttackedText(std::string{}) {}
  explicit AttackedText(std::string text);

  const std::string& original_text() const noexcept { return original_; }
  const std::vector<std::string>& words() const noexcept { return words_; }
  std::size_t size() const noexcept { return words_.size(); }
  const std::string& word(std::size_t i) const { return words_.at(i); }
  bool attackable(std::size_t i) const { return attackable_.at(i); }

  const std::set<std::size_t>& modified_indices() const noexcept { return modified_; }
  const std::vector<WordEdit>& edits() const noexcept { return edits_; }
  std::size_t generation() const noexcept { return edits_.size(); }
  std::size_t seed_word_count() const noexcept { return seed_word_count_; }

  // Current text, rendered with the original inter-token spacing.
  std::string text() const;

  AttackedText apply(const WordEdit& edit) const;

  // Renderings used by word-importance ranking; they do not create history.
  std::string text_with_replacement(std::size_t i, std::string_view word) const;
  std::string text_without(std::size_t i) const;

  bool operator==(const AttackedText& other) const {
    return original_ == other.original_ && words_ == other.words_ &&
           gaps_ == other.gaps_ && edits_ == other.edits_;
  }

 private:
  std::string original_;
  std::vector<std::string> words_;
  std::vector<std::string> gaps_;  // words_.size() + 1 separators
  std::vector<bool> attackable_;
  std::set<std::size_t> modified_;
  std::vector<WordEdit> edits_;
  std::size_t seed_word_count_ = 0;
};

// |modified indices| / |seed words|. Throws PreconditionError on empty text.
double perturbed_ratio(const AttackedText& text);

// Code-point Levenshtein distance.
std::size_t levenshtein(std::string_view a, std::string_view b);

}  // namespace toxictrap
