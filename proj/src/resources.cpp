#include "toxictrap/resources.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "toxictrap/kernels.hpp"
#include "toxictrap/text.hpp"

namespace toxictrap {
namespace {

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  return in;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_float(std::string_view s, float& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(out);
}

bool is_integer(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

// ---------------------------------------------------------------- embeddings

void EmbeddingStore::add(std::string word, std::span<const float> values) {
  double norm = 0;
  for (float v : values) norm += static_cast<double>(v) * v;
  index_.emplace(word, words_.size());
  words_.push_back(std::move(word));
  data_.insert(data_.end(), values.begin(), values.end());
  norms_.push_back(std::sqrt(norm));
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  EmbeddingStore store;
  std::string line;
  std::size_t lineno = 0;
  std::vector<float> values;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    // word2vec-style "count dim" header
    if (lineno == 1 && fields.size() == 2 && is_integer(fields[0]) && is_integer(fields[1])) continue;

    const auto where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() < 2) {
      store.warnings_.push_back(where + ": no vector values");
      continue;
    }
    values.assign(fields.size() - 1, 0.0f);
    bool ok = true;
    for (std::size_t i = 1; i < fields.size() && ok; ++i) ok = parse_float(fields[i], values[i - 1]);
    if (!ok) {
      store.warnings_.push_back(where + ": unparseable value");
      continue;
    }
    if (store.dim_ == 0) {
      store.dim_ = values.size();
    } else if (values.size() != store.dim_) {
      throw LoadError(where + ": expected " + std::to_string(store.dim_) + " values, found " +
                      std::to_string(values.size()));
    }
    if (std::all_of(values.begin(), values.end(), [](float v) { return v == 0.0f; })) {
      store.warnings_.push_back(where + ": zero vector");
      continue;
    }
    auto key = ascii_lower(fields[0]);
    if (store.index_.contains(key)) {
      store.warnings_.push_back(where + ": duplicate word '" + key + "'");
      continue;
    }
    store.add(std::move(key), values);
  }
  return store;
}

EmbeddingStore EmbeddingStore::from_entries(
    const std::vector<std::pair<std::string, std::vector<float>>>& entries) {
  EmbeddingStore store;
  for (const auto& [word, values] : entries) {
    if (store.dim_ == 0) store.dim_ = values.size();
    if (values.size() != store.dim_) throw LoadError("inconsistent dimension for '" + word + "'");
    if (std::all_of(values.begin(), values.end(), [](float v) { return v == 0.0f; })) {
      throw LoadError("zero vector for '" + word + "'");
    }
    auto key = ascii_lower(word);
    if (!store.index_.contains(key)) store.add(std::move(key), values);
  }
  return store;
}

bool EmbeddingStore::contains(std::string_view word) const {
  return index_.contains(ascii_lower(word));
}

std::optional<std::span<const float>> EmbeddingStore::vector(std::string_view word) const {
  const auto it = index_.find(ascii_lower(word));
  if (it == index_.end()) return std::nullopt;
  return std::span<const float>(data_).subspan(it->second * dim_, dim_);
}

std::vector<std::string> EmbeddingStore::nearest_neighbors(std::string_view word,
                                                           std::size_t n) const {
  if (empty()) throw PreconditionError("nearest_neighbors on an empty embedding store");
  if (n == 0) throw PreconditionError("nearest_neighbors: n must be >= 1");
  const auto it = index_.find(ascii_lower(word));
  if (it == index_.end()) return {};
  const std::size_t self = it->second;

  std::vector<double> sims(words_.size());
  kernels::cosine_scan(data_, norms_, std::span<const float>(data_).subspan(self * dim_, dim_), sims);

  std::vector<std::size_t> order;
  order.reserve(words_.size() - 1);
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (i != self) order.push_back(i);
  }
  const auto by_similarity = [&](std::size_t a, std::size_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return words_[a] < words_[b];
  };
  const std::size_t k = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    by_similarity);
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(words_[order[i]]);
  return out;
}

// ------------------------------------------------------------------ synonyms

SynonymLexicon SynonymLexicon::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  SynonymLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto tab = body.find('\t');
    if (tab == std::string_view::npos) {
      throw LoadError(path.string() + ":" + std::to_string(lineno) + ": expected word<TAB>synonyms");
    }
    std::vector<std::string> syns;
    std::string_view rest = body.substr(tab + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = trim(rest.substr(0, comma));
      if (!item.empty()) syns.emplace_back(item);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    lex.add(trim(body.substr(0, tab)), syns);
  }
  return lex;
}

void SynonymLexicon::add(std::string_view word, const std::vector<std::string>& synonyms) {
  const auto key = ascii_lower(word);
  auto& list = entries_[key];
  for (const auto& s : synonyms) {
    auto syn = ascii_lower(s);
    if (syn == key || syn.empty()) continue;
    if (std::find(list.begin(), list.end(), syn) == list.end()) list.push_back(std::move(syn));
  }
}

std::vector<std::string> SynonymLexicon::synonyms(std::string_view word) const {
  const auto it = entries_.find(ascii_lower(word));
  return it == entries_.end() ? std::vector<std::string>{} : it->second;
}

// ----------------------------------------------------------------------- POS

std::string_view to_string(PosTag tag) {
  switch (tag) {
    case PosTag::kNoun: return "NOUN";
    case PosTag::kVerb: return "VERB";
    case PosTag::kAdj: return "ADJ";
    case PosTag::kAdv: return "ADV";
    case PosTag::kPron: return "PRON";
    case PosTag::kOther: return "OTHER";
  }
  return "OTHER";
}

PosTag parse_pos_tag(std::string_view name) {
  const auto upper = [&] {
    std::string s(name);
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
  }();
  for (auto tag : {PosTag::kNoun, PosTag::kVerb, PosTag::kAdj, PosTag::kAdv, PosTag::kPron,
                   PosTag::kOther}) {
    if (to_string(tag) == upper) return tag;
  }
  throw LoadError("unknown POS tag '" + std::string(name) + "'");
}

PosDictionary PosDictionary::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  PosDictionary dict;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto tab = body.find('\t');
    if (tab == std::string_view::npos) {
      throw LoadError(path.string() + ":" + std::to_string(lineno) + ": expected word<TAB>TAG");
    }
    try {
      dict.add(trim(body.substr(0, tab)), parse_pos_tag(trim(body.substr(tab + 1))));
    } catch (const LoadError& e) {
      throw LoadError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return dict;
}

void PosDictionary::add(std::string_view word, PosTag tag) { tags_.emplace(ascii_lower(word), tag); }

PosTag PosDictionary::tag(std::string_view word) const {
  const auto it = tags_.find(ascii_lower(word));
  return it == tags_.end() ? PosTag::kOther : it->second;
}

// ----------------------------------------------------------------- stopwords

StopwordList StopwordList::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  StopwordList list;
  std::string line;
  while (std::getline(in, line)) {
    const auto w = trim(line);
    if (!w.empty() && w.front() != '#') list.words_.insert(ascii_lower(w));
  }
  return list;
}

StopwordList StopwordList::english() {
  static const char* const kWords[] = {
      "a", "about", "above", "after", "again", "against", "ain", "all", "am", "an", "and",
      "any", "are", "aren", "aren't", "as", "at", "be", "because", "been", "before", "being",
      "below", "between", "both", "but", "by", "can", "couldn", "couldn't", "d", "did",
      "didn", "didn't", "do", "does", "doesn", "doesn't", "doing", "don", "don't", "down",
      "during", "each", "few", "for", "from", "further", "had", "hadn", "hadn't", "has",
      "hasn", "hasn't", "have", "haven", "haven't", "having", "he", "her", "here", "hers",
      "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "isn",
      "isn't", "it", "it's", "its", "itself", "just", "ll", "m", "ma", "me", "mightn",
      "mightn't", "more", "most", "mustn", "mustn't", "my", "myself", "needn", "needn't",
      "no", "nor", "not", "now", "o", "of", "off", "on", "once", "only", "or", "other",
      "our", "ours", "ourselves", "out", "over", "own", "re", "s", "same", "shan", "shan't",
      "she", "she's", "should", "should've", "shouldn", "shouldn't", "so", "some", "such",
      "t", "than", "that", "that'll", "the", "their", "theirs", "them", "themselves", "then",
      "there", "these", "they", "this", "those", "through", "to", "too", "under", "until",
      "up", "ve", "very", "was", "wasn", "wasn't", "we", "were", "weren", "weren't", "what",
      "when", "where", "which", "while", "who", "whom", "why", "will", "with", "won",
      "won't", "wouldn", "wouldn't", "y", "you", "you'd", "you'll", "you're", "you've",
      "your", "yours", "yourself", "yourselves"};
  StopwordList list;
  for (const char* w : kWords) list.words_.insert(w);
  return list;
}

bool StopwordList::contains(std::string_view word) const {
  return words_.contains(ascii_lower(word));
}

// ----------------------------------------------------------------- char maps

std::map<char32_t, std::vector<char32_t>> CharMaps::load_map(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::map<char32_t, std::vector<char32_t>> map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    const auto key = utf8_decode(std::string_view(line).substr(0, tab));
    if (tab == std::string::npos || key.size() != 1) {
      throw LoadError(path.string() + ":" + std::to_string(lineno) +
                      ": expected one character, a TAB, then variants");
    }
    auto& list = map[key[0]];
    for (char32_t v : utf8_decode(std::string_view(line).substr(tab + 1))) {
      if (v == key[0] || v == U' ' || v == U',' || v == U'\t') continue;
      if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
    }
  }
  return map;
}

CharMaps CharMaps::load(const std::filesystem::path& homoglyphs,
                        const std::filesystem::path& keyboard) {
  CharMaps maps;
  maps.homoglyphs_ = load_map(homoglyphs);
  maps.keyboard_ = load_map(keyboard);
  return maps;
}

namespace {
void add_variants(std::map<char32_t, std::vector<char32_t>>& map, char32_t c,
                  std::u32string_view variants) {
  auto& list = map[c];
  for (char32_t v : variants) {
    if (v != c && std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
  }
}
std::vector<char32_t> lookup(const std::map<char32_t, std::vector<char32_t>>& map, char32_t c) {
  if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
  const auto it = map.find(c);
  return it == map.end() ? std::vector<char32_t>{} : it->second;
}
}  // namespace

void CharMaps::add_homoglyphs(char32_t c, std::u32string_view variants) {
  add_variants(homoglyphs_, c, variants);
}
void CharMaps::add_keyboard(char32_t c, std::u32string_view neighbors) {
  add_variants(keyboard_, c, neighbors);
}
std::vector<char32_t> CharMaps::homoglyph_variants(char32_t c) const { return lookup(homoglyphs_, c); }
std::vector<char32_t> CharMaps::keyboard_neighbors(char32_t c) const { return lookup(keyboard_, c); }

// ----------------------------------------------------------------- directory

Resources Resources::load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw LoadError("resource directory not found: " + dir.string());
  Resources r;
  const auto file = [&](const char* name) { return dir / name; };
  if (std::filesystem::exists(file("embeddings.txt"))) r.embeddings = EmbeddingStore::load(file("embeddings.txt"));
  if (std::filesystem::exists(file("synonyms.tsv"))) r.synonyms = SynonymLexicon::load(file("synonyms.tsv"));
  if (std::filesystem::exists(file("pos.tsv"))) r.pos = PosDictionary::load(file("pos.tsv"));
  if (std::filesystem::exists(file("stopwords.txt"))) r.stopwords = StopwordList::load(file("stopwords.txt"));
  if (std::filesystem::exists(file("homoglyphs.tsv"))) {
    r.chars.homoglyphs_ = CharMaps::load_map(file("homoglyphs.tsv"));
  }
  if (std::filesystem::exists(file("keyboard.tsv"))) {
    r.chars.keyboard_ = CharMaps::load_map(file("keyboard.tsv"));
  }
  return r;
}

}  // namespace toxictrap
