#include "toxictrap/recipe.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "toxictrap/error.hpp"

namespace toxictrap {
namespace {

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// ------------------------------------------------------------------ parsing

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const toml::node& node, const std::string& what) const {
    const auto& src = node.source();
    throw ConfigError(source_ + ":" + std::to_string(src.begin.line) + ":" + std::to_string(src.begin.column) +
                      ": " + what);
  }
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(source_ + ": " + what); }

  void only_keys(const toml::table& t, std::initializer_list<std::string_view> allowed, const std::string& where) const {
    for (const auto& [k, v] : t) {
      if (std::find(allowed.begin(), allowed.end(), k.str()) == allowed.end()) {
        fail(v, "unknown key '" + std::string(k.str()) + "' in " + where);
      }
    }
  }

  const toml::table* table(const toml::table& parent, std::string_view key, bool required) const {
    const auto* node = parent.get(key);
    if (!node) {
      if (required) fail("missing [" + std::string(key) + "] section");
      return nullptr;
    }
    const auto* t = node->as_table();
    if (!t) fail(*node, "'" + std::string(key) + "' must be a table");
    return t;
  }

  std::optional<std::string> str(const toml::table& t, std::string_view key) const {
    const auto* n = t.get(key);
    if (!n) return std::nullopt;
    const auto v = n->value<std::string>();
    if (!n->is_string() || !v) fail(*n, "'" + std::string(key) + "' must be a string");
    return *v;
  }

  std::optional<double> real(const toml::table& t, std::string_view key) const {
    const auto* n = t.get(key);
    if (!n) return std::nullopt;
    if (!n->is_number()) fail(*n, "'" + std::string(key) + "' must be a number");
    return *n->value<double>();
  }

  std::optional<std::size_t> count(const toml::table& t, std::string_view key) const {
    const auto* n = t.get(key);
    if (!n) return std::nullopt;
    if (!n->is_integer()) fail(*n, "'" + std::string(key) + "' must be an integer");
    const auto v = *n->value<std::int64_t>();
    if (v < 0) fail(*n, "'" + std::string(key) + "' must be >= 0");
    return static_cast<std::size_t>(v);
  }

  std::optional<bool> flag(const toml::table& t, std::string_view key) const {
    const auto* n = t.get(key);
    if (!n) return std::nullopt;
    if (!n->is_boolean()) fail(*n, "'" + std::string(key) + "' must be true or false");
    return *n->value<bool>();
  }

  template <typename F>
  auto guarded(const toml::node& node, F&& f) const {
    try {
      return f();
    } catch (const ConfigError& e) {
      if (std::string_view(e.what()).starts_with(source_ + ":")) throw;
      fail(node, e.what());
    }
  }

  Transformation transformation(const toml::table& t, bool allow_members) const {
    only_keys(t, {"kind", "n", "keyboard", "member"}, "[transform]");
    const auto kind_name = str(t, "kind");
    if (!kind_name) fail(t, "transformation needs a 'kind'");
    Transformation tr;
    tr.kind = guarded(*t.get("kind"), [&] { return parse_transform_kind(*kind_name); });
    if (auto n = count(t, "n")) {
      if (tr.kind != TransformKind::kEmbKnn && tr.kind != TransformKind::kMlm) fail(*t.get("n"), "'n' only applies to emb_knn and mlm");
      tr.n = *n;
    } else if (tr.kind == TransformKind::kEmbKnn) {
      fail(t, "emb_knn needs 'n'");
    } else if (tr.kind == TransformKind::kMlm) {
      tr.n = kMlmTopK;
    }
    if (auto k = flag(t, "keyboard")) tr.keyboard = *k;
    if (const auto* members = t.get("member")) {
      if (!allow_members) fail(*members, "composite transformations cannot be nested");
      const auto* arr = members->as_array();
      if (!arr) fail(*members, "'member' must be an array of tables");
      for (const auto& m : *arr) {
        const auto* mt = m.as_table();
        if (!mt) fail(m, "'member' entries must be tables");
        tr.members.push_back(transformation(*mt, false));
      }
    }
    guarded(t, [&] {
      tr.validate();
      return 0;
    });
    return tr;
  }

 private:
  std::string source_;
};

AttackRecipe finish(AttackRecipe r) {
  sort_by_cost(r.constraints);
  r.validate();
  return r;
}

}  // namespace

void AttackRecipe::validate() const {
  if (name.empty()) throw ConfigError("recipe needs a name");
  transformation.validate();
  search.validate();
  if (budget == 0) throw ConfigError("recipe budget must be >= 1");
  bool stopword_ban = false;
  for (const auto& c : constraints) {
    c.validate();
    stopword_ban = stopword_ban || c.kind == ConstraintKind::kNoStopwordSwap;
    if (c.kind == ConstraintKind::kPosMatch && !transformation.produces_word_edits()) {
      throw ConfigError("recipe '" + name + "': pos_match is not allowed with a character-only transformation");
    }
  }
  if (!stopword_ban) throw ConfigError("recipe '" + name + "' must include no_stopword_swap");
}

const std::vector<std::string>& builtin_recipe_names() {
  static const std::vector<std::string> names{"toxictrap-default", "a2t-toxic",         "textfooler-toxic",
                                              "pwws-toxic",        "deepwordbug-toxic", "textbugger-toxic"};
  return names;
}

AttackRecipe builtin_recipe(std::string_view name, TaskKind task, const RecipeOptions& options) {
  using T = Transformation;
  using C = Constraint;
  AttackRecipe r;
  r.name = std::string(name);
  r.task = task;
  r.budget = kGreedyBudget;
  if (name == "toxictrap-default") {
    r.search = SearchStrategy::greedy(Ranking::kUnk);
    r.transformation = T::composite({T::emb_knn(20), T::char_homoglyph()});
    r.constraints = {C::max_ratio(0.1), C::sent_angular(0.84), C::pos_match()};
  } else if (name == "a2t-toxic") {
    r.search = SearchStrategy::greedy(Ranking::kGrad);
    r.transformation = options.a2t_mlm ? T::composite({T::emb_knn(20), T::mlm()}) : T::emb_knn(20);
    r.constraints = {C::sent_cosine(0.9), C::pos_match(), C::max_ratio(0.1)};
  } else if (name == "textfooler-toxic") {
    r.search = SearchStrategy::greedy(Ranking::kDel);
    r.transformation = T::emb_knn(50);
    r.constraints = {C::word_cos(0.5), C::pos_match(), C::sent_angular(0.84)};
  } else if (name == "pwws-toxic") {
    r.search = SearchStrategy::greedy(Ranking::kWs);
    r.transformation = T::lexicon();
  } else if (name == "deepwordbug-toxic") {
    r.search = SearchStrategy::greedy(Ranking::kDel);
    r.transformation = T::composite({T::char_insert(), T::char_delete(), T::char_neighbor_swap(), T::char_homoglyph(true)});
    r.constraints = {C::edit_distance(30)};
  } else if (name == "textbugger-toxic") {
    r.search = SearchStrategy::greedy(Ranking::kDel);
    r.transformation = T::composite(
        {T::char_insert(), T::char_delete(), T::char_neighbor_swap(), T::char_homoglyph(true), T::emb_knn(5)});
    r.constraints = {C::sent_cosine(0.8)};
  } else {
    std::string valid;
    for (const auto& n : builtin_recipe_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown recipe '" + std::string(name) + "'; valid recipes: " + valid);
  }
  r.constraints.push_back(C::no_stopword_swap());
  return finish(std::move(r));
}

AttackRecipe parse_recipe(std::string_view text, TaskKind fallback_task, std::string_view source) {
  const Reader rd{std::string(source)};
  toml::table doc;
  try {
    doc = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    const auto& b = e.source().begin;
    throw ConfigError(std::string(source) + ":" + std::to_string(b.line) + ":" + std::to_string(b.column) + ": " +
                      std::string(e.description()));
  }
  rd.only_keys(doc, {"name", "budget", "goal", "search", "transform", "constraint"}, "the top level");

  AttackRecipe r;
  const auto name = rd.str(doc, "name");
  if (!name) rd.fail("recipe needs a top-level 'name'");
  r.name = *name;
  r.task = fallback_task;
  if (const auto* goal = rd.table(doc, "goal", false)) {
    rd.only_keys(*goal, {"task"}, "[goal]");
    if (auto t = rd.str(*goal, "task")) r.task = rd.guarded(*goal->get("task"), [&] {
      try {
        return parse_task_kind(*t);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
    });
  }

  const auto* search = rd.table(doc, "search", true);
  rd.only_keys(*search, {"kind", "ranking", "width", "population", "generations", "mutation_rate"}, "[search]");
  const auto kind = rd.str(*search, "kind");
  if (!kind) rd.fail(*search, "[search] needs a 'kind'");
  r.search.kind = rd.guarded(*search->get("kind"), [&] { return parse_search_kind(*kind); });
  if (auto v = rd.str(*search, "ranking")) {
    r.search.ranking = rd.guarded(*search->get("ranking"), [&] { return parse_ranking(*v); });
  }
  if (auto v = rd.count(*search, "width")) r.search.width = *v;
  if (auto v = rd.count(*search, "population")) r.search.population = *v;
  if (auto v = rd.count(*search, "generations")) r.search.generations = *v;
  if (auto v = rd.real(*search, "mutation_rate")) r.search.mutation_rate = *v;
  r.budget = rd.count(doc, "budget").value_or(r.search.default_budget());

  r.transformation = rd.transformation(*rd.table(doc, "transform", true), true);

  if (const auto* cs = doc.get("constraint")) {
    const auto* arr = cs->as_array();
    if (!arr) rd.fail(*cs, "'constraint' must be an array of tables ([[constraint]])");
    for (const auto& node : *arr) {
      const auto* t = node.as_table();
      if (!t) rd.fail(node, "[[constraint]] entries must be tables");
      rd.only_keys(*t, {"kind", "threshold"}, "[[constraint]]");
      const auto ck = rd.str(*t, "kind");
      if (!ck) rd.fail(*t, "[[constraint]] needs a 'kind'");
      Constraint c;
      c.kind = rd.guarded(*t->get("kind"), [&] { return parse_constraint_kind(*ck); });
      const auto th = rd.real(*t, "threshold");
      if (c.has_threshold() && !th) rd.fail(*t, std::string(to_string(c.kind)) + " needs a 'threshold'");
      c.threshold = th.value_or(0.0);
      rd.guarded(th ? *t->get("threshold") : static_cast<const toml::node&>(*t), [&] {
        c.validate();
        return 0;
      });
      r.constraints.push_back(c);
    }
  }
  try {
    return finish(std::move(r));
  } catch (const ConfigError& e) {
    rd.fail(e.what());
  }
}

AttackRecipe load_recipe(const std::filesystem::path& path, TaskKind fallback_task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open recipe file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_recipe(ss.str(), fallback_task, path.string());
}

std::string serialize_recipe(const AttackRecipe& r) {
  std::ostringstream os;
  os << "name = " << quoted(r.name) << "\n";
  os << "budget = " << r.budget << "\n\n";
  os << "[goal]\ntask = " << quoted(to_string(r.task)) << "\n\n";
  os << "[search]\nkind = " << quoted(to_string(r.search.kind)) << "\n";
  switch (r.search.kind) {
    case SearchKind::kGreedyWir:
      os << "ranking = " << quoted(to_string(r.search.ranking)) << "\n";
      break;
    case SearchKind::kBeam:
      os << "width = " << r.search.width << "\n";
      break;
    case SearchKind::kGenetic:
      os << "population = " << r.search.population << "\ngenerations = " << r.search.generations
         << "\nmutation_rate = " << num(r.search.mutation_rate) << "\n";
      break;
  }
  auto body = [&](const Transformation& t) {
    os << "kind = " << quoted(to_string(t.kind)) << "\n";
    if (t.kind == TransformKind::kEmbKnn || t.kind == TransformKind::kMlm) os << "n = " << t.n << "\n";
    if (t.keyboard) os << "keyboard = true\n";
  };
  os << "\n[transform]\n";
  body(r.transformation);
  for (const auto& m : r.transformation.members) {
    os << "\n[[transform.member]]\n";
    body(m);
  }
  for (const auto& c : r.constraints) {
    os << "\n[[constraint]]\nkind = " << quoted(to_string(c.kind)) << "\n";
    if (c.has_threshold()) os << "threshold = " << num(c.threshold) << "\n";
  }
  return os.str();
}

nlohmann::ordered_json recipe_to_json(const AttackRecipe& r) {
  auto transform = [](const Transformation& t) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(t.kind);
    if (t.kind == TransformKind::kEmbKnn || t.kind == TransformKind::kMlm) j["n"] = t.n;
    if (t.keyboard) j["keyboard"] = true;
    return j;
  };
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["task"] = to_string(r.task);
  j["budget"] = r.budget;
  nlohmann::ordered_json s;
  s["kind"] = to_string(r.search.kind);
  switch (r.search.kind) {
    case SearchKind::kGreedyWir: s["ranking"] = to_string(r.search.ranking); break;
    case SearchKind::kBeam: s["width"] = r.search.width; break;
    case SearchKind::kGenetic:
      s["population"] = r.search.population;
      s["generations"] = r.search.generations;
      s["mutation_rate"] = r.search.mutation_rate;
      break;
  }
  j["search"] = s;
  auto t = transform(r.transformation);
  if (!r.transformation.members.empty()) {
    t["members"] = nlohmann::ordered_json::array();
    for (const auto& m : r.transformation.members) t["members"].push_back(transform(m));
  }
  j["transform"] = t;
  j["constraints"] = nlohmann::ordered_json::array();
  for (const auto& c : r.constraints) {
    nlohmann::ordered_json cj;
    cj["kind"] = to_string(c.kind);
    if (c.has_threshold()) cj["threshold"] = c.threshold;
    j["constraints"].push_back(cj);
  }
  return j;
}

}  // namespace toxictrap
