#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "toxictrap/constraint.hpp"
#include "toxictrap/dataset.hpp"
#include "toxictrap/search.hpp"
#include "toxictrap/transform.hpp"

namespace toxictrap {

struct AttackRecipe {
  std::string name;
  TaskKind task = TaskKind::kBinary;
  Transformation transformation;
  std::vector<Constraint> constraints;  // cheap-to-expensive order
  SearchStrategy search;
  std::size_t budget = kGreedyBudget;  // max victim queries per seed

  // Throws ConfigError naming the violated rule.
  void validate() const;
  bool operator==(const AttackRecipe&) const = default;
};

struct RecipeOptions {
  bool a2t_mlm = false;  // a2t-toxic also swaps in masked-LM suggestions
};

const std::vector<std::string>& builtin_recipe_names();

// Throws ConfigError listing the valid names for an unknown recipe.
AttackRecipe builtin_recipe(std::string_view name, TaskKind task, const RecipeOptions& options = {});

// Strict TOML loader: unknown keys, bad kinds and out-of-range values are
// ConfigErrors carrying file:line. [goal].task, when present, overrides
// `fallback_task`.
AttackRecipe load_recipe(const std::filesystem::path& path, TaskKind fallback_task);
AttackRecipe parse_recipe(std::string_view toml_text, TaskKind fallback_task, std::string_view source = "<string>");

std::string serialize_recipe(const AttackRecipe& recipe);
nlohmann::ordered_json recipe_to_json(const AttackRecipe& recipe);

}  // namespace toxictrap
