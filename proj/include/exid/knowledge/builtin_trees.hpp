#pragma once

#include <string_view>

#include "exid/knowledge/tree.hpp"

namespace exid::knowledge {

/// DSL source of the shipped domain-knowledge tree for an environment (also under trees/).
std::string_view builtin_tree_text(std::string_view env_id);

/// Parsed built-in tree; throws LookupError for unsupported environments.
DecisionTree builtin_tree(std::string_view env_id);

}  // namespace exid::knowledge
