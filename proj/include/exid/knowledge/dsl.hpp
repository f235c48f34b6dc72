#pragma once

#include <string>
#include <string_view>

#include "exid/knowledge/tree.hpp"

namespace exid::knowledge {

/// Rule DSL
///
///     @env mountaincar              # optional header: binds the default feature/action names
///     @feature speed 1              # optional extra or overriding feature name
///     @action  brake 1              # optional action name
///     (guard (pos > -1.0) (if (pos > -0.5) (act right) (act left)))
///
///   tree      := '(' 'guard' condition+ node ')' | node
///   node      := '(' 'if' condition node node ')' | '(' 'act' NAME ')' | 'empty' | '(' 'empty' ')'
///   condition := '(' FEATURE ('<' | '>' | '<=' | '>=') NUMBER ')'
///
/// FEATURE is a declared name or "x<index>"; action NAME is a declared name or an index.
/// '#' and ';' start comments that run to the end of the line.
DecisionTree parse_tree(std::string_view text, const Vocabulary* defaults = nullptr);

/// Canonical text; parse_tree(print_tree(t)) == t.
std::string print_tree(const DecisionTree& tree);

/// State predicate in the same condition syntax, joined by 'and' / '&&':
/// "pos > -0.8", "(x40 > 0.55) and (x40 < 0.65)".
Predicate parse_predicate(std::string_view text, const Vocabulary& vocabulary);
std::string print_predicate(const Predicate& predicate, const Vocabulary& vocabulary);

}  // namespace exid::knowledge
