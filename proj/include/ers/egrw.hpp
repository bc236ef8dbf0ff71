#pragma once

#include <set>
#include <vector>

#include "ers/diag.hpp"
#include "ers/eval.hpp"
#include "ers/module.hpp"

namespace ers {

// One half-rewrite step from a stage: labels reachable from rule sources,
// targets reachable from labels. Results are normalized, deduplicated, and
// ordered by the term order.
std::vector<term_ptr> half_successors(evaluator& ev, const term_ptr& stage);

// Successors under the plain rules of a plain module.
std::vector<term_ptr> plain_successors(evaluator& ev, const term_ptr& state);

// Warn about operators that could nest stage terms below the top of a
// state. An operator is flagged when it builds into the stage kind, has no
// defining equations, and takes an argument whose constructor closure
// reaches a stage constructor.
std::vector<diagnostic> check_topmost(const module_data& m);

// Warn about rules whose conditions or targets mention variables that no
// preceding match can bind, separately for the source->label and
// label->target halves.
std::vector<diagnostic> check_admissible(const module_data& m);

using var_set = std::set<std::pair<std::string, sort_id>>;

var_set term_vars(const term_ptr& t);
var_set cond_vars(const std::vector<condition>& cs);

// A rule is readable when each half can be understood on its own: shared
// source/target variables all pass through the label, and condition
// variable chains from the source and from the target only meet at label
// variables.
bool is_readable_syntactic(const signature& sig, const eg_rule& r);

// Rewrite a rule into readable form: source-side and target-side copies of
// the shared variables, the condition duplicated per side with fresh names
// for the other side's variables, and linking equalities for variables the
// source and target used to share.
eg_rule make_readable_rule(const signature& sig, const eg_rule& r);

// Apply make_readable_rule to every unreadable rule.
module_data make_readable(const module_data& m);

}  // namespace ers
