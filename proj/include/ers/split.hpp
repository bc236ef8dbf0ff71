#pragma once

#include <string>
#include <vector>

#include "ers/compose.hpp"
#include "ers/module.hpp"

namespace ers {

// Bookkeeping from one split translation, echoed into the emitted header.
struct split_report {
  std::vector<std::string> criteria;    // rendered, one per criterion
  std::vector<int> member_rule_counts;  // split rules per member, tree order
  long long combinations = 0;           // product of member_rule_counts
  int rules_generated = 0;              // product rules kept after merging
  bool pruned = false;
  int rules_deleted = 0;   // filled by prune_rules
  int conds_removed = 0;   // filled by prune_rules
  std::vector<std::string> warnings;  // non-total criterion endpoints
};

// Halves an atomic egalitarian module into a plain one over the stage kind:
// State is renamed to a fresh State' and Stage to State, and each rule
// t =[ l ]=> u becomes the pair t => l and l => u under the same condition.
// Equations, memberships and properties carry over unchanged.
module_data split_atomic(const module_data& m);

// Splits a component tree into one plain module over stage tuples. The
// members' split modules are merged into a shared signature (names are
// qualified with the owning module where they would collide), a State
// membership carries every synchronization criterion, every member and
// exported property is rerouted through the tuple, and each way of picking
// one rule per member plus a nonempty set of members that fire yields one
// product rule guarded by source and target State memberships. Criteria
// whose endpoints are not both total are compared with agree, which passes
// wherever either side is undefined; each such endpoint is reported in
// rep.warnings.
module_data split_system(const system_ptr& sys, split_report& rep);

// Drops product rules with a condition that fails on every instance and
// removes conditions that hold on every instance, deciding criteria on the
// ground stage constructors while data variables stay symbolic. Sound but
// incomplete: undecided conditions stay in place.
module_data prune_rules(const module_data& m, split_report& rep);

// The emitted source: a header comment recording the source system, its
// criteria and the translation statistics, then the module itself.
std::string render_split(const module_data& m, const std::string& source,
                         const split_report& rep);

}  // namespace ers
