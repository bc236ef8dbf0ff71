#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ers/compose.hpp"
#include "ers/module.hpp"

namespace ers {

struct explore_bounds {
  long max_nodes = 100000;
  long max_depth = -1;   // negative: unlimited
  bool annotate = true;  // fill per-node property values
};

// A bounded breadth-first fragment of the reachable stage space. Nodes are
// canonical serializations, identified by their index; edges, parents and
// depths refer to those indices. When the walk stops early, `truncated` is
// set and `frontier` counts the admitted nodes that were never expanded
// (always the trailing ids). A graph with truncated=false is closed under
// the successor relation.
struct state_graph {
  std::string system;
  std::vector<std::string> nodes;
  std::vector<std::string> sorts;       // least-sort display name per node
  std::vector<char> boxes;              // mid-transition flag per node
  std::vector<std::map<std::string, std::string>> props;  // "UNDEFINED" when undefined
  std::vector<std::pair<int, int>> edges;  // sorted (from, to) pairs
  std::vector<int> parents;                // discovery tree, -1 at init
  std::vector<int> depths;
  int init = 0;
  bool truncated = false;
  long frontier = 0;
};

// Expanded nodes with no successors.
std::vector<int> deadlocks(const state_graph& g);

// Goal language over explored nodes: and/or/not over three atom shapes,
//   path.prop             the named boolean property holds
//   path.prop == value    the property is defined and equals the value
//   path == term          the component's stage matches the term pattern
// where `path` names a component of the system (omitted for single-module
// systems, so `prop` and `term` alone work there too). A property that is
// undefined at a node makes its atom false.
struct formula {
  enum class node { conj, disj, neg, atom };
  node k = node::atom;
  std::vector<formula> kids;
  std::string path, prop, rhs;  // atom pieces as written

  // resolution against one system, filled before evaluation
  enum class shape { unresolved, prop_check, pattern_check };
  shape form = shape::unresolved;
  std::vector<int> rpath;     // component path (composed systems)
  std::vector<op_id> rops;    // property rows (plain modules)
  term_ptr rvalue;            // parsed comparison value
  term_ptr rpattern;          // parsed stage pattern
};

// Parses the goal language; throws engine_error on malformed input.
formula parse_formula(const std::string& text);

struct verdict {
  enum class kind { holds_exhaustive, holds_within_bounds, violated };
  kind k = kind::holds_exhaustive;
  std::vector<std::string> trace;  // violated: stages from init to witness
  long nodes = 0;                  // nodes examined when deciding
};

struct search_result {
  bool found = false;
  bool truncated = false;          // space not exhausted (when !found)
  std::vector<std::string> trace;  // found: stages from init to goal
  long nodes = 0;
};

struct graph_diff {
  bool equal = true;
  std::string report;  // first difference, empty when equal
};

// Breadth-first closure from the initial stage up to the bounds, with
// deterministic ids: nodes of one depth level are admitted in serialization
// order. Exploration errors carry the stage being expanded.
state_graph explore(const system_ptr& sys, const explore_bounds& b = {});
state_graph explore(const module_data& m, const explore_bounds& b = {});

// Checks that the formula holds at every reachable node within bounds.
// A violation yields a shortest counterexample trace at half-step
// granularity; otherwise the verdict records whether the walk was
// exhaustive. Throws engine_error when the formula does not resolve.
verdict check_invariant(const system_ptr& sys, const std::string& formula_text,
                        const explore_bounds& b = {});
verdict check_invariant(const module_data& m, const std::string& formula_text,
                        const explore_bounds& b = {});

// Shortest trace to the first node satisfying the goal.
search_result search(const system_ptr& sys, const std::string& goal_text,
                     const explore_bounds& b = {});
search_result search(const module_data& m, const std::string& goal_text,
                     const explore_bounds& b = {});

// Equality up to node serialization: init, node set, edge set, and the
// property annotations of shared nodes. Sort names are display detail and
// are not compared.
graph_diff graphs_equal(const state_graph& a, const state_graph& b);

// dot: states as ellipses, mid-transition stages as boxes.
std::string to_dot(const state_graph& g);

// json: {schema:1, system, init, truncated, frontier,
//        nodes:[{id, term, sort, props}], edges:[[from,to]]};
// parse_graph(to_json(g)) reproduces g up to discovery metadata.
std::string to_json(const state_graph& g);
state_graph parse_graph(const std::string& text);

}  // namespace ers
