#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ers/egrw.hpp"
#include "ers/eval.hpp"
#include "ers/module.hpp"

namespace ers {

struct system_node;
using system_ptr = std::shared_ptr<system_node>;

// One synchronization criterion between two descendant components: the
// named properties must agree (or be undefined on either side) on every
// reachable stage. Endpoints are stored as child-index paths from the
// owning node, since a criterion may reach a component nested inside a
// composed child (every component's properties are inherited upward).
// `total` records that both endpoints were declared total, so exact
// equality applies with no undefined escape hatch.
struct criterion {
  std::vector<int> left_path;
  std::vector<int> right_path;
  std::string left_name;  // resolved component names, for display
  std::string right_name;
  std::string left_prop;
  std::string right_prop;
  bool total = false;
};

// A property a composed system exposes to its parents, defined by a single
// routing equation whose right side mixes child projections, child
// properties, its own properties, literals, and data builtins.
struct exported_prop {
  std::string name;
  std::string codomain_name;
  bool total = false;
  op_id op = no_op;  // in the synthetic signature
  term_ptr rhs;      // defining right side over the stage variable
};

// A component tree: either one atomic module or a synchronous composition
// of children. Composed nodes carry a synthetic signature in which their
// routing equations were parsed: the composed stage is the prelude Stage
// sort, each child contributes a projection operator and opaque stage
// sort, and child properties appear as overloaded property operators.
struct system_node {
  std::string name;

  std::shared_ptr<module_data> mod;  // atomic only
  std::shared_ptr<evaluator> ev;     // atomic only

  std::vector<system_ptr> children;  // composed only
  std::vector<criterion> criteria;
  std::shared_ptr<module_data> synth;
  std::vector<op_id> projections;  // per child, in the synthetic signature
  term_ptr stage_var;              // the routing equations' stage variable
  std::vector<exported_prop> exports;

  bool atomic() const { return mod != nullptr; }
  int leaf_count() const;
};

// Stages of a composed system are kept flat: the atomic leaves' stages in
// tree order. Atomic systems use a single-entry vector.
using cstage = std::vector<term_ptr>;

// The atomic leaves in tree order.
std::vector<system_ptr> leaves_of(const system_ptr& sys);

// Resolves a component reference: direct children first, then a unique
// descendant by name. Returns the child-index path; nullopt with `why`
// filled when the name is absent or ambiguous.
std::optional<std::vector<int>> resolve_component(const system_node& n,
                                                  const std::string& name,
                                                  std::string& why);

// The node a child-index path leads to, and the leaf offset of its slice.
system_ptr node_at(const system_ptr& root, const std::vector<int>& path);
std::size_t slice_offset(const system_node& root, const std::vector<int>& path);

// Initial stage: each leaf's `init` reduced; throws engine_error when a
// leaf's init does not reduce to a proper stage or the tuple violates a
// criterion.
cstage init_stage(const system_ptr& sys);

// Canonical printed form: the leaf stage for atomic systems, a flat
// `< s1, ..., sn >` tuple otherwise.
std::string serialize_stage(const system_ptr& sys, const cstage& st);

// Value of a node-level property on that node's slice of the stage:
// declared property for atomic nodes, exported property for composed ones.
// nullopt is undefined.
std::optional<term_ptr> eval_node_prop(const system_ptr& node,
                                       const std::string& prop,
                                       const cstage& slice);

// True when every criterion of every composed node holds on the stage,
// with undefined on either side passing vacuously.
bool compatible(const system_ptr& sys, const cstage& st);

// The first violated criterion on the stage, rendered for messages.
std::optional<std::string> first_violation(const system_ptr& sys,
                                           const cstage& st);

// One composed half-step: every nonempty subset of leaves takes a half
// step, the rest stand still, and the destination must be compatible.
// Deduplicated and ordered by serialization.
std::vector<cstage> composed_successors(const system_ptr& sys,
                                        const cstage& st);

// Structural equivalence of two systems: same atomic leaves (by module
// name, as multisets) and same criteria once endpoints are named by
// component rather than by position.
bool equivalent(const system_ptr& a, const system_ptr& b);

}  // namespace ers
