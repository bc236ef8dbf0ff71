#include "ers/compose.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "ers/egrw.hpp"

namespace ers {

namespace {

void collect_leaves(const system_ptr& n, std::vector<system_ptr>& out) {
  if (n->atomic()) {
    out.push_back(n);
    return;
  }
  for (const auto& c : n->children) collect_leaves(c, out);
}

// Evaluates a routing-equation right side over the node's stage slice.
// `depth` guards against mutually recursive exports.
std::optional<term_ptr> eval_routing(const system_node& node, const term_ptr& t,
                                     const cstage& st, std::size_t base,
                                     int depth);

std::optional<term_ptr> eval_export(const system_node& node,
                                    const std::string& prop, const cstage& st,
                                    std::size_t base, int depth) {
  if (depth > 64)
    throw engine_error("routing equations for " + node.name +
                       " recurse without progress");
  for (const auto& e : node.exports)
    if (e.name == prop)
      return eval_routing(node, e.rhs, st, base, depth + 1);
  throw engine_error(node.name + " has no property " + prop);
}

std::optional<term_ptr> eval_prop_at(const system_node& node,
                                     const std::string& prop, const cstage& st,
                                     std::size_t base, int depth) {
  if (node.atomic()) {
    const signature& sg = node.mod->sig;
    for (op_id o : sg.ops_named(prop + " @ _"))
      if (sg.op(o).is_prop) return node.ev->eval_prop(o, st[base]);
    throw engine_error(node.name + " has no property " + prop);
  }
  return eval_export(node, prop, st, base, depth);
}

std::optional<term_ptr> eval_routing(const system_node& node, const term_ptr& t,
                                     const cstage& st, std::size_t base,
                                     int depth) {
  switch (t->tag) {
    case term_tag::int_lit:
    case term_tag::bool_lit:
      return t;
    case term_tag::var:
      return std::nullopt;  // bare stage handle carries no data value
    case term_tag::app:
      break;
  }
  const signature& sg = node.synth->sig;
  const op_info& oi = sg.op(t->op);
  if (oi.is_prop) {
    const term_ptr& subject = t->args[0];
    if (subject->tag == term_tag::var)
      return eval_export(node, oi.pieces.front(), st, base, depth);
    // projection of one child: hand the child its slice
    auto pit = std::find(node.projections.begin(), node.projections.end(),
                         subject->op);
    std::size_t child = static_cast<std::size_t>(
        std::distance(node.projections.begin(), pit));
    std::size_t off = base;
    for (std::size_t k = 0; k < child; ++k)
      off += static_cast<std::size_t>(node.children[k]->leaf_count());
    return eval_prop_at(*node.children[child], oi.pieces.front(), st, off,
                        depth);
  }
  if (oi.builtin) {
    std::vector<term_ptr> args;
    for (const auto& a : t->args) {
      auto v = eval_routing(node, a, st, base, depth);
      if (!v) return std::nullopt;  // undefined is strict through data ops
      args.push_back(*v);
    }
    term_ptr folded = fold_builtin(oi.name, args);
    if (folded) return folded;
  }
  return std::nullopt;
}

const system_node& descend(const system_node& node,
                           const std::vector<int>& path, std::size_t& base) {
  const system_node* cur = &node;
  for (int step : path) {
    for (int k = 0; k < step; ++k)
      base += static_cast<std::size_t>(cur->children[k]->leaf_count());
    cur = cur->children[step].get();
  }
  return *cur;
}

// The first violated criterion of this node or any composed child.
std::optional<std::string> violation_at(const system_node& node,
                                        const cstage& st, std::size_t base) {
  if (node.atomic()) return std::nullopt;
  for (const auto& c : node.criteria) {
    std::size_t lbase = base, rbase = base;
    const system_node& ln = descend(node, c.left_path, lbase);
    const system_node& rn = descend(node, c.right_path, rbase);
    auto l = eval_prop_at(ln, c.left_prop, st, lbase, 0);
    auto r = eval_prop_at(rn, c.right_prop, st, rbase, 0);
    if (l && r && !term_eq(*l, *r))
      return c.left_name + "." + c.left_prop + " = " + c.right_name + "." +
             c.right_prop;
  }
  std::size_t o = base;
  for (const auto& child : node.children) {
    if (auto v = violation_at(*child, st, o)) return v;
    o += static_cast<std::size_t>(child->leaf_count());
  }
  return std::nullopt;
}

// normalized criterion endpoints for structural comparison
using crit_key = std::pair<std::pair<std::string, std::string>,
                           std::pair<std::string, std::string>>;

void collect_criteria(const system_ptr& n, std::multiset<crit_key>& out) {
  if (n->atomic()) return;
  for (const auto& c : n->criteria) {
    std::pair<std::string, std::string> l{c.left_name, c.left_prop};
    std::pair<std::string, std::string> r{c.right_name, c.right_prop};
    if (r < l) std::swap(l, r);
    out.insert({l, r});
  }
  for (const auto& c : n->children) collect_criteria(c, out);
}

}  // namespace

int system_node::leaf_count() const {
  if (atomic()) return 1;
  int n = 0;
  for (const auto& c : children) n += c->leaf_count();
  return n;
}

std::vector<system_ptr> leaves_of(const system_ptr& sys) {
  std::vector<system_ptr> out;
  collect_leaves(sys, out);
  return out;
}

std::optional<std::vector<int>> resolve_component(const system_node& n,
                                                  const std::string& name,
                                                  std::string& why) {
  for (std::size_t i = 0; i < n.children.size(); ++i)
    if (n.children[i]->name == name) return std::vector<int>{int(i)};
  std::vector<std::vector<int>> hits;
  std::vector<int> cur;
  std::function<void(const system_node&)> walk = [&](const system_node& x) {
    for (std::size_t i = 0; i < x.children.size(); ++i) {
      cur.push_back(static_cast<int>(i));
      if (x.children[i]->name == name) hits.push_back(cur);
      if (!x.children[i]->atomic()) walk(*x.children[i]);
      cur.pop_back();
    }
  };
  walk(n);
  if (hits.size() == 1) return hits[0];
  why = hits.empty() ? name + " names no component"
                     : name + " names several nested components";
  return std::nullopt;
}

system_ptr node_at(const system_ptr& root, const std::vector<int>& path) {
  system_ptr cur = root;
  for (int step : path) cur = cur->children[step];
  return cur;
}

std::size_t slice_offset(const system_node& root,
                         const std::vector<int>& path) {
  std::size_t base = 0;
  descend(root, path, base);
  return base;
}

cstage init_stage(const system_ptr& sys) {
  cstage st;
  for (const auto& leaf : leaves_of(sys)) {
    const signature& sg = leaf->mod->sig;
    const auto& inits = sg.ops_named("init");
    if (inits.empty())
      throw engine_error(leaf->name + " declares no init constant");
    term_ptr t = leaf->ev->normalize(mk_app(inits.front(), {}));
    sort_id s = leaf->ev->least_sort(t);
    if (sg.sort(s).is_kind_top)
      throw engine_error(leaf->name + ": init does not reduce to a stage, " +
                         "got " + print_term(sg, t));
    st.push_back(t);
  }
  if (auto v = first_violation(sys, st))
    throw engine_error(sys->name + ": initial stage violates " + *v);
  return st;
}

std::string serialize_stage(const system_ptr& sys, const cstage& st) {
  auto leaves = leaves_of(sys);
  if (sys->atomic()) return print_term(sys->mod->sig, st[0]);
  std::string out = "<";
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    out += i ? ", " : " ";
    out += print_term(leaves[i]->mod->sig, st[i]);
  }
  out += " >";
  return out;
}

std::optional<term_ptr> eval_node_prop(const system_ptr& node,
                                       const std::string& prop,
                                       const cstage& slice) {
  return eval_prop_at(*node, prop, slice, 0, 0);
}

bool compatible(const system_ptr& sys, const cstage& st) {
  return !violation_at(*sys, st, 0).has_value();
}

std::optional<std::string> first_violation(const system_ptr& sys,
                                           const cstage& st) {
  return violation_at(*sys, st, 0);
}

std::vector<cstage> composed_successors(const system_ptr& sys,
                                        const cstage& st) {
  auto leaves = leaves_of(sys);
  std::size_t n = leaves.size();
  std::vector<std::vector<term_ptr>> succ(n);
  for (std::size_t i = 0; i < n; ++i)
    succ[i] = half_successors(*leaves[i]->ev, st[i]);

  std::map<std::string, cstage> out;
  std::vector<std::size_t> pick(n);
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    bool feasible = true;
    for (std::size_t i = 0; i < n && feasible; ++i)
      if ((mask >> i) & 1) feasible = !succ[i].empty();
    if (!feasible) continue;
    std::fill(pick.begin(), pick.end(), 0);
    while (true) {
      cstage next = st;
      for (std::size_t i = 0; i < n; ++i)
        if ((mask >> i) & 1) next[i] = succ[i][pick[i]];
      if (compatible(sys, next))
        out.emplace(serialize_stage(sys, next), next);
      // advance the odometer over the moving components
      std::size_t i = 0;
      for (; i < n; ++i) {
        if (!((mask >> i) & 1)) continue;
        if (++pick[i] < succ[i].size()) break;
        pick[i] = 0;
      }
      if (i == n) break;
    }
  }
  std::vector<cstage> res;
  res.reserve(out.size());
  for (auto& [_, v] : out) res.push_back(std::move(v));
  return res;
}

bool equivalent(const system_ptr& a, const system_ptr& b) {
  std::multiset<std::string> la, lb;
  for (const auto& l : leaves_of(a)) la.insert(l->mod->name);
  for (const auto& l : leaves_of(b)) lb.insert(l->mod->name);
  if (la != lb) return false;
  std::multiset<crit_key> ca, cb;
  collect_criteria(a, ca);
  collect_criteria(b, cb);
  return ca == cb;
}

}  // namespace ers
