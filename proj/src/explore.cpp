#include "ers/explore.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ers/diag.hpp"
#include "ers/match.hpp"
#include "ers/parse.hpp"

namespace ers {

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

// ---------------------------------------------------------------- formula

std::vector<std::string> formula_tokens(const std::string& text) {
  std::vector<std::string> raw;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      raw.push_back(cur);
      cur.clear();
    }
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == '(' || c == ')') {
      flush();
      raw.emplace_back(1, c);
    } else {
      cur += c;
    }
  }
  flush();
  std::vector<std::string> out;
  for (auto& t : raw) {
    std::string rest = t;
    std::size_t p;
    while ((p = rest.find("==")) != std::string::npos) {
      if (p > 0) out.push_back(rest.substr(0, p));
      out.push_back("==");
      rest = rest.substr(p + 2);
    }
    if (!rest.empty()) out.push_back(rest);
  }
  return out;
}

struct formula_parser {
  const std::vector<std::string>& t;
  std::size_t i = 0;

  bool at(const char* s) const { return i < t.size() && t[i] == s; }

  formula disj() {
    formula l = conj();
    while (at("or")) {
      ++i;
      formula f;
      f.k = formula::node::disj;
      f.kids.push_back(std::move(l));
      f.kids.push_back(conj());
      l = std::move(f);
    }
    return l;
  }

  formula conj() {
    formula l = unary();
    while (at("and")) {
      ++i;
      formula f;
      f.k = formula::node::conj;
      f.kids.push_back(std::move(l));
      f.kids.push_back(unary());
      l = std::move(f);
    }
    return l;
  }

  formula unary() {
    if (at("not")) {
      ++i;
      formula f;
      f.k = formula::node::neg;
      f.kids.push_back(unary());
      return f;
    }
    if (at("(")) {
      ++i;
      formula f = disj();
      if (!at(")")) throw engine_error("goal formula: missing )");
      ++i;
      return f;
    }
    return atom();
  }

  // A run of tokens up to a top-level connective; parens inside count as
  // part of a term, so `crit(1)` survives.
  std::vector<std::string> run_until(bool stop_at_cmp) {
    std::vector<std::string> out;
    int depth = 0;
    while (i < t.size()) {
      const std::string& s = t[i];
      if (depth == 0 &&
          (s == "and" || s == "or" || s == ")" || (stop_at_cmp && s == "==")))
        break;
      if (s == "(") ++depth;
      if (s == ")") --depth;
      out.push_back(s);
      ++i;
    }
    return out;
  }

  formula atom() {
    std::vector<std::string> lhs = run_until(true);
    if (lhs.empty())
      throw engine_error("goal formula: expected an atom at `" +
                         (i < t.size() ? t[i] : std::string("end")) + "`");
    formula f;
    f.k = formula::node::atom;
    bool cmp = at("==");
    if (cmp) {
      ++i;
      std::vector<std::string> rhs = run_until(false);
      if (rhs.empty()) throw engine_error("goal formula: == needs a value");
      f.rhs = join(rhs);
    }
    if (lhs.size() == 1) {
      const std::string& s = lhs[0];
      std::size_t dot = s.rfind('.');
      if (dot != std::string::npos && dot > 0 && dot + 1 < s.size()) {
        f.path = s.substr(0, dot);
        f.prop = s.substr(dot + 1);
      } else {
        f.prop = s;
      }
    } else {
      if (cmp)
        throw engine_error(
            "goal formula: the left side of == names a property or "
            "component, got `" +
            join(lhs) + "`");
      f.rhs = join(lhs);  // whole-stage pattern
    }
    return f;
  }
};

// ------------------------------------------------------------------ world

// One explorable universe: interned stages addressed by slot.
struct world {
  virtual ~world() = default;
  virtual std::string name() const = 0;
  virtual int init() = 0;
  virtual const std::string& key(int slot) const = 0;
  virtual std::vector<int> succs(int slot) = 0;
  virtual std::string sort_name(int slot) = 0;
  virtual bool box(int slot) = 0;
  virtual std::map<std::string, std::string> annots(int slot) = 0;
  virtual void resolve_atom(formula& f) = 0;
  virtual bool atom(int slot, const formula& f) = 0;
};

void resolve_all(world& w, formula& f) {
  if (f.k == formula::node::atom) {
    w.resolve_atom(f);
    return;
  }
  for (auto& kid : f.kids) resolve_all(w, kid);
}

bool holds(world& w, int slot, const formula& f) {
  switch (f.k) {
    case formula::node::conj:
      return holds(w, slot, f.kids[0]) && holds(w, slot, f.kids[1]);
    case formula::node::disj:
      return holds(w, slot, f.kids[0]) || holds(w, slot, f.kids[1]);
    case formula::node::neg:
      return !holds(w, slot, f.kids[0]);
    case formula::node::atom:
      return w.atom(slot, f);
  }
  return false;
}

term_ptr parse_ground(const module_data& m, const std::string& text,
                      const char* what) {
  std::vector<diagnostic> ds;
  term_ptr t = parse_term_text(m, text, ds);
  if (!t) {
    std::string why = ds.empty() ? "does not parse" : ds.front().message;
    throw engine_error(std::string(what) + " `" + text + "` in " + m.name +
                       ": " + why);
  }
  return t;
}

// Composed and atomic systems, stepped by the synchronized semantics.
struct sys_world final : world {
  system_ptr root;
  std::vector<system_ptr> lvs;
  std::vector<cstage> pool;
  std::vector<std::string> keys;
  std::map<std::string, int> slot_of;
  std::map<const module_data*, std::shared_ptr<evaluator>> evs;

  struct prow {
    std::string display;
    system_ptr owner;
    std::size_t off, len;
    std::string prop;
    const signature* psig;
  };
  std::vector<prow> rows;

  explicit sys_world(system_ptr s) : root(std::move(s)) {
    lvs = leaves_of(root);
    std::map<std::string, int> mult;
    std::function<void(const system_ptr&, std::size_t)> visit =
        [&](const system_ptr& n, std::size_t off) {
          if (n->atomic()) {
            const signature& sg = n->mod->sig;
            for (op_id o = 0; o < sg.op_count(); ++o)
              if (sg.op(o).is_prop)
                rows.push_back(
                    {sg.op(o).pieces.front(), n, off, 1,
                     sg.op(o).pieces.front(), &sg});
            return;
          }
          for (const auto& e : n->exports)
            rows.push_back({e.name, n, off,
                            static_cast<std::size_t>(n->leaf_count()), e.name,
                            &n->synth->sig});
          std::size_t o = off;
          for (const auto& c : n->children) {
            visit(c, o);
            o += c->leaf_count();
          }
        };
    visit(root, 0);
    for (const auto& r : rows) ++mult[r.display];
    for (auto& r : rows)
      if (mult[r.display] > 1) r.display = r.owner->name + "." + r.display;
  }

  evaluator& ev_for(const module_data& m) {
    auto& e = evs[&m];
    if (!e) e = std::make_shared<evaluator>(m);
    return *e;
  }

  int intern(cstage st) {
    std::string k = serialize_stage(root, st);
    auto it = slot_of.find(k);
    if (it != slot_of.end()) return it->second;
    int slot = static_cast<int>(pool.size());
    pool.push_back(std::move(st));
    keys.push_back(std::move(k));
    slot_of.emplace(keys.back(), slot);
    return slot;
  }

  std::string name() const override { return root->name; }
  int init() override { return intern(init_stage(root)); }
  const std::string& key(int slot) const override { return keys[slot]; }

  std::vector<int> succs(int slot) override {
    std::vector<int> out;
    for (auto& s : composed_successors(root, pool[slot]))
      out.push_back(intern(std::move(s)));
    return out;
  }

  bool box(int slot) override {
    for (std::size_t i = 0; i < lvs.size(); ++i) {
      const signature& sg = lvs[i]->mod->sig;
      if (sg.trans_sort == no_sort) continue;
      if (sg.leq(lvs[i]->ev->least_sort(pool[slot][i]), sg.trans_sort))
        return true;
    }
    return false;
  }

  std::string sort_name(int slot) override {
    if (root->atomic()) {
      const signature& sg = root->mod->sig;
      return sg.sort(root->ev->least_sort(pool[slot][0])).name;
    }
    return box(slot) ? "Trans" : "State";
  }

  std::map<std::string, std::string> annots(int slot) override {
    std::map<std::string, std::string> out;
    print_options po;
    po.strip_qualifiers = true;
    for (const auto& r : rows) {
      cstage slice(pool[slot].begin() + r.off,
                   pool[slot].begin() + r.off + r.len);
      auto v = eval_node_prop(r.owner, r.prop, slice);
      out[r.display] = v ? print_term(*r.psig, *v, po) : "UNDEFINED";
    }
    return out;
  }

  // Property rows of one node, by name.
  static const op_info* prop_of(const system_node& n, const std::string& p) {
    if (n.atomic()) {
      const signature& sg = n.mod->sig;
      for (op_id o = 0; o < sg.op_count(); ++o)
        if (sg.op(o).is_prop && sg.op(o).pieces.front() == p)
          return &sg.op(o);
    }
    return nullptr;
  }
  static const exported_prop* export_of(const system_node& n,
                                        const std::string& p) {
    for (const auto& e : n.exports)
      if (e.name == p) return &e;
    return nullptr;
  }

  void resolve_atom(formula& f) override {
    // `X == term` where X is a component: pattern on that component
    if (!f.rhs.empty() && f.path.empty() && !f.prop.empty()) {
      bool is_prop = root->atomic() ? prop_of(*root, f.prop) != nullptr
                                    : export_of(*root, f.prop) != nullptr;
      if (!is_prop) {
        std::string why;
        if (auto p = resolve_component(*root, f.prop, why)) {
          f.path = f.prop;
          f.prop.clear();
          f.rpath = *p;
        } else if (!root->atomic()) {
          throw engine_error("goal: `" + f.prop + "` is neither a property " +
                             "nor a component of " + root->name);
        }
      }
    }

    if (!f.prop.empty()) {  // property atom, possibly under a path
      system_ptr owner = root;
      f.rpath.clear();
      if (!f.path.empty()) {
        std::string why;
        auto p = resolve_component(*root, f.path, why);
        if (!p) {
          if (f.rhs.empty() && root->atomic()) {
            // a qualified constant, not a component: whole-stage pattern
            f.rpattern =
                parse_ground(*root->mod, f.path + "." + f.prop, "goal");
            f.form = formula::shape::pattern_check;
            return;
          }
          throw engine_error("goal: component " + f.path + " in " +
                             root->name + ": " + why);
        }
        f.rpath = *p;
        owner = node_at(root, *p);
      }
      const op_info* po = prop_of(*owner, f.prop);
      const exported_prop* ep = owner->atomic() ? nullptr : export_of(*owner, f.prop);
      if (!po && !ep) {
        if (f.path.empty() && f.rhs.empty() && root->atomic()) {
          f.rpattern = parse_ground(*root->mod, f.prop, "goal");
          f.form = formula::shape::pattern_check;
          return;
        }
        throw engine_error("goal: " + owner->name + " has no property " +
                           f.prop);
      }
      const module_data& owner_mod = owner->atomic() ? *owner->mod : *owner->synth;
      if (f.rhs.empty()) {
        std::string cod =
            po ? owner_mod.sig.sort(po->prop_codomain).name : ep->codomain_name;
        if (cod != "Bool")
          throw engine_error("goal: property " + f.prop + " : " + cod +
                             " needs a comparison value");
      } else {
        f.rvalue = ev_for(owner_mod).normalize(
            parse_ground(owner_mod, f.rhs, "goal value"));
        if (has_vars(f.rvalue))
          throw engine_error("goal value `" + f.rhs + "` has variables");
      }
      f.form = formula::shape::prop_check;
      return;
    }

    // stage pattern
    system_ptr owner = root;
    if (!f.path.empty()) {
      std::string why;
      auto p = resolve_component(*root, f.path, why);
      if (!p)
        throw engine_error("goal: component " + f.path + " in " + root->name +
                           ": " + why);
      f.rpath = *p;
      owner = node_at(root, *p);
    }
    if (!owner->atomic())
      throw engine_error("goal: stage patterns match one atomic component; " +
                         owner->name + " is composed");
    f.rpattern = parse_ground(*owner->mod, f.rhs, "goal");
    f.form = formula::shape::pattern_check;
  }

  bool atom(int slot, const formula& f) override {
    system_ptr owner = f.rpath.empty() ? root : node_at(root, f.rpath);
    std::size_t off = slice_offset(*root, f.rpath);
    if (f.form == formula::shape::prop_check) {
      cstage slice(pool[slot].begin() + off,
                   pool[slot].begin() + off + owner->leaf_count());
      auto v = eval_node_prop(owner, f.prop, slice);
      if (!v) return false;
      if (f.rvalue) return term_eq(*v, f.rvalue);
      return (*v)->tag == term_tag::bool_lit && (*v)->bval;
    }
    const term_ptr& stage = pool[slot][off];
    return !match(owner->mod->sig, f.rpattern, stage, *owner->ev).empty();
  }
};

// Plain or atomic egalitarian modules, stepped by their own rules.
struct mod_world final : world {
  const module_data& m;
  evaluator ev;
  std::vector<term_ptr> pool;
  std::vector<std::string> keys;
  std::map<std::string, int> slot_of;
  print_options po;

  explicit mod_world(const module_data& mod) : m(mod), ev(mod) {
    po.strip_qualifiers = true;
  }

  int intern(term_ptr t) {
    std::string k = print_term(m.sig, t, po);
    auto it = slot_of.find(k);
    if (it != slot_of.end()) return it->second;
    int slot = static_cast<int>(pool.size());
    pool.push_back(std::move(t));
    keys.push_back(std::move(k));
    slot_of.emplace(keys.back(), slot);
    return slot;
  }

  std::string name() const override { return m.name; }

  int init() override {
    term_ptr nf = ev.normalize(parse_ground(m, "init", "initial stage"));
    if (m.sig.sort(ev.least_sort(nf)).is_kind_top)
      throw engine_error(m.name + ": init does not reduce to a stage (got " +
                         print_term(m.sig, nf, po) + ")");
    return intern(nf);
  }

  const std::string& key(int slot) const override { return keys[slot]; }

  std::vector<int> succs(int slot) override {
    std::vector<int> out;
    auto ts = m.plain ? plain_successors(ev, pool[slot])
                      : half_successors(ev, pool[slot]);
    for (auto& t : ts) out.push_back(intern(std::move(t)));
    return out;
  }

  bool box(int slot) override {
    return m.sig.trans_sort != no_sort &&
           m.sig.leq(ev.least_sort(pool[slot]), m.sig.trans_sort);
  }

  std::string sort_name(int slot) override {
    return m.sig.sort(ev.least_sort(pool[slot])).name;
  }

  bool defined(const term_ptr& nf, sort_id codomain) {
    return !has_vars(nf) && m.sig.leq(ev.least_sort(nf), codomain);
  }

  std::map<std::string, std::string> annots(int slot) override {
    std::map<std::string, std::string> out;
    sort_id ls = ev.least_sort(pool[slot]);
    for (op_id o = 0; o < m.sig.op_count(); ++o) {
      const op_info& oi = m.sig.op(o);
      if (!oi.is_prop || !m.sig.same_kind(oi.args[0], ls)) continue;
      term_ptr nf = ev.normalize(mk_app(o, {pool[slot]}));
      out[oi.pieces.front()] = defined(nf, oi.prop_codomain)
                                   ? print_term(m.sig, nf, po)
                                   : "UNDEFINED";
    }
    return out;
  }

  void resolve_atom(formula& f) override {
    if (!f.prop.empty()) {
      std::string full = f.path.empty() ? f.prop : f.path + "." + f.prop;
      for (const std::string& want : {full, f.prop}) {
        f.rops.clear();
        for (op_id o = 0; o < m.sig.op_count(); ++o)
          if (m.sig.op(o).is_prop && m.sig.op(o).pieces.front() == want)
            f.rops.push_back(o);
        if (!f.rops.empty()) break;
      }
      if (!f.rops.empty()) {
        if (f.rhs.empty()) {
          for (op_id o : f.rops)
            if (m.sig.op(o).prop_codomain != m.sig.bool_sort)
              throw engine_error(
                  "goal: property " + full + " : " +
                  m.sig.sort(m.sig.op(o).prop_codomain).name +
                  " needs a comparison value");
        } else {
          f.rvalue = ev.normalize(parse_ground(m, f.rhs, "goal value"));
          if (has_vars(f.rvalue))
            throw engine_error("goal value `" + f.rhs + "` has variables");
        }
        f.form = formula::shape::prop_check;
        return;
      }
      if (!f.rhs.empty())
        throw engine_error("goal: " + m.name + " has no property " + full);
      f.rpattern = parse_ground(m, full, "goal");
      f.form = formula::shape::pattern_check;
      return;
    }
    f.rpattern = parse_ground(m, f.rhs, "goal");
    f.form = formula::shape::pattern_check;
  }

  bool atom(int slot, const formula& f) override {
    const term_ptr& t = pool[slot];
    if (f.form == formula::shape::prop_check) {
      sort_id ls = ev.least_sort(t);
      for (op_id o : f.rops) {
        if (!m.sig.same_kind(m.sig.op(o).args[0], ls)) continue;
        term_ptr nf = ev.normalize(mk_app(o, {t}));
        if (!defined(nf, m.sig.op(o).prop_codomain)) return false;
        if (f.rvalue) return term_eq(nf, f.rvalue);
        return nf->tag == term_tag::bool_lit && nf->bval;
      }
      return false;  // no row at this node's kind: undefined
    }
    return !match(m.sig, f.rpattern, t, ev).empty();
  }
};

// ------------------------------------------------------------------- walk

struct run_out {
  state_graph g;
  int hit = -1;  // node id where pred first held
};

run_out run(world& w, const explore_bounds& b, const formula* pred) {
  run_out out;
  state_graph& g = out.g;
  g.system = w.name();
  long cap = std::max(1L, b.max_nodes);
  std::map<int, int> id_of;  // slot -> node id

  auto admit = [&](int slot, int parent, int depth) {
    int id = static_cast<int>(g.nodes.size());
    id_of[slot] = id;
    g.nodes.push_back(w.key(slot));
    g.sorts.push_back(w.sort_name(slot));
    g.boxes.push_back(w.box(slot) ? 1 : 0);
    g.props.push_back(b.annotate ? w.annots(slot)
                                 : std::map<std::string, std::string>{});
    g.parents.push_back(parent);
    g.depths.push_back(depth);
    if (pred && out.hit < 0 && holds(w, slot, *pred)) out.hit = id;
  };

  int start = w.init();
  admit(start, -1, 0);
  bool cut = false;
  long expanded = 0;
  if (out.hit < 0) {
    std::vector<int> level{start};
    int depth = 0;
    while (!level.empty()) {
      if (b.max_depth >= 0 && depth >= b.max_depth) {
        cut = true;
        break;
      }
      // expand the whole level, collecting new stages keyed by serialization
      std::map<std::string, std::pair<int, int>> found;  // key -> slot, parent
      std::vector<std::pair<int, int>> pend;             // from id -> slot
      for (int slot : level) {
        int from = id_of[slot];
        std::vector<int> ss;
        try {
          ss = w.succs(slot);
        } catch (const engine_error& e) {
          throw engine_error(std::string(e.what()) + "\n  while expanding " +
                             w.key(slot));
        }
        for (int s : ss) {
          auto it = id_of.find(s);
          if (it != id_of.end()) {
            g.edges.emplace_back(from, it->second);
          } else {
            found.emplace(w.key(s), std::make_pair(s, from));
            pend.emplace_back(from, s);
          }
        }
        ++expanded;
      }
      // admit the next level in serialization order, up to the node budget
      std::vector<int> next;
      for (const auto& [k, sp] : found) {
        if (static_cast<long>(g.nodes.size()) >= cap) {
          cut = true;
          break;
        }
        admit(sp.first, sp.second, depth + 1);
        next.push_back(sp.first);
        if (out.hit >= 0) break;
      }
      for (const auto& [from, slot] : pend) {
        auto it = id_of.find(slot);
        if (it != id_of.end()) g.edges.emplace_back(from, it->second);
      }
      if (out.hit >= 0 || cut) break;
      level = std::move(next);
      ++depth;
    }
  }
  g.frontier = static_cast<long>(g.nodes.size()) - expanded;
  g.truncated = cut || g.frontier > 0;
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return out;
}

std::vector<std::string> chain(const state_graph& g, int id) {
  std::vector<std::string> trace;
  for (int n = id; n >= 0; n = g.parents[n]) trace.push_back(g.nodes[n]);
  std::reverse(trace.begin(), trace.end());
  return trace;
}

verdict invariant_run(world& w, const std::string& text,
                      const explore_bounds& b) {
  formula f = parse_formula(text);
  resolve_all(w, f);
  formula violated;
  violated.k = formula::node::neg;
  violated.kids.push_back(std::move(f));
  explore_bounds eb = b;
  eb.annotate = false;
  run_out r = run(w, eb, &violated);
  verdict v;
  v.nodes = static_cast<long>(r.g.nodes.size());
  if (r.hit >= 0) {
    v.k = verdict::kind::violated;
    v.trace = chain(r.g, r.hit);
  } else {
    v.k = r.g.truncated ? verdict::kind::holds_within_bounds
                        : verdict::kind::holds_exhaustive;
  }
  return v;
}

search_result search_run(world& w, const std::string& text,
                         const explore_bounds& b) {
  formula f = parse_formula(text);
  resolve_all(w, f);
  explore_bounds eb = b;
  eb.annotate = false;
  run_out r = run(w, eb, &f);
  search_result s;
  s.nodes = static_cast<long>(r.g.nodes.size());
  if (r.hit >= 0) {
    s.found = true;
    s.trace = chain(r.g, r.hit);
  } else {
    s.truncated = r.g.truncated;
  }
  return s;
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

formula parse_formula(const std::string& text) {
  auto toks = formula_tokens(text);
  if (toks.empty()) throw engine_error("goal formula is empty");
  formula_parser p{toks};
  formula f = p.disj();
  if (p.i != toks.size())
    throw engine_error("goal formula: trailing `" + toks[p.i] + "`");
  return f;
}

state_graph explore(const system_ptr& sys, const explore_bounds& b) {
  sys_world w(sys);
  return run(w, b, nullptr).g;
}

state_graph explore(const module_data& m, const explore_bounds& b) {
  mod_world w(m);
  return run(w, b, nullptr).g;
}

verdict check_invariant(const system_ptr& sys, const std::string& formula_text,
                        const explore_bounds& b) {
  sys_world w(sys);
  return invariant_run(w, formula_text, b);
}

verdict check_invariant(const module_data& m, const std::string& formula_text,
                        const explore_bounds& b) {
  mod_world w(m);
  return invariant_run(w, formula_text, b);
}

search_result search(const system_ptr& sys, const std::string& goal_text,
                     const explore_bounds& b) {
  sys_world w(sys);
  return search_run(w, goal_text, b);
}

search_result search(const module_data& m, const std::string& goal_text,
                     const explore_bounds& b) {
  mod_world w(m);
  return search_run(w, goal_text, b);
}

std::vector<int> deadlocks(const state_graph& g) {
  std::vector<char> out_deg(g.nodes.size(), 0);
  for (const auto& [from, to] : g.edges) out_deg[from] = 1;
  std::vector<int> dead;
  long expanded = static_cast<long>(g.nodes.size()) - g.frontier;
  for (long i = 0; i < expanded; ++i)
    if (!out_deg[i]) dead.push_back(static_cast<int>(i));
  return dead;
}

graph_diff graphs_equal(const state_graph& a, const state_graph& b) {
  graph_diff d;
  auto fail = [&](std::string why) {
    d.equal = false;
    d.report = std::move(why);
    return d;
  };
  if (a.nodes.empty() || b.nodes.empty()) {
    if (a.nodes.empty() != b.nodes.empty()) return fail("one graph is empty");
    return d;
  }
  if (a.nodes[a.init] != b.nodes[b.init])
    return fail("initial stages differ: " + a.nodes[a.init] + " vs " +
                b.nodes[b.init]);
  std::set<std::string> an(a.nodes.begin(), a.nodes.end());
  std::set<std::string> bn(b.nodes.begin(), b.nodes.end());
  for (const auto& k : an)
    if (!bn.count(k)) return fail("node only in the first graph: " + k);
  for (const auto& k : bn)
    if (!an.count(k)) return fail("node only in the second graph: " + k);
  auto edge_keys = [](const state_graph& g) {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& [f, t] : g.edges) out.emplace(g.nodes[f], g.nodes[t]);
    return out;
  };
  auto ae = edge_keys(a), be = edge_keys(b);
  for (const auto& e : ae)
    if (!be.count(e))
      return fail("edge only in the first graph: " + e.first + " -> " +
                  e.second);
  for (const auto& e : be)
    if (!ae.count(e))
      return fail("edge only in the second graph: " + e.first + " -> " +
                  e.second);
  std::map<std::string, const std::map<std::string, std::string>*> ap, bp;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) ap[a.nodes[i]] = &a.props[i];
  for (std::size_t i = 0; i < b.nodes.size(); ++i) bp[b.nodes[i]] = &b.props[i];
  for (const auto& [k, pa] : ap) {
    const auto* pb = bp.at(k);
    if (*pa != *pb) {
      for (const auto& [name, va] : *pa) {
        auto it = pb->find(name);
        if (it == pb->end())
          return fail("node " + k + ": property " + name +
                      " only in the first graph");
        if (it->second != va)
          return fail("node " + k + ": property " + name + " is " + va +
                      " vs " + it->second);
      }
      for (const auto& [name, vb] : *pb)
        if (!pa->count(name))
          return fail("node " + k + ": property " + name +
                      " only in the second graph");
    }
  }
  return d;
}

std::string to_dot(const state_graph& g) {
  std::ostringstream os;
  os << "digraph \"" << dot_escape(g.system) << "\" {\n";
  os << "  rankdir=LR;\n";
  os << "  label=\"" << dot_escape(g.system) << (g.truncated ? " (truncated)" : "")
     << "\";\n";
  os << "  start [shape=point, label=\"\"];\n";
  os << "  start -> n" << g.init << ";\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    bool box = i < g.boxes.size() ? g.boxes[i] != 0
                                  : (i < g.sorts.size() && g.sorts[i] == "Trans");
    os << "  n" << i << " [label=\"" << dot_escape(g.nodes[i]) << "\", shape="
       << (box ? "box" : "ellipse") << "];\n";
  }
  for (const auto& [from, to] : g.edges)
    os << "  n" << from << " -> n" << to << ";\n";
  os << "}\n";
  return os.str();
}

std::string to_json(const state_graph& g) {
  nlohmann::json j;
  j["schema"] = 1;
  j["system"] = g.system;
  j["init"] = g.init;
  j["truncated"] = g.truncated;
  j["frontier"] = g.frontier;
  j["nodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    nlohmann::json n;
    n["id"] = i;
    n["term"] = g.nodes[i];
    n["sort"] = i < g.sorts.size() ? g.sorts[i] : "";
    n["props"] = nlohmann::json::object();
    if (i < g.props.size())
      for (const auto& [k, v] : g.props[i]) n["props"][k] = v;
    j["nodes"].push_back(std::move(n));
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& [from, to] : g.edges)
    j["edges"].push_back(nlohmann::json::array({from, to}));
  return j.dump(2) + "\n";
}

state_graph parse_graph(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw engine_error(std::string("graph file: ") + e.what());
  }
  try {
    if (j.at("schema").get<int>() != 1)
      throw engine_error("graph file: unsupported schema");
    state_graph g;
    g.system = j.at("system").get<std::string>();
    g.init = j.at("init").get<int>();
    g.truncated = j.at("truncated").get<bool>();
    g.frontier = j.at("frontier").get<long>();
    for (const auto& n : j.at("nodes")) {
      if (static_cast<std::size_t>(n.at("id").get<int>()) != g.nodes.size())
        throw engine_error("graph file: node ids must be dense and in order");
      g.nodes.push_back(n.at("term").get<std::string>());
      g.sorts.push_back(n.at("sort").get<std::string>());
      std::map<std::string, std::string> ps;
      for (const auto& [k, v] : n.at("props").items())
        ps[k] = v.get<std::string>();
      g.props.push_back(std::move(ps));
    }
    for (const auto& e : j.at("edges"))
      g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    for (const auto& [from, to] : g.edges)
      if (from < 0 || to < 0 || from >= static_cast<int>(g.nodes.size()) ||
          to >= static_cast<int>(g.nodes.size()))
        throw engine_error("graph file: edge endpoint out of range");
    if (g.init < 0 || (g.init > 0 && g.init >= static_cast<int>(g.nodes.size())))
      throw engine_error("graph file: init out of range");
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw engine_error(std::string("graph file: ") + e.what());
  }
}

}  // namespace ers
