#include "ers/split.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ers/diag.hpp"
#include "ers/parse.hpp"

namespace ers {

namespace {

// Rebuilds statement terms in another signature: sorts and operators are
// remapped by id, variables optionally renamed.
struct stmt_map {
  const std::vector<sort_id>& smap;
  const std::vector<op_id>& omap;
  const std::map<std::string, std::string>* vren = nullptr;

  term_ptr term(const term_ptr& t) const {
    switch (t->tag) {
      case term_tag::int_lit:
      case term_tag::bool_lit:
        return t;
      case term_tag::var: {
        std::string name = t->vname;
        if (vren) {
          auto it = vren->find(name);
          if (it != vren->end()) name = it->second;
        }
        return mk_var(std::move(name), smap[t->vsort]);
      }
      case term_tag::app: {
        std::vector<term_ptr> args;
        args.reserve(t->args.size());
        for (const auto& a : t->args) args.push_back(term(a));
        return mk_app(omap[t->op], std::move(args));
      }
    }
    return t;
  }

  condition cond(const condition& c) const {
    condition out;
    out.k = c.k;
    out.lhs = term(c.lhs);
    if (c.rhs) out.rhs = term(c.rhs);
    if (c.sort != no_sort) out.sort = smap[c.sort];
    return out;
  }

  std::vector<condition> conds(const std::vector<condition>& cs) const {
    std::vector<condition> out;
    out.reserve(cs.size());
    for (const auto& c : cs) out.push_back(cond(c));
    return out;
  }
};

// Cover pairs of the proper-sort order (every declared or implied subsort
// edge with nothing strictly between).
std::vector<std::pair<sort_id, sort_id>> cover_pairs(const signature& sig) {
  std::vector<std::pair<sort_id, sort_id>> out;
  for (sort_id a = 0; a < sig.sort_count(); ++a) {
    if (sig.sort(a).is_kind_top) continue;
    for (sort_id b = 0; b < sig.sort_count(); ++b) {
      if (a == b || sig.sort(b).is_kind_top || !sig.leq(a, b)) continue;
      bool cover = true;
      for (sort_id c = 0; c < sig.sort_count() && cover; ++c)
        if (c != a && c != b && !sig.sort(c).is_kind_top && sig.leq(a, c) &&
            sig.leq(c, b))
          cover = false;
      if (cover) out.emplace_back(a, b);
    }
  }
  return out;
}

}  // namespace

module_data split_atomic(const module_data& m) {
  if (m.plain)
    throw engine_error("module " + m.name + " is already plain");
  const signature& sig = m.sig;

  std::string prime = "State'";
  while (sig.find_sort(prime)) prime += "'";

  auto rename = [&](const std::string& n) -> std::string {
    if (n == "State") return prime;
    if (n == "Stage") return "State";
    return n;
  };
  auto new_ref = [&](sort_id s) -> std::string {
    const sort_info& si = sig.sort(s);
    if (si.is_kind_top)
      return "[" + rename(si.name.substr(1, si.name.size() - 2)) + "]";
    return rename(si.name);
  };

  signature_builder nb = prelude_builder(true);
  op_id pops = static_cast<op_id>(nb.ops().size());
  sort_id eg_psorts =
      static_cast<sort_id>(prelude_builder(false).sort_names().size());

  nb.add_sort(prime);
  nb.add_sort("Trans");
  for (sort_id s = eg_psorts; s < sig.sort_count(); ++s)
    if (!sig.sort(s).is_kind_top) nb.add_sort(rename(sig.sort(s).name));
  for (auto& [lo, hi] : cover_pairs(sig))
    nb.add_subsort(new_ref(lo), new_ref(hi));

  for (op_id o = pops; o < sig.op_count(); ++o) {
    const op_info& oi = sig.op(o);
    signature_builder::op_decl d;
    d.name = oi.name;
    for (sort_id a : oi.args) d.args.push_back(new_ref(a));
    d.result = new_ref(oi.result);
    d.assoc = oi.assoc;
    d.comm = oi.comm;
    d.identity_term = oi.identity;  // operator ids line up, see below
    d.prec = oi.prec;
    d.is_prop = oi.is_prop;
    if (oi.is_prop) {
      d.prop_codomain = rename(sig.sort(oi.prop_codomain).name);
      d.prop_total = oi.prop_total;
    }
    d.builtin = oi.builtin;
    d.synthesized = oi.synthesized;
    nb.add_op(std::move(d));
  }

  module_data out;
  out.name = m.name;
  out.plain = true;
  out.sig = *nb.build();

  // Both preludes declare the same operators in the same order and user
  // operators were copied in order, so operator ids carry over unchanged
  // (which also keeps identity terms valid). Sorts are remapped by name.
  if (out.sig.op_count() != sig.op_count())
    throw engine_error("split of " + m.name + " lost operators");
  std::vector<sort_id> smap(sig.sort_count(), no_sort);
  for (sort_id s = 0; s < sig.sort_count(); ++s) {
    auto f = out.sig.find_sort(new_ref(s));
    if (!f) throw engine_error("split of " + m.name + " lost sort " +
                               sig.sort(s).name);
    smap[s] = *f;
  }
  std::vector<op_id> omap(sig.op_count());
  for (op_id o = 0; o < sig.op_count(); ++o) omap[o] = o;
  stmt_map tr{smap, omap};

  for (const equation& e : m.eqs)
    out.eqs.push_back(
        {tr.term(e.lhs), tr.term(e.rhs), tr.conds(e.cond), e.owise, e.label});
  for (const membership& mb : m.mbs)
    out.mbs.push_back({tr.term(mb.subject), smap[mb.sort], tr.conds(mb.cond)});
  for (const eg_rule& r : m.rules) {
    out.prules.push_back({tr.term(r.lhs), tr.term(r.label), tr.conds(r.cond)});
    out.prules.push_back({tr.term(r.label), tr.term(r.rhs), tr.conds(r.cond)});
  }
  out.finalize();
  return out;
}

module_data split_system(const system_ptr& sys, split_report& rep) {
  if (sys->atomic()) return split_atomic(*sys->mod);

  const std::vector<system_ptr> leaves = leaves_of(sys);
  const int n = static_cast<int>(leaves.size());
  if (n >= 31) throw engine_error("too many members to split");

  std::vector<std::string> lnames;
  std::map<const system_node*, int> leaf_index;
  {
    std::set<std::string> seen;
    for (int i = 0; i < n; ++i) {
      const std::string& nm = leaves[i]->name;
      if (!seen.insert(nm).second)
        throw engine_error("members of " + sys->name +
                           " must have distinct names: " + nm);
      lnames.push_back(nm);
      leaf_index[leaves[i].get()] = i;
    }
  }

  std::vector<module_data> parts;
  parts.reserve(n);
  for (int i = 0; i < n; ++i) {
    auto ws = check_topmost(*leaves[i]->mod);
    if (!ws.empty())
      throw engine_error("member " + lnames[i] +
                         " keeps stages below the top: " + ws.front().message);
    parts.push_back(split_atomic(*leaves[i]->mod));
  }

  // Composed nodes in tree order, and every criterion with its owner.
  std::vector<system_ptr> cnodes;
  std::vector<std::pair<system_ptr, const criterion*>> crits;
  {
    std::function<void(const system_ptr&)> walk = [&](const system_ptr& nd) {
      if (nd->atomic()) return;
      cnodes.push_back(nd);
      for (const criterion& c : nd->criteria) crits.emplace_back(nd, &c);
      for (const auto& ch : nd->children) walk(ch);
    };
    walk(sys);
  }

  struct prop_sig {
    std::string codomain;
    bool total = false;
    bool found = false;
  };
  auto prop_sig_of = [&](const system_ptr& nd,
                         const std::string& name) -> prop_sig {
    if (nd->atomic()) {
      const signature& s = nd->mod->sig;
      for (op_id o = 0; o < s.op_count(); ++o) {
        const op_info& oi = s.op(o);
        if (oi.is_prop && oi.pieces.front() == name)
          return {s.sort(oi.prop_codomain).name, oi.prop_total, true};
      }
    } else {
      for (const auto& e : nd->exports)
        if (e.name == name) return {e.codomain_name, e.total, true};
    }
    return {};
  };

  signature_builder nb = prelude_builder(true);
  const op_id pops = static_cast<op_id>(nb.ops().size());

  // Name planning: anything declared by two members, or shadowing the
  // tuple layer, keeps its owner's name as a qualifier.
  std::map<std::string, int> smult, omult, pmult;
  for (const module_data& p : parts) {
    std::set<std::string> sn, on, pn;
    for (sort_id s = 0; s < p.sig.sort_count(); ++s)
      if (!p.sig.sort(s).is_kind_top && !p.sig.is_data_sort(s))
        sn.insert(p.sig.sort(s).name);
    for (op_id o = pops; o < p.sig.op_count(); ++o) {
      const op_info& oi = p.sig.op(o);
      if (oi.is_prop)
        pn.insert(oi.pieces.front());
      else
        on.insert(oi.name);
    }
    for (const auto& x : sn) ++smult[x];
    for (const auto& x : on) ++omult[x];
    for (const auto& x : pn) ++pmult[x];
  }
  for (const auto& nd : cnodes)
    for (const auto& e : nd->exports) ++pmult[e.name];

  std::string tuple_name = "<_";
  for (int i = 1; i < n; ++i) tuple_name += ",_";
  tuple_name += ">";
  omult[tuple_name] += 2;

  auto qual_sort = [&](int i, const std::string& nm) -> std::string {
    if (nm == "Bool" || nm == "Int") return nm;
    return smult[nm] >= 2 ? lnames[i] + "." + nm : nm;
  };
  auto prefix_name = [&](const std::string& owner, const std::string& name) {
    std::size_t k = 0;
    while (k < name.size() && (name[k] == '_' || name[k] == ' ')) ++k;
    if (k == name.size())
      throw engine_error("operator " + name + " of " + owner +
                         " cannot be qualified");
    return name.substr(0, k) + owner + "." + name.substr(k);
  };
  auto qual_prop = [&](const std::string& owner, const std::string& base) {
    return pmult[base] >= 2 ? owner + "." + base : base;
  };
  auto qual_op = [&](int i, const op_info& oi) -> std::string {
    if (oi.is_prop)
      return pmult[oi.pieces.front()] >= 2 ? prefix_name(lnames[i], oi.name)
                                           : oi.name;
    return omult[oi.name] >= 2 ? prefix_name(lnames[i], oi.name) : oi.name;
  };
  auto sref = [&](int i, sort_id s) -> std::string {
    const sort_info& si = parts[i].sig.sort(s);
    if (si.is_kind_top)
      return "[" + qual_sort(i, si.name.substr(1, si.name.size() - 2)) + "]";
    return qual_sort(i, si.name);
  };

  // agree rows, one per value sort compared by a partial criterion
  std::map<std::string, op_id> agree_of;
  for (auto& [owner, c] : crits) {
    if (c->total) continue;
    system_ptr le = node_at(owner, c->left_path);
    prop_sig ps = prop_sig_of(le, c->left_prop);
    if (!ps.found)
      throw engine_error("criterion property " + c->left_prop + " not found");
    std::string cd = le->atomic() ? qual_sort(leaf_index.at(le.get()),
                                              ps.codomain)
                                  : ps.codomain;
    if (agree_of.count(cd)) continue;
    signature_builder::op_decl d;
    d.name = "agree";
    d.args = {"[" + cd + "]", "[" + cd + "]"};
    d.result = "Bool";
    d.builtin = true;
    agree_of[cd] = static_cast<op_id>(nb.ops().size());
    nb.add_op(std::move(d));
  }

  for (int i = 0; i < n; ++i) {
    const signature& ps = parts[i].sig;
    for (sort_id s = 0; s < ps.sort_count(); ++s) {
      if (ps.sort(s).is_kind_top || ps.is_data_sort(s)) continue;
      std::string nm = qual_sort(i, ps.sort(s).name);
      if (!nb.has_sort(nm)) nb.add_sort(nm);
    }
  }
  for (int i = 0; i < n; ++i)
    for (auto& [lo, hi] : cover_pairs(parts[i].sig))
      nb.add_subsort(qual_sort(i, parts[i].sig.sort(lo).name),
                     qual_sort(i, parts[i].sig.sort(hi).name));

  std::vector<std::vector<op_id>> omap(n);
  std::vector<std::map<std::string, op_id>> leaf_prop(n);
  std::vector<op_id> leaf_init(n, no_op);
  for (int i = 0; i < n; ++i) {
    const signature& ps = parts[i].sig;
    omap[i].assign(ps.op_count(), no_op);
    for (op_id o = 0; o < pops; ++o) omap[i][o] = o;
    for (op_id o = pops; o < ps.op_count(); ++o) {
      const op_info& oi = ps.op(o);
      signature_builder::op_decl d;
      d.name = qual_op(i, oi);
      for (sort_id a : oi.args) d.args.push_back(sref(i, a));
      d.result = sref(i, oi.result);
      d.assoc = oi.assoc;
      d.comm = oi.comm;
      if (oi.identity) {
        if (oi.identity->tag == term_tag::app)
          d.identity = qual_op(i, ps.op(oi.identity->op));
        else
          d.identity_term = oi.identity;
      }
      d.prec = oi.prec;
      d.is_prop = oi.is_prop;
      if (oi.is_prop) {
        d.prop_codomain = qual_sort(i, ps.sort(oi.prop_codomain).name);
        d.prop_total = oi.prop_total;
      }
      d.synthesized = oi.synthesized;
      op_id id = static_cast<op_id>(nb.ops().size());
      nb.add_op(std::move(d));
      omap[i][o] = id;
      if (oi.is_prop) leaf_prop[i][oi.pieces.front()] = id;
    }
    signature_builder::op_decl d;
    d.name = lnames[i] + ".init";
    d.result = "[" + qual_sort(i, "State") + "]";
    leaf_init[i] = static_cast<op_id>(nb.ops().size());
    nb.add_op(std::move(d));
    omap[i][ps.ops_named("init").front()] = leaf_init[i];
  }

  op_id tuple_op = static_cast<op_id>(nb.ops().size());
  {
    signature_builder::op_decl d;
    d.name = tuple_name;
    for (int i = 0; i < n; ++i) d.args.push_back(qual_sort(i, "State"));
    d.result = "[State]";
    nb.add_op(std::move(d));
  }

  // Tuple-level property rows: every member property and every exported
  // property becomes a property of the product state.
  struct tuple_row {
    std::string base;
    int leaf = -1;        // owner member, or
    system_ptr node;      // owner composed node
    op_id row = no_op;    // tuple-level operator
    op_id member = no_op; // member-level operator (leaf rows)
  };
  std::vector<tuple_row> rows;
  for (int i = 0; i < n; ++i) {
    const signature& ps = parts[i].sig;
    for (op_id o = pops; o < ps.op_count(); ++o) {
      const op_info& oi = ps.op(o);
      if (!oi.is_prop) continue;
      signature_builder::op_decl d;
      d.name = qual_prop(lnames[i], oi.pieces.front()) + " @ _";
      d.args = {"[State]"};
      d.result = "[" + qual_sort(i, ps.sort(oi.prop_codomain).name) + "]";
      d.prec = 90;
      d.is_prop = true;
      d.prop_codomain = qual_sort(i, ps.sort(oi.prop_codomain).name);
      d.prop_total = oi.prop_total;
      tuple_row r;
      r.base = oi.pieces.front();
      r.leaf = i;
      r.row = static_cast<op_id>(nb.ops().size());
      r.member = leaf_prop[i].at(r.base);
      rows.push_back(std::move(r));
      nb.add_op(std::move(d));
    }
  }
  for (const auto& nd : cnodes) {
    for (const auto& e : nd->exports) {
      signature_builder::op_decl d;
      d.name = qual_prop(nd->name, e.name) + " @ _";
      d.args = {"[State]"};
      d.result = "[" + e.codomain_name + "]";
      d.prec = 90;
      d.is_prop = true;
      d.prop_codomain = e.codomain_name;
      d.prop_total = e.total;
      tuple_row r;
      r.base = e.name;
      r.node = nd;
      r.row = static_cast<op_id>(nb.ops().size());
      rows.push_back(std::move(r));
      nb.add_op(std::move(d));
    }
  }

  module_data out;
  out.name = sys->name;
  out.plain = true;
  out.sig = *nb.build();
  const signature& mg = out.sig;
  if (mg.state_sort == no_sort)
    throw engine_error("split of " + sys->name + " lost the State sort");

  std::vector<std::vector<sort_id>> smap(n);
  for (int i = 0; i < n; ++i) {
    const signature& ps = parts[i].sig;
    smap[i].assign(ps.sort_count(), no_sort);
    for (sort_id s = 0; s < ps.sort_count(); ++s) {
      const sort_info& si = ps.sort(s);
      std::string inner = si.is_kind_top
                              ? si.name.substr(1, si.name.size() - 2)
                              : si.name;
      auto f = mg.find_sort(qual_sort(i, inner));
      if (!f)
        throw engine_error("split of " + sys->name + " lost sort " + si.name +
                           " of " + lnames[i]);
      smap[i][s] = si.is_kind_top ? mg.top_of(*f) : *f;
    }
  }

  // One variable per member for the tuple-level statements, named after
  // the member where possible.
  std::vector<term_ptr> tvar(n);
  {
    std::set<std::string> used;
    for (int i = 0; i < n; ++i) {
      std::string pick;
      for (char ch : lnames[i]) {
        if (!std::isalpha(static_cast<unsigned char>(ch))) continue;
        std::string cand(1, static_cast<char>(
                               std::toupper(static_cast<unsigned char>(ch))));
        if (used.count(cand) || nb.has_op(cand)) continue;
        pick = cand;
        break;
      }
      for (int k = 0; pick.empty(); ++k) {
        std::string cand = "Q" + std::to_string(k);
        if (!used.count(cand) && !nb.has_op(cand)) pick = cand;
      }
      used.insert(pick);
      tvar[i] = mk_var(pick, *mg.find_sort(qual_sort(i, "State")));
    }
  }

  // A property of any tree node as a term over the tuple variables.
  std::set<std::pair<const system_node*, std::string>> busy;
  std::function<term_ptr(const system_ptr&, const std::string&)> prop_expr =
      [&](const system_ptr& nd, const std::string& name) -> term_ptr {
    if (nd->atomic()) {
      int i = leaf_index.at(nd.get());
      auto it = leaf_prop[i].find(name);
      if (it == leaf_prop[i].end())
        throw engine_error("property " + name + " not found in " + lnames[i]);
      return mk_app(it->second, {tvar[i]});
    }
    auto key = std::make_pair(nd.get(), name);
    if (!busy.insert(key).second)
      throw engine_error("export " + name + " of " + nd->name +
                         " routes through itself");
    const exported_prop* e = nullptr;
    for (const auto& x : nd->exports)
      if (x.name == name) e = &x;
    if (!e)
      throw engine_error("export " + name + " not found in " + nd->name);
    const signature& ss = nd->synth->sig;
    std::function<term_ptr(const term_ptr&)> tr =
        [&](const term_ptr& t) -> term_ptr {
      switch (t->tag) {
        case term_tag::int_lit:
        case term_tag::bool_lit:
          return t;
        case term_tag::var:
          throw engine_error("export " + name + " of " + nd->name +
                             " uses its stage directly");
        case term_tag::app:
          break;
      }
      const op_info& oi = ss.op(t->op);
      if (oi.is_prop) {
        const term_ptr& subj = t->args[0];
        if (subj->tag == term_tag::var)
          return prop_expr(nd, oi.pieces.front());
        if (subj->tag == term_tag::app)
          for (std::size_t j = 0; j < nd->projections.size(); ++j)
            if (subj->op == nd->projections[j])
              return prop_expr(nd->children[j], oi.pieces.front());
        throw engine_error("export " + name + " of " + nd->name +
                           " applies a property to a foreign subject");
      }
      if (oi.builtin) {
        for (op_id r : mg.ops_named(oi.name))
          if (mg.op(r).args.size() == t->args.size()) {
            std::vector<term_ptr> args;
            args.reserve(t->args.size());
            for (const auto& a : t->args) args.push_back(tr(a));
            return mk_app(r, std::move(args));
          }
        throw engine_error("export " + name + ": no operator " + oi.name);
      }
      throw engine_error("export " + name + " of " + nd->name +
                         " uses operator " + oi.name);
    };
    term_ptr r = tr(e->rhs);
    busy.erase(key);
    return r;
  };

  term_ptr tuple_pat;
  {
    std::vector<term_ptr> vs(tvar.begin(), tvar.end());
    tuple_pat = mk_app(tuple_op, std::move(vs));
  }

  // The compatibility membership: the tuple is a State when every
  // criterion holds; partial endpoints are compared with agree.
  {
    std::vector<condition> cc;
    for (auto& [owner, c] : crits) {
      system_ptr le = node_at(owner, c->left_path);
      system_ptr re = node_at(owner, c->right_path);
      term_ptr l = prop_expr(le, c->left_prop);
      term_ptr r = prop_expr(re, c->right_prop);
      std::string crit_text = c->left_name + "." + c->left_prop + " = " +
                              c->right_name + "." + c->right_prop;
      condition k;
      if (c->total) {
        k.lhs = l;
        k.rhs = r;
      } else {
        prop_sig ps = prop_sig_of(le, c->left_prop);
        std::string cd = le->atomic() ? qual_sort(leaf_index.at(le.get()),
                                                  ps.codomain)
                                      : ps.codomain;
        k.lhs = mk_app(agree_of.at(cd), {l, r});
        k.rhs = mk_bool(true);
        auto warn = [&](const system_ptr& end, const std::string& prop) {
          if (!prop_sig_of(end, prop).total)
            rep.warnings.push_back(
                "criterion " + crit_text + ": " + end->name + "." + prop +
                " is not declared total; the compatibility test passes "
                "wherever it is undefined");
        };
        warn(le, c->left_prop);
        warn(re, c->right_prop);
      }
      cc.push_back(std::move(k));
      rep.criteria.push_back(std::move(crit_text));
    }
    out.mbs.push_back({tuple_pat, mg.state_sort, std::move(cc)});
  }

  {
    std::vector<term_ptr> inits;
    for (int i = 0; i < n; ++i) inits.push_back(mk_app(leaf_init[i], {}));
    out.eqs.push_back({mk_app(mg.ops_named("init").front(), {}),
                       mk_app(tuple_op, std::move(inits)),
                       {},
                       false,
                       ""});
  }

  for (int i = 0; i < n; ++i) {
    stmt_map tm{smap[i], omap[i]};
    for (const equation& e : parts[i].eqs)
      out.eqs.push_back(
          {tm.term(e.lhs), tm.term(e.rhs), tm.conds(e.cond), e.owise, e.label});
    for (const membership& mb : parts[i].mbs)
      out.mbs.push_back(
          {tm.term(mb.subject), smap[i][mb.sort], tm.conds(mb.cond)});
  }

  {
    condition guard;
    guard.k = condition::kind::sort_test;
    guard.lhs = tuple_pat;
    guard.sort = mg.state_sort;
    for (const tuple_row& r : rows) {
      term_ptr rhs = r.leaf >= 0 ? mk_app(r.member, {tvar[r.leaf]})
                                 : prop_expr(r.node, r.base);
      out.eqs.push_back({mk_app(r.row, {tuple_pat}), rhs, {guard}, false, ""});
    }
  }

  // Product rules: pick one rule per member and a nonempty set of members
  // that fire; the others hold their rule's source. Conditions of
  // non-firing members are dropped, and both tuples must be States.
  {
    std::map<std::string, std::set<int>> var_leaves;
    std::set<std::string> const_names;
    for (const auto& d : nb.ops())
      if (d.args.empty()) const_names.insert(d.name);
    std::vector<std::map<std::string, std::string>> vren(n);
    for (int i = 0; i < n; ++i) {
      std::map<var_key, sort_id> vs;
      for (const plain_rule& r : parts[i].prules) {
        collect_vars(r.lhs, vs);
        collect_vars(r.rhs, vs);
        for (const condition& c : r.cond) {
          collect_vars(c.lhs, vs);
          if (c.rhs) collect_vars(c.rhs, vs);
        }
      }
      for (const auto& [k, s] : vs) var_leaves[k.first].insert(i);
    }
    for (int i = 0; i < n; ++i)
      for (const auto& [nm, owners] : var_leaves)
        if (owners.count(i) && (owners.size() >= 2 || const_names.count(nm)))
          vren[i][nm] = lnames[i] + "." + nm;

    struct half {
      term_ptr src, tgt;
      std::vector<condition> cond;
    };
    std::vector<std::vector<half>> R(n);
    for (int i = 0; i < n; ++i) {
      stmt_map tm{smap[i], omap[i], &vren[i]};
      for (const plain_rule& r : parts[i].prules)
        R[i].push_back({tm.term(r.lhs), tm.term(r.rhs), tm.conds(r.cond)});
      rep.member_rule_counts.push_back(static_cast<int>(R[i].size()));
    }
    rep.combinations = 1;
    for (int i = 0; i < n; ++i) rep.combinations *= R[i].size();

    auto rule_key = [&](const plain_rule& r) {
      std::string k = print_term(mg, r.lhs) + "=>" + print_term(mg, r.rhs);
      std::map<var_key, sort_id> vs;
      collect_vars(r.lhs, vs);
      for (const condition& c : r.cond) {
        switch (c.k) {
          case condition::kind::equality:
            k += "/\\" + print_term(mg, c.lhs) + "=" + print_term(mg, c.rhs);
            break;
          case condition::kind::matching:
            k += "/\\" + print_term(mg, c.lhs) + ":=" + print_term(mg, c.rhs);
            break;
          case condition::kind::sort_test:
            k += "/\\" + print_term(mg, c.lhs) + ":" + std::to_string(c.sort);
            break;
        }
        collect_vars(c.lhs, vs);
        if (c.rhs) collect_vars(c.rhs, vs);
      }
      for (const auto& [vk, s] : vs)
        k += "|" + vk.first + "#" + std::to_string(vk.second);
      return k;
    };

    std::set<std::string> seen;
    std::vector<std::size_t> pick(n, 0);
    bool more = rep.combinations > 0;
    while (more) {
      for (unsigned mask = 1; mask < (1u << n); ++mask) {
        plain_rule pr;
        std::vector<term_ptr> ls, rs;
        for (int i = 0; i < n; ++i) ls.push_back(R[i][pick[i]].src);
        for (int i = 0; i < n; ++i)
          rs.push_back(mask >> i & 1u ? R[i][pick[i]].tgt : R[i][pick[i]].src);
        pr.lhs = mk_app(tuple_op, std::move(ls));
        pr.rhs = mk_app(tuple_op, std::move(rs));
        for (int i = 0; i < n; ++i)
          if (mask >> i & 1u)
            for (const condition& c : R[i][pick[i]].cond)
              pr.cond.push_back(c);
        condition src_state, tgt_state;
        src_state.k = condition::kind::sort_test;
        src_state.lhs = pr.lhs;
        src_state.sort = mg.state_sort;
        tgt_state.k = condition::kind::sort_test;
        tgt_state.lhs = pr.rhs;
        tgt_state.sort = mg.state_sort;
        pr.cond.push_back(std::move(src_state));
        pr.cond.push_back(std::move(tgt_state));
        if (seen.insert(rule_key(pr)).second) out.prules.push_back(std::move(pr));
      }
      int i = n - 1;
      while (i >= 0 && ++pick[i] == R[i].size()) {
        pick[i] = 0;
        --i;
      }
      more = i >= 0;
    }
    rep.rules_generated = static_cast<int>(out.prules.size());
  }

  out.finalize();
  return out;
}

namespace {

enum class verdict { yes, no, unknown };

verdict decide_cond(evaluator& ev, const module_data& m, const condition& c,
                    int depth);

// Membership of an open term: a decision must hold on every instance, so
// yes needs one matching membership whose conditions all reduce to ground
// truths, and no needs every candidate to fail definitely.
verdict decide_sort_test(evaluator& ev, const module_data& m,
                         const term_ptr& t0, sort_id want, int depth) {
  term_ptr t = ev.normalize(t0);
  if (!has_vars(t))
    return m.sig.leq(ev.least_sort(t), want) ? verdict::yes : verdict::no;
  if (t->tag != term_tag::app) return verdict::unknown;
  const op_info& oi = m.sig.op(t->op);
  if (oi.builtin || !m.eqs_for(t->op).empty()) return verdict::unknown;
  bool open_ended = false;
  for (const membership& mb : m.mbs) {
    if (!m.sig.leq(mb.sort, want)) continue;
    auto subs = match(m.sig, mb.subject, t, ev);
    if (subs.empty()) {
      // an instance can only match where the constructor shape allows it
      if (mb.subject->tag == term_tag::app && mb.subject->op != t->op)
        continue;
      open_ended = true;
      continue;
    }
    for (const subst& s : subs) {
      bool all_yes = true;
      bool some_no = false;
      for (const condition& k : mb.cond) {
        condition inst;
        inst.k = k.k;
        inst.lhs = apply_subst(m.sig, s, k.lhs);
        if (k.rhs) inst.rhs = apply_subst(m.sig, s, k.rhs);
        inst.sort = k.sort;
        verdict v = decide_cond(ev, m, inst, depth + 1);
        if (v == verdict::no) {
          some_no = true;
          break;
        }
        if (v == verdict::unknown) all_yes = false;
      }
      if (some_no) continue;
      if (all_yes) return verdict::yes;
      open_ended = true;
    }
  }
  return open_ended ? verdict::unknown : verdict::no;
}

verdict decide_cond(evaluator& ev, const module_data& m, const condition& c,
                    int depth) {
  if (depth > 8) return verdict::unknown;
  switch (c.k) {
    case condition::kind::equality: {
      term_ptr l = ev.normalize(c.lhs);
      term_ptr r = ev.normalize(c.rhs);
      if (!has_vars(l) && !has_vars(r))
        return term_eq(l, r) ? verdict::yes : verdict::no;
      return verdict::unknown;
    }
    case condition::kind::matching: {
      term_ptr r = ev.normalize(c.rhs);
      if (has_vars(r)) return verdict::unknown;
      // a successful match binds variables, so only failure is conclusive
      return match(m.sig, c.lhs, r, ev).empty() ? verdict::no
                                                : verdict::unknown;
    }
    case condition::kind::sort_test:
      return decide_sort_test(ev, m, c.lhs, c.sort, depth);
  }
  return verdict::unknown;
}

}  // namespace

module_data prune_rules(const module_data& m, split_report& rep) {
  eval_options eo;
  eo.symbolic = true;
  evaluator ev(m, eo);
  module_data out = m;
  out.prules.clear();
  rep.pruned = true;
  for (const plain_rule& r : m.prules) {
    std::vector<condition> kept;
    int removed = 0;
    bool dead = false;
    for (const condition& c : r.cond) {
      verdict v = decide_cond(ev, m, c, 0);
      if (v == verdict::no) {
        dead = true;
        break;
      }
      if (v == verdict::yes)
        ++removed;
      else
        kept.push_back(c);
    }
    if (dead) {
      ++rep.rules_deleted;
      continue;
    }
    rep.conds_removed += removed;
    out.prules.push_back({r.lhs, r.rhs, std::move(kept)});
  }
  out.finalize();
  return out;
}

std::string render_split(const module_data& m, const std::string& source,
                         const split_report& rep) {
  std::ostringstream os;
  os << "--- split of " << source << "\n";
  if (!rep.criteria.empty()) {
    os << "--- criteria:";
    for (std::size_t i = 0; i < rep.criteria.size(); ++i)
      os << (i ? " /\\ " : " ") << rep.criteria[i];
    os << "\n";
  }
  if (!rep.member_rule_counts.empty()) {
    os << "--- rule combinations: " << rep.combinations << " (";
    for (std::size_t i = 0; i < rep.member_rule_counts.size(); ++i)
      os << (i ? " x " : "") << rep.member_rule_counts[i];
    os << "); product rules: " << rep.rules_generated << "\n";
  }
  if (rep.pruned)
    os << "--- pruned: " << rep.rules_deleted << " rules deleted, "
       << rep.conds_removed << " conditions removed\n";
  for (const auto& w : rep.warnings) os << "--- warning: " << w << "\n";
  os << print_module(m);
  return os.str();
}

}  // namespace ers
