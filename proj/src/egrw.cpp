#include "ers/egrw.hpp"

#include <algorithm>
#include <map>

namespace ers {

namespace {

void push_unique(const signature& sig, std::vector<term_ptr>& out,
                 const term_ptr& t) {
  for (const auto& u : out)
    if (term_eq(u, t)) return;
  out.push_back(t);
  (void)sig;
}

term_ptr instantiate(evaluator& ev, const subst& s, const term_ptr& t,
                     const char* what) {
  term_ptr r = apply_subst(ev.sig(), s, t);
  if (has_vars(r))
    throw engine_error(std::string("rule ") + what +
                       " not fully instantiated: " + print_term(ev.sig(), r));
  return ev.normalize(r);
}

}  // namespace

std::vector<term_ptr> half_successors(evaluator& ev, const term_ptr& stage) {
  const module_data& m = ev.mod();
  term_ptr subject = ev.normalize(stage);
  std::vector<term_ptr> out;
  for (const eg_rule& r : m.rules) {
    for (auto& seed : match(m.sig, r.lhs, subject, ev))
      for (auto& sol : ev.solve(r.cond, seed))
        push_unique(m.sig, out, instantiate(ev, sol, r.label, "label"));
    for (auto& seed : match(m.sig, r.label, subject, ev))
      for (auto& sol : ev.solve(r.cond, seed))
        push_unique(m.sig, out, instantiate(ev, sol, r.rhs, "target"));
  }
  std::sort(out.begin(), out.end(), [&](const term_ptr& a, const term_ptr& b) {
    return term_cmp(m.sig, a, b) < 0;
  });
  return out;
}

std::vector<term_ptr> plain_successors(evaluator& ev, const term_ptr& state) {
  const module_data& m = ev.mod();
  term_ptr subject = ev.normalize(state);
  std::vector<term_ptr> out;
  for (const plain_rule& r : m.prules)
    for (auto& seed : match(m.sig, r.lhs, subject, ev))
      for (auto& sol : ev.solve(r.cond, seed))
        push_unique(m.sig, out, instantiate(ev, sol, r.rhs, "target"));
  std::sort(out.begin(), out.end(), [&](const term_ptr& a, const term_ptr& b) {
    return term_cmp(m.sig, a, b) < 0;
  });
  return out;
}

var_set term_vars(const term_ptr& t) {
  std::map<std::pair<std::string, sort_id>, sort_id> m;
  collect_vars(t, m);
  var_set out;
  for (const auto& [k, v] : m) out.insert(k);
  return out;
}

var_set cond_vars(const std::vector<condition>& cs) {
  var_set out;
  for (const auto& c : cs) {
    for (const auto& v : term_vars(c.lhs)) out.insert(v);
    if (c.rhs)
      for (const auto& v : term_vars(c.rhs)) out.insert(v);
  }
  return out;
}

namespace {

bool subset(const var_set& a, const var_set& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

var_set set_union(const var_set& a, const var_set& b) {
  var_set out = a;
  out.insert(b.begin(), b.end());
  return out;
}

var_set set_minus(const var_set& a, const var_set& b) {
  var_set out;
  for (const auto& v : a)
    if (!b.count(v)) out.insert(v);
  return out;
}

var_set set_inter(const var_set& a, const var_set& b) {
  var_set out;
  for (const auto& v : a)
    if (b.count(v)) out.insert(v);
  return out;
}

std::string list_vars(const var_set& vs) {
  std::string s;
  for (const auto& [name, sort] : vs) {
    if (!s.empty()) s += ", ";
    s += name;
  }
  return s;
}

// One half of an admissibility walk: from `avail`, process the conditions
// left to right, then require the goal's variables to be covered.
std::optional<std::string> walk_half(const std::vector<condition>& conds,
                                     var_set avail, const term_ptr& goal) {
  for (const auto& c : conds) {
    switch (c.k) {
      case condition::kind::equality: {
        var_set need =
            set_union(term_vars(c.lhs), c.rhs ? term_vars(c.rhs) : var_set{});
        var_set missing = set_minus(need, avail);
        if (!missing.empty())
          return "condition uses unbound " + list_vars(missing);
        break;
      }
      case condition::kind::matching: {
        var_set missing = set_minus(term_vars(c.rhs), avail);
        if (!missing.empty())
          return "match source uses unbound " + list_vars(missing);
        avail = set_union(avail, term_vars(c.lhs));
        break;
      }
      case condition::kind::sort_test: {
        var_set missing = set_minus(term_vars(c.lhs), avail);
        if (!missing.empty())
          return "sort test uses unbound " + list_vars(missing);
        break;
      }
    }
  }
  var_set missing = set_minus(term_vars(goal), avail);
  if (!missing.empty()) return "target leaves " + list_vars(missing) + " free";
  return std::nullopt;
}

}  // namespace

std::vector<diagnostic> check_admissible(const module_data& m) {
  std::vector<diagnostic> out;
  auto warn = [&](const std::string& where, const std::string& what) {
    diagnostic d;
    d.sev = severity::warning;
    d.code = "W-ADMISSIBLE";
    d.message = where + ": " + what;
    out.push_back(d);
  };
  for (std::size_t i = 0; i < m.rules.size(); ++i) {
    const eg_rule& r = m.rules[i];
    std::string rn = "rule " + std::to_string(i + 1) + " of " + m.name;
    if (auto bad = walk_half(r.cond, term_vars(r.lhs), r.label))
      warn(rn + " (source half)", *bad);
    if (auto bad = walk_half(r.cond, term_vars(r.label), r.rhs))
      warn(rn + " (target half)", *bad);
  }
  for (std::size_t i = 0; i < m.prules.size(); ++i) {
    const plain_rule& r = m.prules[i];
    std::string rn = "rule " + std::to_string(i + 1) + " of " + m.name;
    if (auto bad = walk_half(r.cond, term_vars(r.lhs), r.rhs))
      warn(rn, *bad);
  }
  return out;
}

std::vector<diagnostic> check_topmost(const module_data& m) {
  std::vector<diagnostic> out;
  const signature& sig = m.sig;
  sort_id stage_ref =
      sig.stage_sort != no_sort ? sig.stage_sort : sig.state_sort;
  if (stage_ref == no_sort) return out;

  auto has_equations = [&](op_id o) { return !m.eqs_for(o).empty(); };
  auto is_ctor = [&](op_id o) {
    const op_info& oi = sig.op(o);
    return !oi.builtin && !oi.is_prop && !has_equations(o);
  };
  auto is_stage_ctor = [&](op_id o) {
    const op_info& oi = sig.op(o);
    return is_ctor(o) && sig.leq(oi.result, stage_ref) &&
           !sig.is_data_sort(oi.result);
  };

  // Constructor closure reachable from a sort: constructors building at or
  // below any sort seen so far, following their argument sorts.
  auto closure_hits_stage_ctor = [&](sort_id start) {
    std::set<sort_id> sorts{start};
    std::set<op_id> ops;
    bool grew = true;
    while (grew) {
      grew = false;
      for (op_id o = 0; o < sig.op_count(); ++o) {
        if (ops.count(o) || !is_ctor(o)) continue;
        const op_info& oi = sig.op(o);
        bool builds_into = false;
        for (sort_id s : sorts)
          if (sig.leq(oi.result, s)) builds_into = true;
        if (!builds_into) continue;
        ops.insert(o);
        for (sort_id a : oi.args)
          if (sorts.insert(a).second) grew = true;
        grew = true;
      }
    }
    for (op_id o : ops)
      if (is_stage_ctor(o)) return true;
    return false;
  };

  kind_id stage_kind = sig.kind_of(stage_ref);
  for (op_id o = 0; o < sig.op_count(); ++o) {
    const op_info& oi = sig.op(o);
    if (!is_ctor(o) || oi.args.empty()) continue;
    if (sig.kind_of(oi.result) != stage_kind) continue;
    for (std::size_t i = 0; i < oi.args.size(); ++i) {
      if (sig.kind_of(oi.args[i]) != stage_kind) continue;
      if (sig.is_data_sort(oi.args[i])) continue;
      if (closure_hits_stage_ctor(oi.args[i])) {
        diagnostic d;
        d.sev = severity::warning;
        d.code = "W-TOPMOST";
        d.message = "operator " + oi.name + " in " + m.name +
                    " can nest a stage term below the top (argument " +
                    std::to_string(i + 1) + ")";
        out.push_back(d);
        break;
      }
    }
  }
  return out;
}

namespace {

// Connected closure of `start` through condition variable cliques, never
// expanding through label variables (they are included but act as cuts).
var_set chain_closure(const std::vector<condition>& conds, var_set start,
                      const var_set& label_vars) {
  std::vector<var_set> cliques;
  for (const auto& c : conds) {
    var_set vs = term_vars(c.lhs);
    if (c.rhs) vs = set_union(vs, term_vars(c.rhs));
    cliques.push_back(vs);
  }
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& cl : cliques) {
      bool touches = false;
      for (const auto& v : cl)
        if (start.count(v) && !label_vars.count(v)) touches = true;
      if (!touches) continue;
      for (const auto& v : cl)
        if (start.insert(v).second) grew = true;
    }
  }
  return start;
}

}  // namespace

bool is_readable_syntactic(const signature& sig, const eg_rule& r) {
  (void)sig;
  var_set lv = term_vars(r.label);
  var_set shared = set_inter(term_vars(r.lhs), term_vars(r.rhs));
  if (!subset(shared, lv)) return false;
  var_set cl = chain_closure(r.cond, term_vars(r.lhs), lv);
  var_set cr = chain_closure(r.cond, term_vars(r.rhs), lv);
  return set_minus(set_inter(cl, cr), lv).empty();
}

namespace {

term_ptr rename_vars(const signature& sig, const term_ptr& t,
                     const std::map<std::pair<std::string, sort_id>,
                                    std::string>& ren) {
  std::function<term_ptr(const term_ptr&)> go =
      [&](const term_ptr& u) -> term_ptr {
    switch (u->tag) {
      case term_tag::var: {
        auto it = ren.find({u->vname, u->vsort});
        return it == ren.end() ? u : mk_var(it->second, u->vsort);
      }
      case term_tag::app: {
        std::vector<term_ptr> args;
        for (const auto& a : u->args) args.push_back(go(a));
        return mk_app(u->op, std::move(args));
      }
      default:
        return u;
    }
  };
  return canonicalize(sig, go(t));
}

std::vector<condition> rename_conds(
    const signature& sig, const std::vector<condition>& cs,
    const std::map<std::pair<std::string, sort_id>, std::string>& ren) {
  std::vector<condition> out;
  for (const auto& c : cs) {
    condition n = c;
    n.lhs = rename_vars(sig, c.lhs, ren);
    if (c.rhs) n.rhs = rename_vars(sig, c.rhs, ren);
    out.push_back(n);
  }
  return out;
}

}  // namespace

eg_rule make_readable_rule(const signature& sig, const eg_rule& r) {
  if (is_readable_syntactic(sig, r)) return r;
  var_set lv = term_vars(r.label);
  var_set tv = term_vars(r.lhs), uv = term_vars(r.rhs);
  var_set cv = cond_vars(r.cond);
  var_set all = set_union(set_union(tv, uv), cv);

  using key = std::pair<std::string, sort_id>;
  std::map<key, std::string> ren_src, ren_tgt, ren_cond_src, ren_cond_tgt;
  for (const auto& v : all) {
    if (lv.count(v)) continue;
    ren_src[v] = v.first + "_t";
    ren_tgt[v] = v.first + "_t'";
    // condition copies: own side's name, fresh primed name otherwise
    ren_cond_src[v] = tv.count(v) ? v.first + "_t" : v.first + "'_t'";
    ren_cond_tgt[v] = uv.count(v) ? v.first + "_t'" : v.first + "'_t";
  }

  eg_rule n;
  n.lhs = rename_vars(sig, r.lhs, ren_src);
  n.label = r.label;
  n.rhs = rename_vars(sig, r.rhs, ren_tgt);

  std::vector<condition> conds = rename_conds(sig, r.cond, ren_cond_src);
  for (const auto& v : set_minus(set_inter(tv, uv), lv)) {
    condition link;
    link.k = condition::kind::equality;
    link.lhs = mk_var(v.first + "_t", v.second);
    link.rhs = mk_var(v.first + "'_t'", v.second);
    conds.push_back(link);
  }
  for (const auto& c : rename_conds(sig, r.cond, ren_cond_tgt))
    conds.push_back(c);
  for (const auto& v : set_minus(set_inter(tv, uv), lv)) {
    condition link;
    link.k = condition::kind::equality;
    link.lhs = mk_var(v.first + "'_t", v.second);
    link.rhs = mk_var(v.first + "_t'", v.second);
    conds.push_back(link);
  }
  n.cond = std::move(conds);
  return n;
}

module_data make_readable(const module_data& m) {
  module_data out = m;
  for (auto& r : out.rules) r = make_readable_rule(out.sig, r);
  out.finalize();
  return out;
}

}  // namespace ers
