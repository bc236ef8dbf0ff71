#include "ers/eval.hpp"

#include "ers/diag.hpp"

namespace ers {

namespace {

// Thrown by require_ground in symbolic mode; callers skip the equation or
// membership whose condition needed the missing instantiation.
struct non_ground {};

}  // namespace

evaluator::evaluator(const module_data& m, eval_options opt)
    : m_(m), opt_(opt) {}

term_ptr evaluator::require_ground(const term_ptr& t, const char* what) {
  if (has_vars(t)) {
    if (opt_.symbolic) throw non_ground{};
    throw engine_error(std::string("unbound variable in ") + what + ": " +
                       print_term(m_.sig, t));
  }
  return t;
}

term_ptr fold_builtin(const std::string& op_name,
                      const std::vector<term_ptr>& a) {
  auto both_int = [&] {
    return a.size() == 2 && a[0]->tag == term_tag::int_lit &&
           a[1]->tag == term_tag::int_lit;
  };
  auto both_bool = [&] {
    return a.size() == 2 && a[0]->tag == term_tag::bool_lit &&
           a[1]->tag == term_tag::bool_lit;
  };
  if (op_name == "_+_" && both_int()) return mk_int(a[0]->ival + a[1]->ival);
  if (op_name == "_-_" && both_int()) return mk_int(a[0]->ival - a[1]->ival);
  if (op_name == "_*_" && both_int()) return mk_int(a[0]->ival * a[1]->ival);
  if (op_name == "_<_" && both_int()) return mk_bool(a[0]->ival < a[1]->ival);
  if (op_name == "_<=_" && both_int()) return mk_bool(a[0]->ival <= a[1]->ival);
  if (op_name == "_==_" && both_int()) return mk_bool(a[0]->ival == a[1]->ival);
  if (op_name == "_and_" && both_bool())
    return mk_bool(a[0]->bval && a[1]->bval);
  if (op_name == "_or_" && both_bool())
    return mk_bool(a[0]->bval || a[1]->bval);
  if (op_name == "not_" && a.size() == 1 && a[0]->tag == term_tag::bool_lit)
    return mk_bool(!a[0]->bval);
  return nullptr;
}

term_ptr evaluator::try_builtin(const term_ptr& t) {
  const op_info& oi = m_.sig.op(t->op);
  if (!oi.builtin) return nullptr;
  const auto& a = t->args;
  if (term_ptr folded = fold_builtin(oi.name, a)) return folded;
  if (oi.name == "agree" && a.size() == 2 && !has_vars(a[0]) &&
      !has_vars(a[1])) {
    // Holds when either side fails to classify below its kind top, and
    // otherwise when both sides coincide.
    if (m_.sig.sort(least_sort(a[0])).is_kind_top ||
        m_.sig.sort(least_sort(a[1])).is_kind_top)
      return mk_bool(true);
    return mk_bool(term_eq(a[0], a[1]));
  }
  return nullptr;
}

term_ptr evaluator::normalize(const term_ptr& t) {
  auto it = nf_.find(t);
  if (it != nf_.end()) return it->second;
  term_ptr n = normalize_loop(t);
  nf_[t] = n;
  nf_[n] = n;
  return n;
}

term_ptr evaluator::normalize_loop(const term_ptr& t) {
  term_ptr cur = t;
  for (;;) {
    if (cur->tag != term_tag::app) return cur;
    std::vector<term_ptr> args;
    args.reserve(cur->args.size());
    bool changed = false;
    for (const auto& a : cur->args) {
      args.push_back(normalize(a));
      changed = changed || args.back().get() != a.get();
    }
    if (changed) cur = mk_app(cur->op, std::move(args));
    cur = canonicalize(m_.sig, cur);
    if (cur->tag != term_tag::app) continue;

    if (term_ptr b = try_builtin(cur)) {
      cur = b;
      continue;
    }

    bool stepped = false;
    for (int idx : m_.eqs_for(cur->op)) {
      const equation& eq = m_.eqs[idx];
      if (opt_.symbolic && eq.owise && has_vars(cur)) continue;
      for (auto& sub : match(m_.sig, eq.lhs, cur, *this)) {
        std::vector<subst> sols;
        try {
          sols = solve(eq.cond, sub);
        } catch (const non_ground&) {
          continue;
        }
        if (sols.empty()) continue;
        if (++steps_ > opt_.step_budget)
          throw engine_error("step budget exceeded while reducing " +
                             print_term(m_.sig, t));
        cur = apply_subst(m_.sig, sols.front(), eq.rhs);
        stepped = true;
        break;
      }
      if (stepped) break;
    }
    if (!stepped) return cur;
  }
}

sort_id evaluator::least_sort(const term_ptr& t) {
  term_ptr n = normalize(t);
  auto it = ls_.find(n);
  if (it != ls_.end()) return it->second;
  sort_id base = least_sort_syntactic(m_.sig, n);
  if (ls_busy_.count(n)) return base;
  ls_busy_.insert(n);
  sort_id best = base;
  bool changed = true;
  while (changed) {
    changed = false;
    auto consider = [&](int idx) {
      const membership& mb = m_.mbs[idx];
      if (mb.sort == best || !m_.sig.leq(mb.sort, best)) return;
      for (auto& sub : match(m_.sig, mb.subject, n, *this)) {
        std::vector<subst> sols;
        try {
          sols = solve(mb.cond, sub);
        } catch (const non_ground&) {
          continue;
        }
        if (!sols.empty()) {
          best = mb.sort;
          changed = true;
          return;
        }
      }
    };
    if (n->tag == term_tag::app)
      for (int idx : m_.mbs_for(n->op)) consider(idx);
    for (int idx : m_.var_mbs()) consider(idx);
  }
  ls_busy_.erase(n);
  ls_[n] = best;
  return best;
}

sort_id evaluator::sort_of(const term_ptr& t) {
  if (t->tag == term_tag::var) return t->vsort;
  return least_sort(t);
}

std::vector<subst> evaluator::solve(const std::vector<condition>& conds,
                                    const subst& seed) {
  std::vector<subst> frontier{seed};
  for (const condition& c : conds) {
    std::vector<subst> next;
    for (const auto& s : frontier) {
      switch (c.k) {
        case condition::kind::equality: {
          term_ptr l = normalize(
              require_ground(apply_subst(m_.sig, s, c.lhs), "condition"));
          term_ptr r = normalize(
              require_ground(apply_subst(m_.sig, s, c.rhs), "condition"));
          if (term_eq(l, r)) next.push_back(s);
          break;
        }
        case condition::kind::matching: {
          term_ptr r = normalize(
              require_ground(apply_subst(m_.sig, s, c.rhs), "condition"));
          for (auto& s2 : match(m_.sig, c.lhs, r, *this, s))
            next.push_back(std::move(s2));
          break;
        }
        case condition::kind::sort_test: {
          term_ptr l = normalize(
              require_ground(apply_subst(m_.sig, s, c.lhs), "condition"));
          if (m_.sig.leq(least_sort(l), c.sort)) next.push_back(s);
          break;
        }
      }
    }
    frontier = std::move(next);
    if (frontier.empty()) break;
  }
  return frontier;
}

std::optional<term_ptr> evaluator::eval_prop(op_id prop,
                                             const term_ptr& subject) {
  const op_info& oi = m_.sig.op(prop);
  term_ptr n = normalize(mk_app(prop, {subject}));
  sort_id s = least_sort(n);
  if (m_.sig.leq(s, oi.prop_codomain)) return n;
  if (m_.sig.same_kind(s, oi.prop_codomain)) return std::nullopt;
  throw engine_error("property " + oi.name + " reduced outside its kind: " +
                     print_term(m_.sig, n));
}

}  // namespace ers
