#include "ers/match.hpp"

#include <algorithm>
#include <functional>

#include "ers/diag.hpp"

namespace ers {

namespace {

bool subst_eq(const subst& a, const subst& b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(),
                    [](const auto& x, const auto& y) {
                      return x.first == y.first && term_eq(x.second, y.second);
                    });
}

struct matcher {
  const signature& sig;
  sort_oracle& oracle;

  bool bind(subst& s, const term_ptr& v, const term_ptr& t) {
    var_key k{v->vname, v->vsort};
    auto it = s.find(k);
    if (it != s.end()) return term_eq(it->second, t);
    if (!sig.leq(oracle.sort_of(t), v->vsort)) return false;
    s[k] = t;
    return true;
  }

  void run(const term_ptr& pat, const term_ptr& subj, subst s,
           std::vector<subst>& out) {
    switch (pat->tag) {
      case term_tag::var:
        if (bind(s, pat, subj)) out.push_back(std::move(s));
        return;
      case term_tag::int_lit:
        if (subj->tag == term_tag::int_lit && subj->ival == pat->ival)
          out.push_back(std::move(s));
        return;
      case term_tag::bool_lit:
        if (subj->tag == term_tag::bool_lit && subj->bval == pat->bval)
          out.push_back(std::move(s));
        return;
      case term_tag::app:
        break;
    }
    const op_info& oi = sig.op(pat->op);
    if (oi.assoc && oi.comm) {
      run_ac(pat, subj, std::move(s), out);
      return;
    }
    if (subj->tag != term_tag::app || subj->op != pat->op) return;
    if (oi.comm && pat->args.size() == 2 && subj->args.size() == 2) {
      run_seq(pat->args, {subj->args[0], subj->args[1]}, s, out);
      run_seq(pat->args, {subj->args[1], subj->args[0]}, std::move(s), out);
      return;
    }
    if (pat->args.size() != subj->args.size()) return;
    run_seq(pat->args, subj->args, std::move(s), out);
  }

  void run_seq(const std::vector<term_ptr>& pats,
               const std::vector<term_ptr>& subjs, subst s,
               std::vector<subst>& out) {
    std::vector<subst> frontier{std::move(s)};
    for (std::size_t i = 0; i < pats.size() && !frontier.empty(); ++i) {
      std::vector<subst> next;
      for (auto& f : frontier) run(pats[i], subjs[i], f, next);
      frontier = std::move(next);
    }
    for (auto& f : frontier) out.push_back(std::move(f));
  }

  void run_ac(const term_ptr& pat, const term_ptr& subj, subst s,
              std::vector<subst>& out) {
    const op_info& oi = sig.op(pat->op);
    std::vector<term_ptr> elems;
    term_ptr collector;
    for (const auto& c : pat->args) {
      if (c->tag == term_tag::var && sig.leq(oi.result, c->vsort)) {
        if (collector)
          throw engine_error(
              "unsupported AC pattern: more than one collector variable "
              "under " +
              oi.name);
        collector = c;
      } else {
        elems.push_back(c);
      }
    }
    std::vector<term_ptr> children;
    if (subj->tag == term_tag::app && subj->op == pat->op)
      children = subj->args;
    else if (oi.identity && term_eq(subj, oi.identity))
      children = {};
    else
      children = {subj};
    if (children.size() < elems.size()) return;
    if (!collector && children.size() != elems.size()) return;

    std::vector<bool> used(children.size(), false);
    assign(pat->op, elems, 0, children, used, std::move(s), collector, out);
  }

  void assign(op_id op, const std::vector<term_ptr>& elems, std::size_t idx,
              const std::vector<term_ptr>& children, std::vector<bool>& used,
              subst s, const term_ptr& collector, std::vector<subst>& out) {
    const op_info& oi = sig.op(op);
    if (idx == elems.size()) {
      std::vector<term_ptr> rest;
      for (std::size_t i = 0; i < children.size(); ++i)
        if (!used[i]) rest.push_back(children[i]);
      if (!collector) {
        out.push_back(std::move(s));
        return;
      }
      term_ptr bound;
      if (rest.empty()) {
        if (!oi.identity) return;
        bound = oi.identity;
      } else if (rest.size() == 1) {
        bound = rest[0];
      } else {
        bound = canonicalize(sig, mk_app(op, std::move(rest)));
      }
      if (bind(s, collector, bound)) out.push_back(std::move(s));
      return;
    }
    for (std::size_t i = 0; i < children.size(); ++i) {
      if (used[i]) continue;
      std::vector<subst> sub;
      run(elems[idx], children[i], s, sub);
      if (sub.empty()) continue;
      used[i] = true;
      for (auto& s2 : sub)
        assign(op, elems, idx + 1, children, used, std::move(s2), collector,
               out);
      used[i] = false;
    }
  }
};

}  // namespace

std::vector<subst> match(const signature& sig, const term_ptr& pattern,
                         const term_ptr& subject, sort_oracle& oracle,
                         const subst& seed) {
  matcher m{sig, oracle};
  std::vector<subst> raw;
  m.run(pattern, subject, seed, raw);
  std::vector<subst> out;
  for (auto& s : raw) {
    bool dup = false;
    for (const auto& o : out)
      if (subst_eq(o, s)) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(std::move(s));
  }
  return out;
}

term_ptr apply_subst(const signature& sig, const subst& s, const term_ptr& t) {
  std::function<term_ptr(const term_ptr&)> go =
      [&](const term_ptr& u) -> term_ptr {
    switch (u->tag) {
      case term_tag::var: {
        auto it = s.find({u->vname, u->vsort});
        return it == s.end() ? u : it->second;
      }
      case term_tag::app: {
        std::vector<term_ptr> args;
        args.reserve(u->args.size());
        bool changed = false;
        for (const auto& a : u->args) {
          args.push_back(go(a));
          changed = changed || args.back().get() != a.get();
        }
        return changed ? mk_app(u->op, std::move(args)) : u;
      }
      default:
        return u;
    }
  };
  return canonicalize(sig, go(t));
}

}  // namespace ers
