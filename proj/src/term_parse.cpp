#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ers/parse.hpp"

namespace ers {

sort_id find_sort_ref(const signature& sig, const std::string& ref) {
  if (ref.size() > 2 && ref.front() == '[' && ref.back() == ']') {
    auto inner = sig.find_sort(ref.substr(1, ref.size() - 2));
    if (!inner) return no_sort;
    return sig.top_of(*inner);
  }
  auto s = sig.find_sort(ref);
  return s ? *s : no_sort;
}

namespace {

bool int_literal(const std::string& s) {
  std::size_t i = (s.size() > 1 && s[0] == '-') ? 1 : 0;
  if (i >= s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

struct pnode;
using pnode_ptr = std::shared_ptr<pnode>;

// Parse tree before overload resolution: leaves are literals and scope
// variables; applications keep the whole family of same-shaped operators.
struct pnode {
  enum class nk { ilit, blit, var, app };
  nk k = nk::app;
  long long ival = 0;
  bool bval = false;
  std::string vname;
  sort_id vsort = no_sort;
  std::vector<op_id> fam;
  std::vector<pnode_ptr> kids;
  source_span span;
};

// Operators sharing one piece sequence parse as a unit; which member
// applies is decided afterwards by argument sorts.
struct family {
  std::vector<std::string> pieces;
  std::vector<op_id> ops;
  int prec = 50;
  bool chain = false;  // may repeat without parentheses
};

bool chainable(const op_info& oi) {
  if (oi.assoc) return true;
  return oi.builtin &&
         (oi.name == "_+_" || oi.name == "_-_" || oi.name == "_*_" ||
          oi.name == "_and_" || oi.name == "_or_");
}

struct parser {
  const signature& sig;
  std::map<std::string, sort_id>& vars;
  const std::vector<token>& toks;
  std::size_t pos, end;
  std::vector<diagnostic>& diags;
  bool failed = false;

  std::map<std::string, std::vector<family>> lead;
  std::map<std::string, family> infix;
  std::map<std::string, std::vector<op_id>> consts;
  std::map<std::string, std::vector<op_id>> calls;
  std::map<std::size_t, std::vector<op_id>> tuples;
  family juxt;

  parser(const signature& sg, std::map<std::string, sort_id>& vs,
         const std::vector<token>& ts, std::size_t lo, std::size_t hi,
         std::vector<diagnostic>& dg)
      : sig(sg), vars(vs), toks(ts), pos(lo), end(hi), diags(dg) {
    index();
  }

  void index() {
    for (op_id o = 0; o < sig.op_count(); ++o) {
      const op_info& oi = sig.op(o);
      const auto& pcs = oi.pieces;
      if (oi.args.empty()) {
        consts[oi.name].push_back(o);
        continue;
      }
      bool holes = std::any_of(pcs.begin(), pcs.end(),
                               [](const std::string& p) { return p == "_"; });
      if (!holes) {
        calls[oi.name].push_back(o);
        continue;
      }
      if (oi.is_juxt()) {
        juxt.pieces = pcs;
        juxt.ops.push_back(o);
        juxt.prec = 20;
        juxt.chain = true;
        continue;
      }
      if (oi.is_infix()) {
        family& f = infix[pcs[1]];
        f.pieces = pcs;
        if (f.ops.empty()) {
          f.prec = display_prec(oi);
          f.chain = chainable(oi);
        }
        f.ops.push_back(o);
        continue;
      }
      if (pcs.front() == "(" && pcs.back() == ")") {
        std::size_t arity = 0;
        bool shape = true;
        for (std::size_t i = 1; i + 1 < pcs.size(); ++i) {
          bool want_hole = i % 2 == 1;
          if (want_hole ? pcs[i] != "_" : pcs[i] != ",") shape = false;
          if (pcs[i] == "_") ++arity;
        }
        if (shape && arity == oi.args.size()) {
          tuples[arity].push_back(o);
          continue;
        }
      }
      if (pcs.front() != "_") {
        auto& fs = lead[pcs.front()];
        auto it = std::find_if(fs.begin(), fs.end(), [&](const family& f) {
          return f.pieces == pcs;
        });
        if (it == fs.end()) {
          family f;
          f.pieces = pcs;
          f.prec = display_prec(oi);
          fs.push_back(std::move(f));
          it = fs.end() - 1;
        }
        it->ops.push_back(o);
      }
      // operators led by a hole but not plain infix (postfix and the
      // like) are not parseable in source form
    }
    for (auto& [k, fs] : lead)
      std::stable_sort(fs.begin(), fs.end(),
                       [](const family& a, const family& b) {
                         return a.pieces.size() > b.pieces.size();
                       });
  }

  void error(source_span sp, std::string code, std::string msg) {
    if (!failed)
      diags.push_back(
          {severity::error, std::move(code), std::move(msg), std::move(sp)});
    failed = true;
  }

  source_span here() const {
    if (pos < end) return toks[pos].span;
    if (end > 0 && !toks.empty()) return toks[end - 1].span;
    return {};
  }

  bool starts_operand(const token& t) const {
    const std::string& s = t.text;
    if (s == "(") return true;
    if (int_literal(s) || s == "true" || s == "false") return true;
    if (s.find(':') != std::string::npos && s.find(':') > 0) return true;
    if (vars.count(s)) return true;
    return lead.count(s) || calls.count(s) || consts.count(s);
  }

  pnode_ptr mk(pnode n) { return std::make_shared<pnode>(std::move(n)); }

  pnode_ptr inline_var(const token& t) {
    auto colon = t.text.find(':');
    std::string name = t.text.substr(0, colon);
    std::string ref = t.text.substr(colon + 1);
    ++pos;
    if (ref.empty()) {
      // kind form: X:[Sort] lexes as `X:` `[` Sort `]`, glued
      if (pos + 2 >= end || toks[pos].text != "[" || !toks[pos].glued ||
          toks[pos + 2].text != "]") {
        error(t.span, "E-VAR-SORT", "malformed sort in variable " + name);
        return nullptr;
      }
      ref = "[" + toks[pos + 1].text + "]";
      pos += 3;
    }
    sort_id s = find_sort_ref(sig, ref);
    if (s == no_sort) {
      error(t.span, "E-UNKNOWN-SORT",
            "unknown sort " + ref + " in variable " + name);
      return nullptr;
    }
    auto it = vars.find(name);
    if (it != vars.end() && it->second != s) {
      error(t.span, "E-VAR-SORT",
            "variable " + name + " already has sort " +
                sig.sort(it->second).name);
      return nullptr;
    }
    vars[name] = s;
    pnode n;
    n.k = pnode::nk::var;
    n.vname = name;
    n.vsort = s;
    n.span = t.span;
    return mk(std::move(n));
  }

  pnode_ptr walk(const family& f, source_span sp) {
    std::set<std::string> stops(f.pieces.begin(), f.pieces.end());
    stops.erase("_");
    std::vector<pnode_ptr> kids;
    for (std::size_t i = 1; i < f.pieces.size(); ++i) {
      const std::string& p = f.pieces[i];
      if (p != "_") {
        if (pos < end && toks[pos].text == p)
          ++pos;
        else
          return nullptr;
      } else if (i + 1 == f.pieces.size()) {
        auto n = parse_lead();
        if (!n) return nullptr;
        kids.push_back(std::move(n));
      } else {
        auto n = expr(1000, &stops);
        if (!n) return nullptr;
        kids.push_back(std::move(n));
      }
    }
    pnode n;
    n.fam = f.ops;
    n.kids = std::move(kids);
    n.span = sp;
    return mk(std::move(n));
  }

  pnode_ptr parse_lead() {
    if (failed) return nullptr;
    if (pos >= end) {
      error(here(), "E-TERM", "term expected");
      return nullptr;
    }
    token t = toks[pos];
    if (int_literal(t.text)) {
      ++pos;
      pnode n;
      n.k = pnode::nk::ilit;
      n.ival = std::stoll(t.text);
      n.span = t.span;
      return mk(std::move(n));
    }
    if (t.text == "true" || t.text == "false") {
      ++pos;
      pnode n;
      n.k = pnode::nk::blit;
      n.bval = t.text == "true";
      n.span = t.span;
      return mk(std::move(n));
    }
    if (t.text == "(") {
      ++pos;
      std::vector<pnode_ptr> items;
      items.push_back(expr(1000, nullptr));
      if (!items.back()) return nullptr;
      while (pos < end && toks[pos].text == ",") {
        ++pos;
        items.push_back(expr(1000, nullptr));
        if (!items.back()) return nullptr;
      }
      if (pos >= end || toks[pos].text != ")") {
        error(here(), "E-PAREN", "`)` expected");
        return nullptr;
      }
      ++pos;
      if (items.size() == 1) return items[0];
      auto tu = tuples.find(items.size());
      if (tu != tuples.end()) {
        pnode n;
        n.fam = tu->second;
        n.kids = std::move(items);
        n.span = t.span;
        return mk(std::move(n));
      }
      auto cm = infix.find(",");
      if (cm != infix.end()) {
        pnode_ptr acc = items[0];
        for (std::size_t i = 1; i < items.size(); ++i) {
          pnode n;
          n.fam = cm->second.ops;
          n.kids = {acc, items[i]};
          n.span = t.span;
          acc = mk(std::move(n));
        }
        return acc;
      }
      error(t.span, "E-TUPLE",
            "no operator takes a parenthesized list of " +
                std::to_string(items.size()));
      return nullptr;
    }
    auto colon = t.text.find(':');
    if (colon != std::string::npos && colon > 0) return inline_var(t);
    if (auto it = vars.find(t.text); it != vars.end()) {
      ++pos;
      pnode n;
      n.k = pnode::nk::var;
      n.vname = t.text;
      n.vsort = it->second;
      n.span = t.span;
      return mk(std::move(n));
    }
    if (auto li = lead.find(t.text); li != lead.end()) {
      for (const family& f : li->second) {
        std::size_t save_pos = pos;
        std::size_t save_diags = diags.size();
        auto save_vars = vars;
        ++pos;
        if (auto n = walk(f, t.span)) return n;
        pos = save_pos;
        diags.resize(save_diags);
        vars = std::move(save_vars);
        failed = false;
      }
    }
    if (pos + 1 < end && toks[pos + 1].text == "(" && toks[pos + 1].glued) {
      if (auto ci = calls.find(t.text); ci != calls.end()) {
        pos += 2;
        std::vector<pnode_ptr> args;
        if (pos < end && toks[pos].text == ")") {
          error(t.span, "E-CALL", t.text + " needs arguments");
          return nullptr;
        }
        args.push_back(expr(1000, nullptr));
        if (!args.back()) return nullptr;
        while (pos < end && toks[pos].text == ",") {
          ++pos;
          args.push_back(expr(1000, nullptr));
          if (!args.back()) return nullptr;
        }
        if (pos >= end || toks[pos].text != ")") {
          error(here(), "E-PAREN", "`)` expected in call of " + t.text);
          return nullptr;
        }
        ++pos;
        std::vector<op_id> fit;
        for (op_id o : ci->second)
          if (sig.op(o).args.size() == args.size()) fit.push_back(o);
        if (fit.empty()) {
          error(t.span, "E-ARITY",
                t.text + " does not take " + std::to_string(args.size()) +
                    " arguments");
          return nullptr;
        }
        pnode n;
        n.fam = std::move(fit);
        n.kids = std::move(args);
        n.span = t.span;
        return mk(std::move(n));
      }
    }
    if (auto ci = consts.find(t.text); ci != consts.end()) {
      ++pos;
      pnode n;
      n.fam = ci->second;
      n.span = t.span;
      return mk(std::move(n));
    }
    error(t.span, "E-TERM", "cannot parse `" + t.text + "` as a term");
    return nullptr;
  }

  pnode_ptr expr(int max_prec, const std::set<std::string>* stops) {
    auto left = parse_lead();
    if (!left) return nullptr;
    int last_prec = -1;
    bool last_chain = true;
    while (pos < end && !failed) {
      const std::string& t = toks[pos].text;
      if (t == ")" || t == "," || t == "]") break;
      if (stops && stops->count(t)) break;
      if (auto inf = infix.find(t); inf != infix.end()) {
        const family& f = inf->second;
        if (f.prec > max_prec) break;
        if (f.prec == last_prec && !last_chain) {
          error(toks[pos].span, "E-AMBIGUOUS",
                "operators at equal precedence need parentheses around `" +
                    t + "`");
          return nullptr;
        }
        source_span sp = toks[pos].span;
        ++pos;
        auto rhs = expr(f.prec - 1, stops);
        if (!rhs) return nullptr;
        pnode n;
        n.fam = f.ops;
        n.kids = {left, rhs};
        n.span = sp;
        left = mk(std::move(n));
        last_prec = f.prec;
        last_chain = f.chain;
        continue;
      }
      if (!juxt.ops.empty() && juxt.prec <= max_prec &&
          starts_operand(toks[pos])) {
        source_span sp = toks[pos].span;
        auto rhs = expr(juxt.prec - 1, stops);
        if (!rhs) return nullptr;
        pnode n;
        n.fam = juxt.ops;
        n.kids = {left, rhs};
        n.span = sp;
        left = mk(std::move(n));
        last_prec = juxt.prec;
        last_chain = true;
        continue;
      }
      break;
    }
    return left;
  }

  struct cand {
    term_ptr t;
    sort_id s;
  };

  std::vector<cand> resolve(const pnode_ptr& n) {
    std::vector<cand> out;
    switch (n->k) {
      case pnode::nk::ilit:
        out.push_back({mk_int(n->ival), sig.int_sort});
        return out;
      case pnode::nk::blit:
        out.push_back({mk_bool(n->bval), sig.bool_sort});
        return out;
      case pnode::nk::var:
        out.push_back({mk_var(n->vname, n->vsort), n->vsort});
        return out;
      case pnode::nk::app:
        break;
    }
    std::vector<std::vector<cand>> kc;
    for (const auto& kid : n->kids) {
      kc.push_back(resolve(kid));
      if (kc.back().empty()) return {};
    }
    for (op_id o : n->fam) {
      const op_info& oi = sig.op(o);
      if (oi.args.size() != n->kids.size()) continue;
      std::vector<std::size_t> idx(kc.size(), 0);
      while (true) {
        bool fits = true;
        for (std::size_t i = 0; i < kc.size() && fits; ++i)
          fits = sig.same_kind(kc[i][idx[i]].s, oi.args[i]);
        if (fits) {
          std::vector<term_ptr> args;
          args.reserve(kc.size());
          for (std::size_t i = 0; i < kc.size(); ++i)
            args.push_back(kc[i][idx[i]].t);
          term_ptr t = mk_app(o, std::move(args));
          try {
            sort_id s = least_sort_syntactic(sig, t);
            bool dup = std::any_of(out.begin(), out.end(), [&](const cand& c) {
              return term_eq(c.t, t);
            });
            if (!dup) out.push_back({t, s});
          } catch (const engine_error&) {
          }
        }
        std::size_t i = 0;
        for (; i < kc.size(); ++i) {
          if (++idx[i] < kc[i].size()) break;
          idx[i] = 0;
        }
        if (i == kc.size()) break;
      }
    }
    if (out.empty())
      error(n->span, "E-NO-PARSE",
            "no operator interpretation fits the arguments here");
    return out;
  }
};

}  // namespace

term_ptr parse_term_slice(const signature& sig,
                          std::map<std::string, sort_id>& vars,
                          const std::vector<token>& toks, std::size_t lo,
                          std::size_t hi, sort_id expected,
                          std::vector<diagnostic>& diags) {
  if (lo >= hi) {
    diags.push_back({severity::error, "E-TERM", "term expected",
                     lo < toks.size() ? toks[lo].span : source_span{}});
    return nullptr;
  }
  parser p(sig, vars, toks, lo, hi, diags);
  auto root = p.expr(1000, nullptr);
  if (!root || p.failed) return nullptr;
  if (p.pos != hi) {
    diags.push_back({severity::error, "E-TRAILING",
                     "unexpected `" + toks[p.pos].text + "` after term",
                     toks[p.pos].span});
    return nullptr;
  }
  auto cands = p.resolve(root);
  if (p.failed || cands.empty()) return nullptr;
  if (expected != no_sort) {
    std::vector<parser::cand> keep;
    for (auto& c : cands)
      if (sig.same_kind(c.s, expected)) keep.push_back(c);
    if (keep.empty()) {
      diags.push_back({severity::error, "E-SORT",
                       "term does not fit in the kind of " +
                           sig.sort(expected).name,
                       root->span});
      return nullptr;
    }
    cands = std::move(keep);
  }
  if (cands.size() > 1) {
    std::string sorts;
    for (const auto& c : cands) {
      if (!sorts.empty()) sorts += ", ";
      sorts += print_term(sig, c.t) + " : " + sig.sort(c.s).name;
    }
    diags.push_back({severity::error, "E-AMBIGUOUS",
                     "ambiguous term; could be " + sorts, root->span});
    return nullptr;
  }
  return canonicalize(sig, cands[0].t);
}

}  // namespace ers
