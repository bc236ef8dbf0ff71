#include "ers/term.hpp"

#include <algorithm>

#include "ers/diag.hpp"

namespace ers {

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace

term_ptr mk_int(long long v) {
  auto t = std::make_shared<term>();
  t->tag = term_tag::int_lit;
  t->ival = v;
  t->hash = mix(1, std::hash<long long>{}(v));
  return t;
}

term_ptr mk_bool(bool v) {
  auto t = std::make_shared<term>();
  t->tag = term_tag::bool_lit;
  t->bval = v;
  t->hash = mix(2, v ? 7 : 3);
  return t;
}

term_ptr mk_var(std::string name, sort_id sort) {
  auto t = std::make_shared<term>();
  t->tag = term_tag::var;
  t->vname = std::move(name);
  t->vsort = sort;
  t->hash = mix(mix(3, std::hash<std::string>{}(t->vname)),
                std::hash<int>{}(sort));
  return t;
}

term_ptr mk_app(op_id op, std::vector<term_ptr> args) {
  auto t = std::make_shared<term>();
  t->tag = term_tag::app;
  t->op = op;
  t->args = std::move(args);
  std::size_t h = mix(4, std::hash<int>{}(op));
  for (const auto& a : t->args) h = mix(h, a->hash);
  t->hash = h;
  return t;
}

bool term_eq(const term_ptr& a, const term_ptr& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->hash != b->hash || a->tag != b->tag) return false;
  switch (a->tag) {
    case term_tag::int_lit:
      return a->ival == b->ival;
    case term_tag::bool_lit:
      return a->bval == b->bval;
    case term_tag::var:
      return a->vname == b->vname && a->vsort == b->vsort;
    case term_tag::app: {
      if (a->op != b->op || a->args.size() != b->args.size()) return false;
      for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!term_eq(a->args[i], b->args[i])) return false;
      return true;
    }
  }
  return false;
}

int term_cmp(const signature& sig, const term_ptr& a, const term_ptr& b) {
  auto rank = [](term_tag t) {
    switch (t) {
      case term_tag::int_lit: return 0;
      case term_tag::bool_lit: return 1;
      case term_tag::var: return 2;
      case term_tag::app: return 3;
    }
    return 4;
  };
  if (rank(a->tag) != rank(b->tag)) return rank(a->tag) < rank(b->tag) ? -1 : 1;
  switch (a->tag) {
    case term_tag::int_lit:
      return a->ival < b->ival ? -1 : a->ival > b->ival ? 1 : 0;
    case term_tag::bool_lit:
      return a->bval == b->bval ? 0 : (!a->bval ? -1 : 1);
    case term_tag::var: {
      int c = a->vname.compare(b->vname);
      if (c) return c < 0 ? -1 : 1;
      return a->vsort < b->vsort ? -1 : a->vsort > b->vsort ? 1 : 0;
    }
    case term_tag::app: {
      int c = sig.op(a->op).name.compare(sig.op(b->op).name);
      if (c) return c < 0 ? -1 : 1;
      if (a->args.size() != b->args.size())
        return a->args.size() < b->args.size() ? -1 : 1;
      for (std::size_t i = 0; i < a->args.size(); ++i) {
        c = term_cmp(sig, a->args[i], b->args[i]);
        if (c) return c;
      }
      return 0;
    }
  }
  return 0;
}

term_ptr canonicalize(const signature& sig, const term_ptr& t) {
  if (t->tag != term_tag::app) return t;
  const op_info& oi = sig.op(t->op);
  std::vector<term_ptr> args;
  args.reserve(t->args.size());
  for (const auto& a : t->args) args.push_back(canonicalize(sig, a));
  if (oi.assoc) {
    std::vector<term_ptr> flat;
    for (auto& a : args) {
      if (a->tag == term_tag::app && a->op == t->op)
        flat.insert(flat.end(), a->args.begin(), a->args.end());
      else
        flat.push_back(a);
    }
    args = std::move(flat);
  }
  if (oi.identity) {
    std::erase_if(args, [&](const term_ptr& a) {
      return term_eq(a, oi.identity);
    });
    if (args.empty()) return oi.identity;
    if (args.size() == 1) return args[0];
  }
  if (oi.comm) {
    std::stable_sort(args.begin(), args.end(),
                     [&](const term_ptr& x, const term_ptr& y) {
                       return term_cmp(sig, x, y) < 0;
                     });
  }
  return mk_app(t->op, std::move(args));
}

bool has_vars(const term_ptr& t) {
  if (t->tag == term_tag::var) return true;
  if (t->tag == term_tag::app)
    for (const auto& a : t->args)
      if (has_vars(a)) return true;
  return false;
}

void collect_vars(const term_ptr& t,
                  std::map<std::pair<std::string, sort_id>, sort_id>& out) {
  if (t->tag == term_tag::var) {
    out[{t->vname, t->vsort}] = t->vsort;
  } else if (t->tag == term_tag::app) {
    for (const auto& a : t->args) collect_vars(a, out);
  }
}

int display_prec(const op_info& oi) {
  if (oi.prec >= 0) return oi.prec;
  if (oi.pieces.empty() || oi.args.empty()) return 0;
  if (oi.is_juxt()) return 20;
  if (oi.is_infix()) return 50;
  if (oi.pieces.front() != "_" && oi.pieces.back() == "_") return 35;
  if (oi.pieces.front() != "_" && oi.pieces.back() != "_") return 0;
  return 50;
}

namespace {

int effective_prec(const op_info& oi) { return display_prec(oi); }

std::string display_piece(std::string piece, bool strip) {
  if (!strip) return piece;
  auto dot = piece.rfind('.');
  if (dot != std::string::npos && dot + 1 < piece.size())
    return piece.substr(dot + 1);
  return piece;
}

void render(const signature& sig, const term_ptr& t, const print_options& opts,
            int max_prec, std::string& out) {
  switch (t->tag) {
    case term_tag::int_lit:
      out += std::to_string(t->ival);
      return;
    case term_tag::bool_lit:
      out += t->bval ? "true" : "false";
      return;
    case term_tag::var:
      out += t->vname;
      return;
    case term_tag::app:
      break;
  }
  const op_info& oi = sig.op(t->op);
  int prec = effective_prec(oi);
  bool wrap = prec > max_prec;
  if (wrap) out += "(";
  if (oi.pieces.empty() ||
      std::none_of(oi.pieces.begin(), oi.pieces.end(),
                   [](const std::string& p) { return p == "_"; })) {
    // call syntax
    out += display_piece(oi.name, opts.strip_qualifiers);
    if (!t->args.empty()) {
      out += "(";
      for (std::size_t i = 0; i < t->args.size(); ++i) {
        if (i) out += ", ";
        render(sig, t->args[i], opts, 1000, out);
      }
      out += ")";
    }
  } else if (oi.is_infix() && t->args.size() != 2) {
    // flattened associative application: join children with the middle piece
    const std::string sep =
        display_piece(oi.pieces[1], opts.strip_qualifiers);
    for (std::size_t k = 0; k < t->args.size(); ++k) {
      if (k) out += (sep == "," ? ", " : " " + sep + " ");
      render(sig, t->args[k], opts, prec - 1, out);
    }
  } else {
    std::size_t arg = 0;
    bool first_tok = true;
    bool suppress_space = false;
    std::size_t n = oi.pieces.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& p = oi.pieces[i];
      bool is_hole = p == "_";
      std::string tok;
      if (is_hole) {
        int child_max;
        if (oi.is_juxt()) {
          child_max = 20;
        } else if (oi.is_infix()) {
          // left operand of an assoc-parsed builtin chain may keep equal prec
          bool left = arg == 0;
          bool left_assoc = oi.builtin && oi.result != no_sort;
          child_max = (left && left_assoc) ? prec : prec - 1;
        } else if (i + 1 == n) {
          child_max = 0;  // trailing hole: parenthesize non-primary children
        } else {
          child_max = 1000;  // delimited by a following literal piece
        }
        term_ptr child;
        if (oi.is_juxt() && t->args.size() != 2) {
          // flattened AC: render children joined by spaces
          for (std::size_t k = 0; k < t->args.size(); ++k) {
            if (k) out += " ";
            render(sig, t->args[k], opts, 20, out);
          }
          arg = t->args.size();
          first_tok = false;
          continue;
        }
        if (arg >= t->args.size()) continue;
        child = t->args[arg++];
        std::string sub;
        render(sig, child, opts, child_max, sub);
        tok = sub;
      } else {
        tok = display_piece(p, opts.strip_qualifiers && i == 0);
      }
      bool no_space_before = tok == "," || tok == ")";
      if (!first_tok && !no_space_before && !suppress_space) out += " ";
      out += tok;
      suppress_space = tok == "(";
      first_tok = false;
    }
  }
  if (wrap) out += ")";
}

}  // namespace

std::string print_term(const signature& sig, const term_ptr& t,
                       const print_options& opts) {
  std::string out;
  render(sig, t, opts, 1000, out);
  return out;
}

sort_id least_sort_syntactic(const signature& sig, const term_ptr& t) {
  switch (t->tag) {
    case term_tag::int_lit:
      return sig.int_sort;
    case term_tag::bool_lit:
      return sig.bool_sort;
    case term_tag::var:
      return t->vsort;
    case term_tag::app:
      break;
  }
  const op_info& oi = sig.op(t->op);
  if (t->args.empty()) return oi.result;
  std::vector<sort_id> asorts;
  asorts.reserve(t->args.size());
  for (const auto& a : t->args)
    asorts.push_back(least_sort_syntactic(sig, a));
  auto fits = [&](sort_id have, sort_id want) { return sig.leq(have, want); };
  auto kind_ok = [&](sort_id have, sort_id want) {
    return sig.same_kind(have, want);
  };
  if (oi.assoc && oi.comm && oi.args.size() == 2) {
    sort_id cur = asorts[0];
    bool kinded_only = false;
    for (std::size_t i = 1; i < asorts.size(); ++i) {
      sort_id r = asorts[i];
      bool ok = !kinded_only &&
                ((fits(cur, oi.args[0]) && fits(r, oi.args[1])) ||
                 (fits(cur, oi.args[1]) && fits(r, oi.args[0])));
      if (ok) {
        cur = oi.result;
      } else if (kind_ok(cur, oi.args[0]) && kind_ok(r, oi.args[1])) {
        kinded_only = true;
        cur = sig.top_of(oi.result);
      } else {
        throw engine_error("ill-kinded term at operator " + oi.name);
      }
    }
    return cur;
  }
  if (asorts.size() != oi.args.size())
    throw engine_error("arity mismatch at operator " + oi.name);
  bool sorted = true;
  for (std::size_t i = 0; i < asorts.size(); ++i) {
    if (fits(asorts[i], oi.args[i])) continue;
    if (kind_ok(asorts[i], oi.args[i]))
      sorted = false;
    else
      throw engine_error("ill-kinded argument " + std::to_string(i + 1) +
                         " of operator " + oi.name);
  }
  return sorted ? oi.result : sig.top_of(oi.result);
}

}  // namespace ers
