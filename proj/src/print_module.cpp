#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ers/compose.hpp"
#include "ers/parse.hpp"

namespace ers {

namespace {

// Clone with the first occurrence of each variable renamed to `X:Sort`,
// walking in print order so the annotation lands where the reader (and the
// reparse) first meets the variable.
term_ptr annotate(const signature& sig, const term_ptr& t,
                  std::set<std::pair<std::string, sort_id>>& seen) {
  switch (t->tag) {
    case term_tag::int_lit:
    case term_tag::bool_lit:
      return t;
    case term_tag::var: {
      if (!seen.insert({t->vname, t->vsort}).second) return t;
      return mk_var(t->vname + ":" + sig.sort(t->vsort).name, t->vsort);
    }
    case term_tag::app:
      break;
  }
  std::vector<term_ptr> args;
  args.reserve(t->args.size());
  bool changed = false;
  for (const auto& a : t->args) {
    args.push_back(annotate(sig, a, seen));
    changed = changed || args.back() != a;
  }
  return changed ? mk_app(t->op, std::move(args)) : t;
}

struct stmt_printer {
  const signature& sig;
  std::set<std::pair<std::string, sort_id>> seen;

  std::string term(const term_ptr& t) {
    std::string s = print_term(sig, annotate(sig, t, seen));
    // a bare infix comma would read as a statement-level delimiter
    if (t->tag == term_tag::app) {
      const op_info& oi = sig.op(t->op);
      if (oi.pieces.size() >= 3 && oi.pieces.front() == "_" &&
          oi.pieces.back() == "_" &&
          std::find(oi.pieces.begin(), oi.pieces.end(), ",") !=
              oi.pieces.end())
        return "(" + s + ")";
    }
    return s;
  }

  std::string conds(const std::vector<condition>& cs) {
    std::string out;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const condition& c = cs[i];
      out += i ? " /\\ " : "";
      switch (c.k) {
        case condition::kind::equality:
          out += term(c.lhs) + " = " + term(c.rhs);
          break;
        case condition::kind::matching:
          out += term(c.lhs) + " := " + term(c.rhs);
          break;
        case condition::kind::sort_test:
          out += term(c.lhs) + " : " + sig.sort(c.sort).name;
          break;
      }
    }
    return out;
  }
};

}  // namespace

std::string print_module(const module_data& m) {
  const signature& sig = m.sig;
  std::ostringstream os;
  os << "mod " << m.name << " is\n";
  if (m.plain) os << "  plain .\n";

  // prelude proper sorts and ops occupy the same leading ids in both
  // signatures; kind tops land after the user sorts, so count them out
  signature prelude = *prelude_builder(m.plain).build();
  sort_id psorts = 0;
  for (sort_id s = 0; s < prelude.sort_count(); ++s)
    if (!prelude.sort(s).is_kind_top) ++psorts;
  op_id pops = prelude.op_count();

  std::vector<std::string> user_sorts;
  for (sort_id s = psorts; s < sig.sort_count(); ++s)
    if (!sig.sort(s).is_kind_top) user_sorts.push_back(sig.sort(s).name);
  if (!user_sorts.empty()) {
    os << (user_sorts.size() == 1 ? "  sort" : "  sorts");
    for (const auto& s : user_sorts) os << " " << s;
    os << " .\n";
  }

  // cover pairs of the proper-sort order, minus what the prelude carries
  for (sort_id a = 0; a < sig.sort_count(); ++a) {
    if (sig.sort(a).is_kind_top) continue;
    for (sort_id b = 0; b < sig.sort_count(); ++b) {
      if (a == b || sig.sort(b).is_kind_top || !sig.leq(a, b)) continue;
      if (a < psorts && b < psorts && prelude.leq(a, b)) continue;
      bool cover = true;
      for (sort_id c = 0; c < sig.sort_count() && cover; ++c)
        if (c != a && c != b && !sig.sort(c).is_kind_top && sig.leq(a, c) &&
            sig.leq(c, b))
          cover = false;
      if (cover)
        os << "  subsort " << sig.sort(a).name << " < " << sig.sort(b).name
           << " .\n";
    }
  }

  for (op_id o = pops; o < sig.op_count(); ++o) {
    const op_info& oi = sig.op(o);
    if (oi.is_prop) continue;
    os << "  op " << oi.name << " :";
    for (sort_id a : oi.args) os << " " << sig.sort(a).name;
    os << " -> " << sig.sort(oi.result).name;
    std::string attrs;
    if (oi.assoc) attrs += " assoc";
    if (oi.comm) attrs += " comm";
    if (oi.identity) attrs += " id: " + print_term(sig, oi.identity);
    if (oi.prec >= 0) attrs += " prec " + std::to_string(oi.prec);
    if (!attrs.empty()) os << " [" << attrs.substr(1) << "]";
    os << " .\n";
  }

  sort_id default_subject = no_sort;
  if (m.plain) {
    if (sig.state_sort != no_sort) default_subject = sig.top_of(sig.state_sort);
  } else if (sig.stage_sort != no_sort) {
    default_subject = sig.top_of(sig.stage_sort);
  }
  for (op_id o = pops; o < sig.op_count(); ++o) {
    const op_info& oi = sig.op(o);
    if (!oi.is_prop) continue;
    os << "  prop " << oi.pieces.front() << " : ";
    if (!oi.args.empty() && oi.args[0] != default_subject)
      os << sig.sort(oi.args[0]).name << " -> ";
    os << sig.sort(oi.prop_codomain).name;
    if (oi.prop_total) os << " [total]";
    os << " .\n";
  }

  for (const membership& mb : m.mbs) {
    stmt_printer p{sig, {}};
    os << (mb.cond.empty() ? "  mb " : "  cmb ") << p.term(mb.subject) << " : "
       << sig.sort(mb.sort).name;
    if (!mb.cond.empty()) os << " if " << p.conds(mb.cond);
    os << " .\n";
  }

  for (const equation& eq : m.eqs) {
    stmt_printer p{sig, {}};
    os << (eq.cond.empty() ? "  eq " : "  ceq ") << p.term(eq.lhs) << " = "
       << p.term(eq.rhs);
    if (!eq.cond.empty()) os << " if " << p.conds(eq.cond);
    if (eq.owise) os << " [otherwise]";
    os << " .\n";
  }

  for (const eg_rule& r : m.rules) {
    stmt_printer p{sig, {}};
    os << (r.cond.empty() ? "  rl " : "  crl ") << p.term(r.lhs) << " =[ "
       << p.term(r.label) << " ]=> " << p.term(r.rhs);
    if (!r.cond.empty()) os << " if " << p.conds(r.cond);
    os << " .\n";
  }

  for (const plain_rule& r : m.prules) {
    stmt_printer p{sig, {}};
    os << (r.cond.empty() ? "  rl " : "  crl ") << p.term(r.lhs) << " => "
       << p.term(r.rhs);
    if (!r.cond.empty()) os << " if " << p.conds(r.cond);
    os << " .\n";
  }

  os << "endm\n";
  return os.str();
}

std::string print_system(const system_node& n) {
  if (n.atomic()) return print_module(*n.mod);
  const signature& sig = n.synth->sig;
  std::ostringstream os;
  os << "mod " << n.name << " is\n";
  os << "  pr";
  for (std::size_t i = 0; i < n.children.size(); ++i)
    os << (i ? " || " : " ") << n.children[i]->name;
  for (std::size_t i = 0; i < n.criteria.size(); ++i) {
    const criterion& c = n.criteria[i];
    os << (i ? " /\\ " : "\n     sync on ");
    os << c.left_name << "." << c.left_prop << " = " << c.right_name << "."
       << c.right_prop;
  }
  os << " .\n";
  for (const exported_prop& e : n.exports) {
    os << "  prop " << e.name << " : " << e.codomain_name;
    if (e.total) os << " [total]";
    os << " .\n";
  }
  for (const exported_prop& e : n.exports) {
    if (!e.rhs) continue;
    stmt_printer p{sig, {}};
    term_ptr lhs = mk_app(e.op, {n.stage_var});
    os << "  eq " << p.term(lhs) << " = " << p.term(e.rhs) << " .\n";
  }
  os << "endm\n";
  return os.str();
}

}  // namespace ers
