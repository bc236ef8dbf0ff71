#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ers/egrw.hpp"
#include "ers/eval.hpp"
#include "ers/parse.hpp"

namespace ers {

namespace {

using tokvec = std::vector<token>;

int find_toplevel(const tokvec& v, std::size_t lo, std::size_t hi,
                  const std::string& text) {
  int depth = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const std::string& t = v[i].text;
    if (t == "(" || t == "[")
      ++depth;
    else if (t == ")" || t == "]")
      --depth;
    else if (depth == 0 && t == text)
      return static_cast<int>(i);
  }
  return -1;
}

// maximal glued runs, concatenated: `[` `Stage` `]` becomes "[Stage]"
std::vector<std::string> glued_runs(const tokvec& v, std::size_t lo,
                                    std::size_t hi,
                                    std::vector<source_span>* spans = nullptr) {
  std::vector<std::string> out;
  std::size_t i = lo;
  while (i < hi) {
    std::string s = v[i].text;
    source_span sp = v[i].span;
    std::size_t j = i + 1;
    while (j < hi && v[j].glued) {
      s += v[j].text;
      ++j;
    }
    out.push_back(std::move(s));
    if (spans) spans->push_back(sp);
    i = j;
  }
  return out;
}

// position of `=` immediately followed by a glued `[` (the rule arrow),
// and of the matching `]` at label depth zero; {-1, -1} when absent
std::pair<int, int> find_rule_arrow(const tokvec& v, std::size_t hi) {
  int depth = 0;
  int open = -1;
  for (std::size_t i = 0; i < hi; ++i) {
    const std::string& t = v[i].text;
    if (open < 0) {
      if (t == "(" || t == "[")
        ++depth;
      else if (t == ")" || t == "]")
        --depth;
      else if (depth == 0 && t == "=" && i + 1 < hi && v[i + 1].text == "[" &&
               v[i + 1].glued) {
        open = static_cast<int>(i);
        ++i;  // skip the bracket
        depth = 0;
      }
    } else {
      if (t == "(" || t == "[")
        ++depth;
      else if (t == ")")
        --depth;
      else if (t == "]") {
        if (depth == 0) return {open, static_cast<int>(i)};
        --depth;
      }
    }
  }
  return {-1, -1};
}

struct prop_sig {
  std::string name;
  std::string codomain;
  bool total = false;
};

std::vector<prop_sig> node_props(const system_ptr& n) {
  std::vector<prop_sig> out;
  if (n->atomic()) {
    const signature& sg = n->mod->sig;
    for (op_id o = 0; o < sg.op_count(); ++o) {
      const op_info& oi = sg.op(o);
      if (oi.is_prop)
        out.push_back({oi.pieces.front(), sg.sort(oi.prop_codomain).name,
                       oi.prop_total});
    }
  } else {
    for (const auto& e : n->exports)
      out.push_back({e.name, e.codomain_name, e.total});
  }
  return out;
}

struct resolver {
  std::vector<diagnostic>& diags;
  std::map<std::string, const raw_module*> raw;
  std::vector<std::string> order;
  std::map<std::string, std::shared_ptr<module_data>> atomics;
  std::map<std::string, system_ptr> systems;
  std::set<std::string> busy;

  void err(source_span sp, std::string code, std::string msg) {
    diags.push_back(
        {severity::error, std::move(code), std::move(msg), std::move(sp)});
  }

  static bool is_composed(const raw_module& rm) {
    return std::any_of(rm.stmts.begin(), rm.stmts.end(), [](const raw_stmt& s) {
      return s.kind == stmt_kind::compose;
    });
  }

  system_ptr get(const std::string& name, source_span at) {
    if (auto it = systems.find(name); it != systems.end()) return it->second;
    auto rit = raw.find(name);
    if (rit == raw.end()) {
      err(at, "E-UNKNOWN-MODULE", "module " + name + " is not defined");
      return nullptr;
    }
    if (busy.count(name)) {
      err(at, "E-IMPORT-CYCLE", "module " + name + " depends on itself");
      return nullptr;
    }
    busy.insert(name);
    system_ptr n = is_composed(*rit->second) ? build_composed(*rit->second)
                                             : build_atomic(*rit->second);
    busy.erase(name);
    systems[name] = n;
    if (n) {
      order.push_back(name);
      if (n->atomic()) atomics[name] = n->mod;
    }
    return n;
  }

  bool splice(const raw_module& rm, std::vector<const raw_stmt*>& out,
              std::set<std::string>& seen, std::set<std::string>& path) {
    path.insert(rm.name);
    bool ok = true;
    for (const raw_stmt& st : rm.stmts) {
      if (st.kind != stmt_kind::import) {
        out.push_back(&st);
        continue;
      }
      if (st.toks.size() != 1) {
        err(st.span, "E-IMPORT", "imports name exactly one module");
        ok = false;
        continue;
      }
      const std::string& target = st.toks[0].text;
      if (path.count(target)) {
        err(st.toks[0].span, "E-IMPORT-CYCLE",
            "import cycle through " + target);
        ok = false;
        continue;
      }
      if (seen.count(target)) continue;
      seen.insert(target);
      auto rit = raw.find(target);
      if (rit == raw.end()) {
        err(st.toks[0].span, "E-UNKNOWN-MODULE",
            "module " + target + " is not defined");
        ok = false;
        continue;
      }
      if (is_composed(*rit->second)) {
        err(st.toks[0].span, "E-IMPORT-COMPOSED",
            "composed systems are combined with ||, not imported");
        ok = false;
        continue;
      }
      if (!splice(*rit->second, out, seen, path)) ok = false;
    }
    path.erase(rm.name);
    return ok;
  }

  std::vector<condition> parse_conds(const signature& sig,
                                     std::map<std::string, sort_id>& scope,
                                     const tokvec& toks, std::size_t lo,
                                     std::size_t hi, bool& ok) {
    std::vector<condition> out;
    std::size_t start = lo;
    while (start < hi) {
      int sep = find_toplevel(toks, start, hi, "/\\");
      std::size_t stop = sep < 0 ? hi : static_cast<std::size_t>(sep);
      condition c;
      int m = find_toplevel(toks, start, stop, ":=");
      int e = m < 0 ? find_toplevel(toks, start, stop, "=") : -1;
      int s = (m < 0 && e < 0) ? find_toplevel(toks, start, stop, ":") : -1;
      if (m >= 0) {
        c.k = condition::kind::matching;
        c.lhs = parse_term_slice(sig, scope, toks, start, m, no_sort, diags);
        if (c.lhs)
          c.rhs = parse_term_slice(sig, scope, toks, m + 1, stop,
                                   least_sort_syntactic(sig, c.lhs), diags);
      } else if (e >= 0) {
        c.k = condition::kind::equality;
        c.lhs = parse_term_slice(sig, scope, toks, start, e, no_sort, diags);
        if (c.lhs)
          c.rhs = parse_term_slice(sig, scope, toks, e + 1, stop,
                                   least_sort_syntactic(sig, c.lhs), diags);
      } else if (s >= 0) {
        c.k = condition::kind::sort_test;
        auto refs = glued_runs(toks, s + 1, stop);
        if (refs.size() != 1 ||
            (c.sort = find_sort_ref(sig, refs[0])) == no_sort) {
          err(toks[s].span, "E-UNKNOWN-SORT", "sort test needs a known sort");
          ok = false;
          start = stop + 1;
          continue;
        }
        c.lhs = parse_term_slice(sig, scope, toks, start, s, c.sort, diags);
      } else {
        err(toks[start].span, "E-COND",
            "condition must be `a = b`, `p := b`, or `t : Sort`");
        ok = false;
        start = stop + 1;
        continue;
      }
      if (!c.lhs || (c.k != condition::kind::sort_test && !c.rhs)) {
        ok = false;
      } else {
        out.push_back(std::move(c));
      }
      start = stop + 1;
    }
    return out;
  }

  // left-to-right binding discipline for equations, which must run
  void check_eq_bound(const equation& eq, source_span sp) {
    std::map<std::pair<std::string, sort_id>, sort_id> avail, tmp;
    collect_vars(eq.lhs, avail);
    auto covered = [&](const term_ptr& t) {
      tmp.clear();
      collect_vars(t, tmp);
      for (const auto& [k, v] : tmp)
        if (!avail.count(k)) return k.first;
      return std::string();
    };
    for (const auto& c : eq.cond) {
      std::string bad;
      if (c.k == condition::kind::matching) {
        bad = covered(c.rhs);
        collect_vars(c.lhs, avail);
      } else {
        bad = covered(c.lhs);
        if (bad.empty() && c.rhs) bad = covered(c.rhs);
      }
      if (!bad.empty()) {
        err(sp, "E-UNBOUND", "condition uses unbound variable " + bad);
        return;
      }
    }
    std::string bad = covered(eq.rhs);
    if (!bad.empty())
      err(sp, "E-UNBOUND", "right side uses unbound variable " + bad);
  }

  system_ptr build_atomic(const raw_module& rm) {
    std::vector<const raw_stmt*> ss;
    std::set<std::string> seen{rm.name}, path;
    splice(rm, ss, seen, path);

    bool plain = std::any_of(ss.begin(), ss.end(), [](const raw_stmt* s) {
      return s->kind == stmt_kind::plain_marker;
    });
    signature_builder sb = prelude_builder(plain);

    struct var_decl {
      std::string name, ref;
      source_span sp;
    };
    std::vector<var_decl> vds;

    for (const raw_stmt* stp : ss) {
      const raw_stmt& st = *stp;
      const tokvec& v = st.toks;
      switch (st.kind) {
        case stmt_kind::sorts:
          for (const auto& name : glued_runs(v, 0, v.size())) {
            if (name.find_first_of("[]():") != std::string::npos) {
              err(st.span, "E-SORT-NAME", "bad sort name " + name);
              continue;
            }
            sb.add_sort(name);
          }
          break;
        case stmt_kind::subsorts: {
          std::vector<std::vector<std::string>> groups(1);
          for (std::size_t i = 0; i < v.size();) {
            if (v[i].text == "<") {
              groups.emplace_back();
              ++i;
              continue;
            }
            std::string s = v[i].text;
            std::size_t j = i + 1;
            while (j < v.size() && v[j].glued) s += v[j++].text;
            groups.back().push_back(std::move(s));
            i = j;
          }
          if (groups.size() < 2)
            err(st.span, "E-SUBSORT", "subsort needs `A < B`");
          for (std::size_t g = 0; g + 1 < groups.size(); ++g)
            for (const auto& a : groups[g])
              for (const auto& b : groups[g + 1]) sb.add_subsort(a, b);
          break;
        }
        case stmt_kind::ops: {
          int colon = find_toplevel(v, 0, v.size(), ":");
          int arrow = colon < 0 ? -1 : find_toplevel(v, colon + 1, v.size(), "->");
          if (colon < 0 || arrow < 0) {
            err(st.span, "E-OP", "operator declarations read `op N : A -> R`");
            break;
          }
          auto names = glued_runs(v, 0, colon);
          auto args = glued_runs(v, colon + 1, arrow);
          // result is one glued run; an unglued `[` afterwards opens attributes
          std::size_t i = static_cast<std::size_t>(arrow) + 1;
          if (i >= v.size()) {
            err(st.span, "E-OP", "result sort missing");
            break;
          }
          std::string result = v[i].text;
          ++i;
          while (i < v.size() && v[i].glued) result += v[i++].text;
          bool assoc = false, comm = false;
          std::string identity;
          int prec = -1;
          if (i < v.size()) {
            if (v[i].text != "[" || v.back().text != "]") {
              err(v[i].span, "E-OP", "unexpected tokens after result sort");
              break;
            }
            std::size_t a = i + 1, hi = v.size() - 1;
            bool bad = false;
            while (a < hi && !bad) {
              const std::string& w = v[a].text;
              if (w == "assoc") {
                assoc = true;
                ++a;
              } else if (w == "comm") {
                comm = true;
                ++a;
              } else if (w == "id:") {
                ++a;
                identity.clear();
                while (a < hi && v[a].text != "assoc" && v[a].text != "comm" &&
                       v[a].text != "prec" && v[a].text != "id:")
                  identity += v[a++].text;
                if (identity.empty()) {
                  err(st.span, "E-ATTR", "id: needs a constant");
                  bad = true;
                }
              } else if (w == "prec") {
                ++a;
                if (a < hi) {
                  prec = std::stoi(v[a].text);
                  ++a;
                } else {
                  err(st.span, "E-ATTR", "prec needs a number");
                  bad = true;
                }
              } else {
                err(v[a].span, "E-ATTR", "unknown attribute " + w);
                bad = true;
              }
            }
            if (bad) break;
          }
          for (const auto& nm : names) {
            signature_builder::op_decl d;
            d.name = nm;
            d.args = args;
            d.result = result;
            d.assoc = assoc;
            d.comm = comm;
            d.identity = identity;
            d.prec = prec;
            if (nm == "agree") d.builtin = true;
            sb.add_op(std::move(d));
          }
          break;
        }
        case stmt_kind::vars: {
          int colon = find_toplevel(v, 0, v.size(), ":");
          if (colon < 0) {
            err(st.span, "E-VAR", "variable declarations read `var X : Sort`");
            break;
          }
          auto names = glued_runs(v, 0, colon);
          auto refs = glued_runs(v, colon + 1, v.size());
          if (refs.size() != 1) {
            err(st.span, "E-VAR", "exactly one sort expected");
            break;
          }
          for (const auto& nm : names) vds.push_back({nm, refs[0], st.span});
          break;
        }
        case stmt_kind::prop: {
          int colon = find_toplevel(v, 0, v.size(), ":");
          if (colon != 1 || v.size() < 3) {
            err(st.span, "E-PROP", "properties read `prop name : Sort`");
            break;
          }
          // The subject sort defaults to the module's stage kind; an
          // explicit `prop name : Subject -> Sort` overrides it.
          int arrow = find_toplevel(v, 2, v.size(), "->");
          std::string subject;
          std::size_t cpos = 2;
          if (arrow >= 0) {
            auto doms = glued_runs(v, 2, arrow);
            if (doms.size() != 1 ||
                static_cast<std::size_t>(arrow) + 1 >= v.size()) {
              err(st.span, "E-PROP",
                  "property subjects read `prop name : Subject -> Sort`");
              break;
            }
            subject = doms[0];
            cpos = arrow + 1;
          }
          std::string codomain = v[cpos].text;
          bool total = false;
          std::size_t i = cpos + 1;
          while (i < v.size() && v[i].glued) codomain += v[i++].text;
          if (i < v.size()) {
            if (i + 3 == v.size() && v[i].text == "[" &&
                v[i + 1].text == "total" && v[i + 2].text == "]") {
              total = true;
            } else {
              err(v[i].span, "E-PROP", "only [total] may follow the sort");
              break;
            }
          }
          signature_builder::op_decl d;
          d.name = v[0].text + " @ _";
          if (subject.empty())
            d.args = {plain ? "[State]" : "[Stage]"};
          else if (subject.front() == '[')
            d.args = {subject};
          else
            d.args = {"[" + subject + "]"};
          d.result = "[" + codomain + "]";
          d.prec = 90;
          d.is_prop = true;
          d.prop_codomain = codomain;
          d.prop_total = total;
          sb.add_op(std::move(d));
          break;
        }
        default:
          break;
      }
    }

    // fresh labels for `=[*]=>` rules
    std::map<const raw_stmt*, std::string> tau;
    int tau_n = 0;
    for (const raw_stmt* stp : ss) {
      if (stp->kind != stmt_kind::rule || plain) continue;
      auto [open, close] = find_rule_arrow(stp->toks, stp->toks.size());
      if (open < 0 || close != open + 3 || stp->toks[open + 2].text != "*")
        continue;
      std::string name;
      do {
        name = "tau#" + std::to_string(++tau_n);
      } while (sb.has_op(name));
      signature_builder::op_decl d;
      d.name = name;
      d.result = "Trans";
      d.synthesized = true;
      sb.add_op(std::move(d));
      tau[stp] = name;
    }

    auto md = std::make_shared<module_data>();
    md->name = rm.name;
    md->plain = plain;
    try {
      md->sig = *sb.build();
    } catch (const engine_error& ex) {
      err(rm.span, "E-SIG", rm.name + ": " + ex.what());
      return nullptr;
    }
    const signature& sig = md->sig;

    std::map<std::string, sort_id> base_vars;
    for (const auto& vd : vds) {
      sort_id s = find_sort_ref(sig, vd.ref);
      if (s == no_sort)
        err(vd.sp, "E-UNKNOWN-SORT", "unknown sort " + vd.ref);
      else
        base_vars[vd.name] = s;
    }

    for (const raw_stmt* stp : ss) {
      const raw_stmt& st = *stp;
      const tokvec& v = st.toks;
      auto scope = base_vars;
      switch (st.kind) {
        case stmt_kind::eq: {
          std::size_t hi = v.size();
          bool owise = false;
          if (hi >= 3 && v[hi - 3].text == "[" &&
              (v[hi - 2].text == "otherwise" || v[hi - 2].text == "owise") &&
              v[hi - 1].text == "]") {
            owise = true;
            hi -= 3;
          }
          int ifx = find_toplevel(v, 0, hi, "if");
          std::size_t body = ifx < 0 ? hi : static_cast<std::size_t>(ifx);
          int e = find_toplevel(v, 0, body, "=");
          if (e < 0) {
            err(st.span, "E-EQ", "equations read `eq lhs = rhs`");
            break;
          }
          equation eq;
          eq.owise = owise;
          eq.lhs = parse_term_slice(sig, scope, v, 0, e, no_sort, diags);
          if (!eq.lhs) break;
          eq.rhs = parse_term_slice(sig, scope, v, e + 1, body,
                                    least_sort_syntactic(sig, eq.lhs), diags);
          if (!eq.rhs) break;
          bool ok = true;
          if (ifx >= 0)
            eq.cond = parse_conds(sig, scope, v, ifx + 1, hi, ok);
          if (!ok) break;
          if (eq.lhs->tag != term_tag::app) {
            err(st.span, "E-BAD-LHS",
                "equation left side must be an operator application");
            break;
          }
          check_eq_bound(eq, st.span);
          md->eqs.push_back(std::move(eq));
          break;
        }
        case stmt_kind::mb: {
          int ifx = find_toplevel(v, 0, v.size(), "if");
          std::size_t body = ifx < 0 ? v.size() : static_cast<std::size_t>(ifx);
          int colon = find_toplevel(v, 0, body, ":");
          if (colon < 0) {
            err(st.span, "E-MB", "memberships read `mb term : Sort`");
            break;
          }
          auto refs = glued_runs(v, colon + 1, body);
          membership mb;
          if (refs.size() != 1 ||
              (mb.sort = find_sort_ref(sig, refs[0])) == no_sort ||
              sig.sort(mb.sort).is_kind_top) {
            err(st.span, "E-MB", "membership needs a proper sort");
            break;
          }
          mb.subject =
              parse_term_slice(sig, scope, v, 0, colon, mb.sort, diags);
          if (!mb.subject) break;
          bool ok = true;
          if (ifx >= 0)
            mb.cond = parse_conds(sig, scope, v, ifx + 1, v.size(), ok);
          if (!ok) break;
          md->mbs.push_back(std::move(mb));
          break;
        }
        case stmt_kind::rule: {
          int ifx = find_toplevel(v, 0, v.size(), "if");
          std::size_t body = ifx < 0 ? v.size() : static_cast<std::size_t>(ifx);
          auto [open, close] = find_rule_arrow(v, body);
          if (plain) {
            if (open >= 0) {
              err(st.span, "E-PLAIN-LABELED",
                  "this module is plain; transitions are written `lhs => rhs`");
              break;
            }
            int arrow = find_toplevel(v, 0, body, "=>");
            if (arrow < 0) {
              err(st.span, "E-RULE", "transitions read `rl lhs => rhs`");
              break;
            }
            plain_rule r;
            r.lhs = parse_term_slice(sig, scope, v, 0, arrow, sig.state_sort,
                                     diags);
            if (!r.lhs) break;
            r.rhs = parse_term_slice(sig, scope, v, arrow + 1, body,
                                     sig.state_sort, diags);
            if (!r.rhs) break;
            bool ok = true;
            if (ifx >= 0)
              r.cond = parse_conds(sig, scope, v, ifx + 1, v.size(), ok);
            if (!ok) break;
            md->prules.push_back(std::move(r));
            break;
          }
          if (open < 0) {
            if (!v.empty() && v[0].text == "[") {
              err(st.span, "E-LABEL-REQUIRED",
                  "`rl [name] : lhs => rhs` puts the label aside; write "
                  "`rl lhs =[ name ]=> rhs` so the transition is a term");
            } else if (find_toplevel(v, 0, body, "=>") >= 0) {
              err(st.span, "E-LABEL-REQUIRED",
                  "transitions need a label term: `rl lhs =[ label ]=> rhs`");
            } else {
              err(st.span, "E-RULE", "malformed rule");
            }
            break;
          }
          std::size_t lstart = static_cast<std::size_t>(open) + 2;
          std::size_t lclose = static_cast<std::size_t>(close);
          if (lclose + 1 >= body || v[lclose + 1].text != "=>") {
            err(st.span, "E-RULE", "`]=>` expected after the label");
            break;
          }
          eg_rule r;
          r.lhs =
              parse_term_slice(sig, scope, v, 0, open, sig.stage_sort, diags);
          if (!r.lhs) break;
          if (auto t = tau.find(stp); t != tau.end()) {
            r.label = mk_app(sig.ops_named(t->second)[0], {});
          } else {
            r.label = parse_term_slice(sig, scope, v, lstart, lclose,
                                       sig.stage_sort, diags);
            if (!r.label) break;
          }
          r.rhs = parse_term_slice(sig, scope, v, lclose + 2, body,
                                   sig.stage_sort, diags);
          if (!r.rhs) break;
          bool ok = true;
          if (ifx >= 0)
            r.cond = parse_conds(sig, scope, v, ifx + 1, v.size(), ok);
          if (!ok) break;
          md->rules.push_back(std::move(r));
          break;
        }
        default:
          break;
      }
    }

    md->finalize();
    for (diagnostic d : check_topmost(*md)) {
      d.span = rm.span;
      d.message = rm.name + ": " + d.message;
      diags.push_back(std::move(d));
    }
    for (diagnostic d : check_admissible(*md)) {
      d.span = rm.span;
      d.message = rm.name + ": " + d.message;
      diags.push_back(std::move(d));
    }

    auto node = std::make_shared<system_node>();
    node->name = rm.name;
    node->mod = md;
    node->ev = std::make_shared<evaluator>(*md);
    return node;
  }

  // validates a routing-equation right side: projections on the stage
  // variable, properties on projections or the stage, data operations
  bool check_routing(const system_node& node, const signature& sig,
                     const term_ptr& t, source_span sp) {
    switch (t->tag) {
      case term_tag::int_lit:
      case term_tag::bool_lit:
        return true;
      case term_tag::var:
        return true;  // the stage variable; parse scope is that narrow
      case term_tag::app:
        break;
    }
    const op_info& oi = sig.op(t->op);
    bool is_proj = std::find(node.projections.begin(), node.projections.end(),
                             t->op) != node.projections.end();
    if (is_proj) {
      if (t->args[0]->tag != term_tag::var) {
        err(sp, "E-EXPORT-PROJ",
            "projections apply to the composed stage variable");
        return false;
      }
      return true;
    }
    if (oi.is_prop) {
      const term_ptr& a = t->args[0];
      if (a->tag == term_tag::app &&
          std::find(node.projections.begin(), node.projections.end(), a->op) !=
              node.projections.end())
        return check_routing(node, sig, a, sp);
      err(sp, "E-EXPORT-SHAPE",
          "the stage reaches properties only through projections");
      return false;
    }
    if (oi.builtin) {
      for (const auto& a : t->args)
        if (!check_routing(node, sig, a, sp)) return false;
      return true;
    }
    err(sp, "E-EXPORT-OP",
        "routing equations combine projections, properties, literals, and "
        "data operations only");
    return false;
  }

  system_ptr build_composed(const raw_module& rm) {
    const raw_stmt* comp = nullptr;
    std::vector<const raw_stmt*> props, eqs, varss;
    bool bad = false;
    for (const raw_stmt& st : rm.stmts) {
      switch (st.kind) {
        case stmt_kind::compose:
          if (comp) {
            err(st.span, "E-MULTI-COMPOSE",
                "a module declares at most one composition");
            bad = true;
          }
          comp = &st;
          break;
        case stmt_kind::prop:
          props.push_back(&st);
          break;
        case stmt_kind::eq:
          eqs.push_back(&st);
          break;
        case stmt_kind::vars:
          varss.push_back(&st);
          break;
        default:
          err(st.span, "E-COMPOSED-STMT",
              "composed modules hold the composition, exported properties, "
              "and their routing equations only");
          bad = true;
      }
    }
    if (!comp || bad) return nullptr;

    // pr A || B || C sync on A.p = B.q /\ ...
    const tokvec& v = comp->toks;
    auto node = std::make_shared<system_node>();
    node->name = rm.name;
    std::size_t i = 0;
    std::vector<source_span> child_spans;
    while (true) {
      if (i >= v.size()) {
        err(comp->span, "E-COMPOSE", "component name expected");
        return nullptr;
      }
      const token& nm = v[i];
      system_ptr child = get(nm.text, nm.span);
      if (!child) return nullptr;
      for (const auto& c : node->children)
        if (c->name == nm.text) {
          err(nm.span, "E-DUP-COMPONENT",
              "component " + nm.text + " appears twice; duplicate the module "
              "under a new name instead");
          return nullptr;
        }
      node->children.push_back(child);
      child_spans.push_back(nm.span);
      ++i;
      if (i + 1 < v.size() && v[i].text == "|" && v[i + 1].text == "|") {
        i += 2;
        continue;
      }
      break;
    }
    if (node->children.size() < 2) {
      err(comp->span, "E-COMPOSE", "compositions take at least two components");
      return nullptr;
    }
    if (i < v.size()) {
      if (v[i].text != "sync" || i + 1 >= v.size() || v[i + 1].text != "on") {
        err(v[i].span, "E-COMPOSE", "`sync on` expected before criteria");
        return nullptr;
      }
      i += 2;
      std::size_t start = i;
      while (start < v.size()) {
        int sep = find_toplevel(v, start, v.size(), "/\\");
        std::size_t stop = sep < 0 ? v.size() : static_cast<std::size_t>(sep);
        if (stop - start != 3 || v[start + 1].text != "=") {
          err(v[start].span, "E-CRIT",
              "criteria read `COMP.prop = COMP.prop`");
          return nullptr;
        }
        auto endpoint = [&](const token& t, std::vector<int>& path,
                            std::string& cname,
                            std::string& prop) -> std::optional<prop_sig> {
          auto dot = t.text.rfind('.');
          if (dot == std::string::npos || dot == 0 ||
              dot + 1 == t.text.size()) {
            err(t.span, "E-CRIT", "criterion endpoints are COMP.prop");
            return std::nullopt;
          }
          cname = t.text.substr(0, dot);
          prop = t.text.substr(dot + 1);
          std::string why;
          auto p = resolve_component(*node, cname, why);
          if (!p) {
            err(t.span, "E-UNKNOWN-COMPONENT", why + " in " + rm.name);
            return std::nullopt;
          }
          path = *p;
          for (const auto& ps : node_props(node_at(node, path)))
            if (ps.name == prop) return ps;
          err(t.span, "E-UNKNOWN-PROP", cname + " has no property " + prop);
          return std::nullopt;
        };
        criterion c;
        auto lp = endpoint(v[start], c.left_path, c.left_name, c.left_prop);
        if (!lp) return nullptr;
        auto rp =
            endpoint(v[start + 2], c.right_path, c.right_name, c.right_prop);
        if (!rp) return nullptr;
        if (lp->codomain != rp->codomain ||
            (lp->codomain != "Bool" && lp->codomain != "Int")) {
          err(v[start + 1].span, "E-CRIT-KIND",
              "criterion endpoints must both be Bool- or both Int-valued");
          return nullptr;
        }
        c.total = lp->total && rp->total;
        node->criteria.push_back(std::move(c));
        start = stop + 1;
      }
    }

    // synthetic signature for the routing equations
    signature_builder sb = prelude_builder(false);
    for (const auto& child : node->children) {
      sb.add_sort(child->name + ".Stage");
      signature_builder::op_decl d;
      d.name = child->name;
      d.args = {"Stage"};
      d.result = child->name + ".Stage";
      d.synthesized = true;
      sb.add_op(std::move(d));
      for (const auto& p : node_props(child)) {
        signature_builder::op_decl pd;
        pd.name = p.name + " @ _";
        pd.args = {"[" + child->name + ".Stage]"};
        pd.result = "[" + p.codomain + "]";
        pd.prec = 90;
        pd.is_prop = true;
        pd.prop_codomain = p.codomain;
        pd.prop_total = p.total;
        sb.add_op(std::move(pd));
      }
    }
    for (const raw_stmt* stp : props) {
      const tokvec& pv = stp->toks;
      int colon = find_toplevel(pv, 0, pv.size(), ":");
      if (colon != 1) {
        err(stp->span, "E-PROP", "properties read `prop name : Sort`");
        continue;
      }
      exported_prop e;
      e.name = pv[0].text;
      std::size_t k = 2;
      e.codomain_name = pv[k].text;
      ++k;
      while (k < pv.size() && pv[k].glued) e.codomain_name += pv[k++].text;
      if (k + 3 == pv.size() && pv[k].text == "[" &&
          pv[k + 1].text == "total" && pv[k + 2].text == "]") {
        e.total = true;
        k += 3;
      }
      if (k != pv.size()) {
        err(stp->span, "E-PROP", "only [total] may follow the sort");
        continue;
      }
      signature_builder::op_decl pd;
      pd.name = e.name + " @ _";
      pd.args = {"[Stage]"};
      pd.result = "[" + e.codomain_name + "]";
      pd.prec = 90;
      pd.is_prop = true;
      pd.prop_codomain = e.codomain_name;
      pd.prop_total = e.total;
      sb.add_op(std::move(pd));
      node->exports.push_back(std::move(e));
    }

    auto synth = std::make_shared<module_data>();
    synth->name = rm.name;
    try {
      synth->sig = *sb.build();
    } catch (const engine_error& ex) {
      err(rm.span, "E-SIG", rm.name + ": " + ex.what());
      return nullptr;
    }
    synth->finalize();
    node->synth = synth;
    const signature& sig = synth->sig;
    for (const auto& child : node->children)
      node->projections.push_back(sig.ops_named(child->name)[0]);

    std::map<std::string, sort_id> base_vars;
    for (const raw_stmt* stp : varss) {
      const tokvec& vv = stp->toks;
      int colon = find_toplevel(vv, 0, vv.size(), ":");
      if (colon < 0) {
        err(stp->span, "E-VAR", "variable declarations read `var X : Sort`");
        continue;
      }
      auto names = glued_runs(vv, 0, colon);
      auto refs = glued_runs(vv, colon + 1, vv.size());
      sort_id s = refs.size() == 1 ? find_sort_ref(sig, refs[0]) : no_sort;
      if (s == no_sort) {
        err(stp->span, "E-UNKNOWN-SORT", "unknown sort in variable");
        continue;
      }
      for (const auto& nm : names) base_vars[nm] = s;
    }

    for (const raw_stmt* stp : eqs) {
      const tokvec& ev = stp->toks;
      if (find_toplevel(ev, 0, ev.size(), "if") >= 0) {
        err(stp->span, "E-EXPORT-COND", "routing equations are unconditional");
        continue;
      }
      int e = find_toplevel(ev, 0, ev.size(), "=");
      if (e < 0) {
        err(stp->span, "E-EQ", "equations read `eq lhs = rhs`");
        continue;
      }
      auto scope = base_vars;
      term_ptr lhs =
          parse_term_slice(sig, scope, ev, 0, e, no_sort, diags);
      if (!lhs) continue;
      const op_info* oi =
          lhs->tag == term_tag::app ? &sig.op(lhs->op) : nullptr;
      if (!oi || !oi->is_prop || lhs->args.size() != 1 ||
          lhs->args[0]->tag != term_tag::var ||
          sig.kind_of(lhs->args[0]->vsort) != sig.kind_of(sig.stage_sort)) {
        err(stp->span, "E-EXPORT-SHAPE",
            "routing equations take the form `p @ G = ...`");
        continue;
      }
      std::string pname = oi->pieces.front();
      auto slot = std::find_if(node->exports.begin(), node->exports.end(),
                               [&](const exported_prop& x) {
                                 return x.name == pname;
                               });
      if (slot == node->exports.end()) {
        err(stp->span, "E-EXPORT-UNKNOWN",
            pname + " is not declared as a property of " + rm.name);
        continue;
      }
      if (slot->rhs) {
        err(stp->span, "E-EXPORT-DUP",
            pname + " already has a routing equation");
        continue;
      }
      sort_id cod = find_sort_ref(sig, slot->codomain_name);
      term_ptr rhs =
          parse_term_slice(sig, scope, ev, e + 1, ev.size(), cod, diags);
      if (!rhs) continue;
      if (!check_routing(*node, sig, rhs, stp->span)) continue;
      slot->op = lhs->op;
      slot->rhs = rhs;
      node->stage_var = lhs->args[0];
      synth->eqs.push_back({lhs, rhs, {}, false, ""});
    }
    for (const auto& x : node->exports)
      if (!x.rhs)
        err(rm.span, "E-EXPORT-MISSING",
            rm.name + ": property " + x.name + " has no routing equation");

    return node;
  }
};

}  // namespace

bool resolved_set::ok() const {
  return std::none_of(diags.begin(), diags.end(), [](const diagnostic& d) {
    return d.sev == severity::error;
  });
}

system_ptr resolved_set::find(const std::string& name) const {
  auto it = systems.find(name);
  return it == systems.end() ? nullptr : it->second;
}

resolved_set resolve_files(const std::vector<source_unit>& files) {
  resolved_set rs;
  std::vector<raw_module> all;
  for (const auto& f : files) {
    auto toks = lex(f.text, f.path);
    for (auto& rm : split_modules(toks, rs.diags)) all.push_back(std::move(rm));
  }
  resolver r{rs.diags, {}, {}, {}, {}, {}};
  for (const auto& rm : all) {
    if (r.raw.count(rm.name)) {
      r.err(rm.span, "E-DUP-MODULE", "module " + rm.name + " defined twice");
      continue;
    }
    r.raw[rm.name] = &rm;
  }
  for (const auto& rm : all)
    if (r.raw.count(rm.name) && r.raw[rm.name] == &rm) r.get(rm.name, rm.span);
  rs.order = std::move(r.order);
  rs.atomics = std::move(r.atomics);
  rs.systems = std::move(r.systems);
  return rs;
}

term_ptr parse_term_text(const module_data& m, const std::string& text,
                         std::vector<diagnostic>& diags) {
  auto toks = lex(text, "<term>");
  std::map<std::string, sort_id> scope;
  return parse_term_slice(m.sig, scope, toks, 0, toks.size(), no_sort, diags);
}

}  // namespace ers
