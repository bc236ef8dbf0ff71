#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ers/compose.hpp"
#include "ers/diag.hpp"
#include "ers/module.hpp"

namespace ers {

// Whitespace separates tokens; `( ) [ ] , |` self-delimit inside words;
// `---` and `***` start comments running to end of line. A standalone `.`
// terminates statements. `glued` records that a token abuts the previous
// one with no whitespace between, which is how multi-token operator names
// (`_,_`, `lmoving|_`, `[Stage]`) and call parentheses are recognized.
struct token {
  std::string text;
  source_span span;
  long offset = 0;
  bool glued = false;
};

std::vector<token> lex(const std::string& text, const std::string& file);

enum class stmt_kind {
  plain_marker,  // plain .
  sorts,         // sort(s) NAME... .
  subsorts,      // subsort(s) A < B < C .
  ops,           // op(s) NAME... : Args -> Result [attrs] .
  vars,          // var(s) X Y : Sort .
  prop,          // prop name : Codomain . (optionally [total])
  eq,            // eq/ceq lhs = rhs (if conds) ([otherwise]) .
  mb,            // mb/cmb term : Sort (if conds) .
  rule,          // rl/crl t =[ l ]=> u (if conds) . ; plain: t => u
  import,        // pr NAME .
  compose,       // pr A || B (sync on A.p = B.q /\ ...) .
};

struct raw_stmt {
  stmt_kind kind;
  std::vector<token> toks;  // keyword and terminator stripped
  source_span span;
};

struct raw_module {
  std::string name;
  source_span span;
  std::vector<raw_stmt> stmts;
};

// Statement splitting only; bodies stay as token slices. Recovers at the
// next `.` after a malformed statement.
std::vector<raw_module> split_modules(const std::vector<token>& toks,
                                      std::vector<diagnostic>& diags);

// Looks up a sort reference: "S" finds the sort, "[S]" its kind top.
sort_id find_sort_ref(const signature& sig, const std::string& ref);

// Parses toks[lo, hi) as one term of the given signature. `vars` is the
// statement scope; inline `X:Sort` occurrences are added to it. When
// `expected` names a sort, the result must live in its kind; residual
// ambiguity is an error. Returns null after reporting a diagnostic.
term_ptr parse_term_slice(const signature& sig,
                          std::map<std::string, sort_id>& vars,
                          const std::vector<token>& toks, std::size_t lo,
                          std::size_t hi, sort_id expected,
                          std::vector<diagnostic>& diags);

struct source_unit {
  std::string path;
  std::string text;
};

struct resolved_set {
  std::vector<std::string> order;  // definition order across files
  std::map<std::string, std::shared_ptr<module_data>> atomics;
  std::map<std::string, system_ptr> systems;  // every module, atomic too
  std::vector<diagnostic> diags;

  bool ok() const;
  system_ptr find(const std::string& name) const;
};

// Full pipeline: lex, split, resolve imports by splicing, build
// signatures, parse statement bodies, wire compositions, and attach the
// stage-shape and executability warnings.
resolved_set resolve_files(const std::vector<source_unit>& files);

// Parses one term against a resolved module (command line entry).
term_ptr parse_term_text(const module_data& m, const std::string& text,
                         std::vector<diagnostic>& diags);

// Renders a resolved module back to source form. Reparsing the result
// yields a structurally identical module.
std::string print_module(const module_data& m);

// Same for a component tree: atomic nodes print their module, composed
// nodes their composition, exported properties, and routing equations.
std::string print_system(const system_node& n);

}  // namespace ers
