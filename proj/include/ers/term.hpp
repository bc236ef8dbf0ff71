#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ers/signature.hpp"

namespace ers {

enum class term_tag : std::uint8_t { int_lit, bool_lit, var, app };

/// Immutable term node. AC applications keep a flattened child list; canonical
/// forms additionally have children sorted and identity elements erased.
class term {
 public:
  term_tag tag;
  long long ival = 0;
  bool bval = false;
  std::string vname;
  sort_id vsort = no_sort;
  op_id op = no_op;
  std::vector<term_ptr> args;
  std::size_t hash = 0;
};

term_ptr mk_int(long long v);
term_ptr mk_bool(bool v);
term_ptr mk_var(std::string name, sort_id sort);
term_ptr mk_app(op_id op, std::vector<term_ptr> args);

bool term_eq(const term_ptr& a, const term_ptr& b);

/// Total order: tag rank, then value / (operator name, arity, children)
/// lexicographically. Deterministic across runs; AC children are sorted by it.
int term_cmp(const signature& sig, const term_ptr& a, const term_ptr& b);

/// AC arguments flattened, identity elements erased, AC and comm children
/// sorted. Idempotent; equal canonical forms mean equality modulo the
/// operators' equational attributes.
term_ptr canonicalize(const signature& sig, const term_ptr& t);

bool has_vars(const term_ptr& t);
void collect_vars(const term_ptr& t,
                  std::map<std::pair<std::string, sort_id>, sort_id>& out);

struct print_options {
  bool strip_qualifiers = false;  // print "stopped" for "LTRAIN.stopped"
};

std::string print_term(const signature& sig, const term_ptr& t,
                       const print_options& opts = {});

/// Least sort derivable from declarations alone (no membership axioms):
/// literals get Int/Bool, variables their declared sort, applications the
/// declaration's result when every argument fits its declared sort, and the
/// kind top when arguments only fit at kind level. AC applications fold the
/// binary declaration over the flattened children.
sort_id least_sort_syntactic(const signature& sig, const term_ptr& t);

// Display and parse precedence of an operator; lower binds tighter.
int display_prec(const op_info& oi);

}  // namespace ers
