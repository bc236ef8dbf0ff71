#pragma once

#include <map>
#include <string>
#include <vector>

#include "ers/signature.hpp"
#include "ers/term.hpp"

namespace ers {

// One conjunct of a statement condition.
//   equality   lhs = rhs       both sides evaluated, results compared
//   matching   lhs := rhs      rhs evaluated, lhs matched against it,
//                              bindings flow into later conjuncts
//   sort_test  lhs : sort      lhs evaluated, least sort checked
struct condition {
  enum class kind { equality, matching, sort_test };
  kind k = kind::equality;
  term_ptr lhs;
  term_ptr rhs;    // unused for sort_test
  sort_id sort = no_sort;  // sort_test only
};

struct equation {
  term_ptr lhs;
  term_ptr rhs;
  std::vector<condition> cond;
  bool owise = false;
  std::string label;  // optional, informational
};

struct membership {
  term_ptr subject;
  sort_id sort = no_sort;
  std::vector<condition> cond;
};

// t =[ label ]=> u if cond
struct eg_rule {
  term_ptr lhs;
  term_ptr label;
  term_ptr rhs;
  std::vector<condition> cond;
};

// t => u if cond   (plain modules only)
struct plain_rule {
  term_ptr lhs;
  term_ptr rhs;
  std::vector<condition> cond;
};

// A resolved module: signature plus statements, with equations and
// memberships bucketed by root symbol for the evaluator.
class module_data {
 public:
  std::string name;
  bool plain = false;
  signature sig;

  std::vector<equation> eqs;
  std::vector<membership> mbs;
  std::vector<eg_rule> rules;
  std::vector<plain_rule> prules;

  // Filled by finalize(). Indexes into eqs/mbs, declaration order
  // preserved; non-owise equations sorted before owise ones per root.
  const std::vector<int>& eqs_for(op_id root) const;
  const std::vector<int>& mbs_for(op_id root) const;
  const std::vector<int>& var_mbs() const { return var_mbs_; }

  void finalize();

 private:
  std::map<op_id, std::vector<int>> eqs_by_root_;
  std::map<op_id, std::vector<int>> mbs_by_root_;
  std::vector<int> var_mbs_;  // memberships whose subject is a variable
  static const std::vector<int> empty_;
};

// Root op of a term, or no_op for literals and variables.
op_id root_op(const term_ptr& t);

}  // namespace ers
