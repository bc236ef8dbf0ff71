#pragma once

#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ers/match.hpp"
#include "ers/module.hpp"

namespace ers {

struct eval_options {
  long step_budget = 100000;
  // Normalize terms that still contain variables: equations whose
  // conditions cannot be instantiated are skipped instead of failing, and
  // owise equations are withheld from open redexes (an instance might
  // still match an earlier equation). Ground terms reduce exactly as in
  // the default mode.
  bool symbolic = false;
};

// Folds one data builtin (integer arithmetic and comparisons, boolean
// connectives) over literal arguments; null when the name is not a data
// builtin or the arguments are not literals of the right shape.
term_ptr fold_builtin(const std::string& op_name,
                      const std::vector<term_ptr>& args);

struct term_hash {
  std::size_t operator()(const term_ptr& t) const { return t->hash; }
};
struct term_deep_eq {
  bool operator()(const term_ptr& a, const term_ptr& b) const {
    return term_eq(a, b);
  }
};

// Equational normalizer and sort computer for one module. Innermost
// strategy: arguments first, then builtins on literal arguments, then
// equations in bucket order (non-owise before owise, declaration order
// within each stratum). Memoizes normal forms and least sorts.
class evaluator : public sort_oracle {
 public:
  explicit evaluator(const module_data& m, eval_options opt = {});

  const module_data& mod() const { return m_; }
  const signature& sig() const { return m_.sig; }

  term_ptr normalize(const term_ptr& t);
  sort_id least_sort(const term_ptr& t);
  sort_id sort_of(const term_ptr& t) override;

  // All substitutions extending seed that satisfy the conjuncts, in
  // order. Equality and sort-test conjuncts must be ground once
  // instantiated; matching conjuncts bind additional variables.
  std::vector<subst> solve(const std::vector<condition>& conds,
                           const subst& seed);

  // Value of a property on a subject, or nullopt when the application
  // does not reduce into the property's value sort (undefined).
  std::optional<term_ptr> eval_prop(op_id prop, const term_ptr& subject);

  long steps_taken() const { return steps_; }

 private:
  term_ptr normalize_loop(const term_ptr& t);
  term_ptr try_builtin(const term_ptr& t);
  term_ptr require_ground(const term_ptr& t, const char* what);

  const module_data& m_;
  eval_options opt_;
  long steps_ = 0;
  std::unordered_map<term_ptr, term_ptr, term_hash, term_deep_eq> nf_;
  std::unordered_map<term_ptr, sort_id, term_hash, term_deep_eq> ls_;
  std::unordered_set<term_ptr, term_hash, term_deep_eq> ls_busy_;
};

}  // namespace ers
