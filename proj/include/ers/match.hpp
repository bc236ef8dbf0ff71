#pragma once

#include <map>
#include <vector>

#include "ers/term.hpp"

namespace ers {

using var_key = std::pair<std::string, sort_id>;
using subst = std::map<var_key, term_ptr>;

/// Sort authority used by the matcher for variable-binding checks. The
/// syntactic oracle uses declarations only; the evaluator overrides this with
/// membership-aware least sorts.
class sort_oracle {
 public:
  virtual ~sort_oracle() = default;
  virtual sort_id sort_of(const term_ptr& t) = 0;
};

class syntactic_oracle : public sort_oracle {
 public:
  explicit syntactic_oracle(const signature& sig) : sig_(sig) {}
  sort_id sort_of(const term_ptr& t) override {
    return least_sort_syntactic(sig_, t);
  }

 private:
  const signature& sig_;
};

/// All matches of `pattern` against canonical `subject` extending `seed`.
/// Free operators match positionally; commutative ones try both argument
/// orders; AC operators match a multiset of element patterns plus at most one
/// collector variable (a variable child whose sort can hold the operator's
/// results). Other AC pattern shapes raise engine_error.
std::vector<subst> match(const signature& sig, const term_ptr& pattern,
                         const term_ptr& subject, sort_oracle& oracle,
                         const subst& seed = {});

/// Substitution application followed by canonicalization. Unbound variables
/// are left in place.
term_ptr apply_subst(const signature& sig, const subst& s, const term_ptr& t);

}  // namespace ers
