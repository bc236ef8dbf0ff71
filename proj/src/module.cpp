#include "ers/module.hpp"

#include <algorithm>

namespace ers {

const std::vector<int> module_data::empty_{};

op_id root_op(const term_ptr& t) {
  return t->tag == term_tag::app ? t->op : no_op;
}

const std::vector<int>& module_data::eqs_for(op_id root) const {
  auto it = eqs_by_root_.find(root);
  return it == eqs_by_root_.end() ? empty_ : it->second;
}

const std::vector<int>& module_data::mbs_for(op_id root) const {
  auto it = mbs_by_root_.find(root);
  return it == mbs_by_root_.end() ? empty_ : it->second;
}

void module_data::finalize() {
  eqs_by_root_.clear();
  mbs_by_root_.clear();
  var_mbs_.clear();
  for (int i = 0; i < static_cast<int>(eqs.size()); ++i) {
    op_id r = root_op(eqs[i].lhs);
    if (r != no_op) eqs_by_root_[r].push_back(i);
  }
  // Within each bucket the evaluator tries non-owise equations first,
  // each stratum in declaration order.
  for (auto& [root, idxs] : eqs_by_root_)
    std::stable_sort(idxs.begin(), idxs.end(),
                     [&](int a, int b) { return !eqs[a].owise && eqs[b].owise; });
  for (int i = 0; i < static_cast<int>(mbs.size()); ++i) {
    op_id r = root_op(mbs[i].subject);
    if (r != no_op)
      mbs_by_root_[r].push_back(i);
    else if (mbs[i].subject->tag == term_tag::var)
      var_mbs_.push_back(i);
  }
}

}  // namespace ers
