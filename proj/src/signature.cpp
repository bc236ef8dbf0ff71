#include "ers/signature.hpp"

#include <algorithm>
#include <set>

#include "ers/diag.hpp"
#include "ers/term.hpp"

namespace ers {

namespace {

bool self_delim(char c) {
  return c == '(' || c == ')' || c == '[' || c == ']' || c == ',' || c == '|';
}

}  // namespace

std::vector<std::string> mixfix_pieces(const std::string& name) {
  std::vector<std::string> pieces;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      pieces.push_back(cur);
      cur.clear();
    }
  };
  for (char c : name) {
    if (c == '_') {
      flush();
      pieces.emplace_back("_");
    } else if (self_delim(c)) {
      flush();
      pieces.emplace_back(1, c);
    } else if (c == ' ') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return pieces;
}

std::optional<sort_id> signature::find_sort(const std::string& name) const {
  auto it = sort_index_.find(name);
  if (it == sort_index_.end()) return std::nullopt;
  return it->second;
}

const std::vector<op_id>& signature::ops_named(const std::string& name) const {
  static const std::vector<op_id> empty;
  auto it = op_index_.find(name);
  return it == op_index_.end() ? empty : it->second;
}

void signature_builder::add_sort(const std::string& name) {
  if (!has_sort(name)) sort_names_.push_back(name);
}

void signature_builder::add_subsort(const std::string& lo,
                                    const std::string& hi) {
  subsorts_.emplace_back(lo, hi);
}

void signature_builder::add_op(op_decl d) { ops_.push_back(std::move(d)); }

bool signature_builder::has_sort(const std::string& name) const {
  return std::find(sort_names_.begin(), sort_names_.end(), name) !=
         sort_names_.end();
}

bool signature_builder::has_op(const std::string& name) const {
  return std::any_of(ops_.begin(), ops_.end(),
                     [&](const op_decl& d) { return d.name == name; });
}

std::shared_ptr<signature> signature_builder::build() const {
  auto sig = std::make_shared<signature>();
  auto& sorts = sig->sorts_;
  for (const auto& n : sort_names_) {
    if (sig->sort_index_.count(n))
      throw engine_error("duplicate sort declaration: " + n);
    sig->sort_index_[n] = static_cast<sort_id>(sorts.size());
    sorts.push_back({n, -1, false});
  }

  auto need = [&](const std::string& n) -> sort_id {
    auto it = sig->sort_index_.find(n);
    if (it == sig->sort_index_.end())
      throw engine_error("unknown sort: " + n);
    return it->second;
  };

  int n = static_cast<int>(sorts.size());
  std::vector<std::vector<bool>> leq(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) leq[i][i] = true;
  for (const auto& [lo, hi] : subsorts_) leq[need(lo)][need(hi)] = true;
  // transitive closure
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      if (leq[i][k])
        for (int j = 0; j < n; ++j)
          if (leq[k][j]) leq[i][j] = true;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if (leq[i][j] && leq[j][i])
        throw engine_error("subsort cycle through " + sorts[i].name + " and " +
                           sorts[j].name);

  // kinds: weakly connected components
  std::vector<int> comp(n, -1);
  int kinds = 0;
  for (int i = 0; i < n; ++i) {
    if (comp[i] != -1) continue;
    std::vector<int> stack{i};
    comp[i] = kinds;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int j = 0; j < n; ++j) {
        if (comp[j] == -1 && (leq[v][j] || leq[j][v])) {
          comp[j] = kinds;
          stack.push_back(j);
        }
      }
    }
    ++kinds;
  }
  for (int i = 0; i < n; ++i) sorts[i].kind = comp[i];

  // kind tops, named for the first maximal member
  sig->kind_tops_.assign(kinds, no_sort);
  std::vector<std::string> top_names(kinds);
  for (int k = 0; k < kinds; ++k) {
    std::string rep;
    for (int i = 0; i < n; ++i) {
      if (comp[i] != k) continue;
      bool maximal = true;
      for (int j = 0; j < n; ++j)
        if (j != i && comp[j] == k && leq[i][j]) maximal = false;
      if (maximal) {
        rep = sorts[i].name;
        break;
      }
    }
    top_names[k] = "[" + rep + "]";
  }
  for (int k = 0; k < kinds; ++k) {
    sort_id t = static_cast<sort_id>(sorts.size());
    sig->sort_index_[top_names[k]] = t;
    sorts.push_back({top_names[k], k, true});
    sig->kind_tops_[k] = t;
  }
  int total = static_cast<int>(sorts.size());
  sig->leq_.assign(total, std::vector<bool>(total, false));
  for (int i = 0; i < total; ++i) sig->leq_[i][i] = true;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sig->leq_[i][j] = leq[i][j];
  for (int i = 0; i < n; ++i) sig->leq_[i][sig->kind_tops_[comp[i]]] = true;

  auto resolve_ref = [&](const std::string& r) -> sort_id {
    auto it = sig->sort_index_.find(r);
    if (it == sig->sort_index_.end()) {
      // "[S]" names the kind top of S even when S's component top is another
      if (r.size() > 2 && r.front() == '[' && r.back() == ']') {
        auto inner = sig->sort_index_.find(r.substr(1, r.size() - 2));
        if (inner != sig->sort_index_.end())
          return sig->kind_tops_[sorts[inner->second].kind];
      }
      throw engine_error("unknown sort: " + r);
    }
    return it->second;
  };

  for (const auto& d : ops_) {
    op_info info;
    info.name = d.name;
    info.pieces = mixfix_pieces(d.name);
    for (const auto& a : d.args) info.args.push_back(resolve_ref(a));
    info.result = resolve_ref(d.result);
    info.assoc = d.assoc;
    info.comm = d.comm;
    info.prec = d.prec;
    info.is_prop = d.is_prop;
    if (d.is_prop) {
      info.prop_codomain = resolve_ref(d.prop_codomain);
      info.prop_total = d.prop_total;
    }
    info.builtin = d.builtin;
    info.synthesized = d.synthesized;
    if (d.identity_term) info.identity = d.identity_term;
    op_id id = static_cast<op_id>(sig->ops_.size());
    sig->ops_.push_back(std::move(info));
    sig->op_index_[d.name].push_back(id);
  }

  // identity elements: resolve constant names after ops exist
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const auto& d = ops_[i];
    if (d.identity.empty() || d.identity_term) continue;
    const auto& named = sig->ops_named(d.identity);
    if (named.size() != 1 || !sig->ops_[named[0]].is_constant())
      throw engine_error("identity of " + d.name +
                         " must name a unique constant: " + d.identity);
    sig->ops_[i].identity = mk_app(named[0], {});
  }

  auto set_if = [&](sort_id& slot, const char* name) {
    auto it = sig->sort_index_.find(name);
    if (it != sig->sort_index_.end()) slot = it->second;
  };
  set_if(sig->bool_sort, "Bool");
  set_if(sig->int_sort, "Int");
  set_if(sig->state_sort, "State");
  set_if(sig->trans_sort, "Trans");
  set_if(sig->stage_sort, "Stage");
  return sig;
}

signature_builder prelude_builder(bool plain) {
  signature_builder b;
  b.add_sort("Bool");
  b.add_sort("Int");
  if (plain) {
    b.add_sort("State");
  } else {
    b.add_sort("State");
    b.add_sort("Trans");
    b.add_sort("Stage");
    b.add_subsort("State", "Stage");
    b.add_subsort("Trans", "Stage");
  }
  auto bi = [&](const std::string& name, std::vector<std::string> args,
                std::string result, int prec) {
    signature_builder::op_decl d;
    d.name = name;
    d.args = std::move(args);
    d.result = std::move(result);
    d.prec = prec;
    d.builtin = true;
    b.add_op(std::move(d));
  };
  bi("_+_", {"Int", "Int"}, "Int", 45);
  bi("_-_", {"Int", "Int"}, "Int", 45);
  bi("_*_", {"Int", "Int"}, "Int", 40);
  bi("_<_", {"Int", "Int"}, "Bool", 60);
  bi("_<=_", {"Int", "Int"}, "Bool", 60);
  bi("_==_", {"Int", "Int"}, "Bool", 60);
  bi("_and_", {"Bool", "Bool"}, "Bool", 70);
  bi("_or_", {"Bool", "Bool"}, "Bool", 73);
  bi("not_", {"Bool"}, "Bool", 30);
  {
    signature_builder::op_decl d;
    d.name = "init";
    d.result = plain ? "[State]" : "[Stage]";
    d.builtin = true;
    b.add_op(std::move(d));
  }
  return b;
}

}  // namespace ers
