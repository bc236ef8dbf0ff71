#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ers {

using sort_id = int;
using kind_id = int;
using op_id = int;

inline constexpr sort_id no_sort = -1;
inline constexpr op_id no_op = -1;

class term;
using term_ptr = std::shared_ptr<const term>;

struct sort_info {
  std::string name;
  kind_id kind = -1;
  bool is_kind_top = false;
};

/// One operator declaration row. Overloads within a single kind family must be
/// written as one row; rows sharing a name are cross-kind overloads resolved
/// at parse time. The mixfix name uses `_` for argument holes ("_+_",
/// "lmoving|_", "<_,_,_>", "__"); names without holes use call syntax.
struct op_info {
  std::string name;
  std::vector<std::string> pieces;  // tokenized mixfix pieces, "_" per hole
  std::vector<sort_id> args;
  sort_id result = no_sort;
  bool assoc = false;
  bool comm = false;
  term_ptr identity;  // null unless id: <term> declared
  int prec = -1;      // -1: category default
  bool is_prop = false;
  sort_id prop_codomain = no_sort;
  bool prop_total = false;
  bool builtin = false;   // prelude arithmetic/logic, agree
  bool synthesized = false;  // auto-generated transition constants

  bool is_constant() const { return args.empty(); }
  bool is_infix() const {
    return pieces.size() == 3 && pieces[0] == "_" && pieces[2] == "_" &&
           pieces[1] != "_";
  }
  bool is_juxt() const {
    return !pieces.empty() && pieces.front() == "_" && pieces.back() == "_" &&
           pieces.size() == 2;
  }
};

/// Tokenize a mixfix operator name into literal pieces and "_" holes.
std::vector<std::string> mixfix_pieces(const std::string& name);

/// Order-sorted signature with materialized kind completion: kinds are the
/// weakly connected components of the subsort graph, and each kind carries a
/// synthetic top sort (named "[S]" for a maximal member S) above all its
/// members.
class signature {
 public:
  sort_id sort_count() const { return static_cast<sort_id>(sorts_.size()); }
  const sort_info& sort(sort_id s) const { return sorts_[s]; }
  std::optional<sort_id> find_sort(const std::string& name) const;

  op_id op_count() const { return static_cast<op_id>(ops_.size()); }
  const op_info& op(op_id o) const { return ops_[o]; }
  const std::vector<op_id>& ops_named(const std::string& name) const;

  bool leq(sort_id a, sort_id b) const { return leq_[a][b]; }
  kind_id kind_of(sort_id s) const { return sorts_[s].kind; }
  sort_id kind_top(kind_id k) const { return kind_tops_[k]; }
  sort_id top_of(sort_id s) const { return kind_tops_[sorts_[s].kind]; }
  bool same_kind(sort_id a, sort_id b) const {
    return sorts_[a].kind == sorts_[b].kind;
  }
  int kind_count() const { return static_cast<int>(kind_tops_.size()); }

  // distinguished sorts; trans/stage are no_sort in plain modules
  sort_id bool_sort = no_sort;
  sort_id int_sort = no_sort;
  sort_id state_sort = no_sort;
  sort_id trans_sort = no_sort;
  sort_id stage_sort = no_sort;

  /// true for sorts whose values are plain data (prelude Int/Bool)
  bool is_data_sort(sort_id s) const {
    return s == bool_sort || s == int_sort;
  }

 private:
  friend class signature_builder;
  std::vector<sort_info> sorts_;
  std::vector<op_info> ops_;
  std::vector<std::vector<bool>> leq_;
  std::vector<sort_id> kind_tops_;
  std::unordered_map<std::string, sort_id> sort_index_;
  std::unordered_map<std::string, std::vector<op_id>> op_index_;
};

/// Accumulates declarations by name, then builds an immutable signature.
/// Sort references in op declarations are strings so that kind tops ("[Stage]")
/// can be referenced before completion runs.
class signature_builder {
 public:
  struct op_decl {
    std::string name;
    std::vector<std::string> args;
    std::string result;
    bool assoc = false, comm = false;
    std::string identity;  // unparsed token text; resolved after build
    term_ptr identity_term;  // pre-resolved (used when copying signatures)
    int prec = -1;
    bool is_prop = false;
    std::string prop_codomain;
    bool prop_total = false;
    bool builtin = false;
    bool synthesized = false;
  };

  void add_sort(const std::string& name);
  void add_subsort(const std::string& lo, const std::string& hi);
  void add_op(op_decl d);
  bool has_sort(const std::string& name) const;
  bool has_op(const std::string& name) const;

  const std::vector<std::string>& sort_names() const { return sort_names_; }
  const std::vector<std::pair<std::string, std::string>>& subsorts() const {
    return subsorts_;
  }
  std::vector<op_decl>& ops() { return ops_; }
  const std::vector<op_decl>& ops() const { return ops_; }

  /// Kind completion. Throws engine_error on subsort cycles or unknown sorts.
  std::shared_ptr<signature> build() const;

 private:
  std::vector<std::string> sort_names_;
  std::vector<std::pair<std::string, std::string>> subsorts_;
  std::vector<op_decl> ops_;
};

/// Prelude shared by every module: Int and Bool with their operations, and for
/// egalitarian modules the Stage/State/Trans hierarchy plus `init`.
/// Plain modules get State as the only stage sort.
signature_builder prelude_builder(bool plain);

}  // namespace ers
