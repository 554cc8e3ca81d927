#ifndef BMLAB_DIMCALC_HPP
#define BMLAB_DIMCALC_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bmlab/group.hpp"

namespace bmlab {
namespace dimcalc {

enum class NodeKind {
  atom,
  direct_product,
  connected_lie_extension,  // ext_lie(kernel, quotient [, semisimple])
  rpos_quotient_extension,  // ext_rpos(kernel): quotient (R^{>0}, x)
  quotient_by_compact,      // quot_compact(inner, k)
  open_subgroup,            // open_sub(inner)
};

struct GroupExpr;
using ExprPtr = std::shared_ptr<const GroupExpr>;

struct GroupExpr {
  NodeKind kind = NodeKind::atom;
  std::string atom_name;
  std::vector<ExprPtr> children;
  bool semisimple_flag = false;  // ext_lie only
  int compact_dim = 0;           // quot_compact only
};

/// Declared data for a leaf: the profile plus the structural traits the
/// rules are guarded on. Atoms carry a citation string for auditability.
struct AtomInfo {
  DimensionProfile profile;
  bool connected_lie = false;
  bool semisimple = false;
  std::string citation;
};

/// Atom table: catalog charts plus the symbolic leaves
/// (sl2r_cover, T, Z, R, compact(k)).
std::optional<AtomInfo> atom_info(const std::string& name);

struct EvalResult {
  bool supported = false;
  DimensionProfile profile;   // valid when supported
  std::optional<int> partial_n;  // known even for some unsupported patterns
  bool connected_lie = false;
  bool semisimple = false;
  std::string reason;            // why unsupported
  std::vector<std::string> rules;  // applied rule tags, leaf to root
};

/// Applies exactly the licensed rules; anything else is UNSUPPORTED with a
/// reason, never a guess.
EvalResult eval_profile(const ExprPtr& e);

bool check_helix_bound(const ExprPtr& e);   // h <= floor(n/3)
int bm_exponent(const ExprPtr& e);          // n - h; throws when unsupported

/// Grammar: atom | prod(e,e) | ext_lie(e,e[,semisimple]) | ext_rpos(e)
///        | quot_compact(e,k) | open_sub(e)
ExprPtr parse_expr(const std::string& text);

std::string to_string(const ExprPtr& e);

}  // namespace dimcalc
}  // namespace bmlab

#endif
