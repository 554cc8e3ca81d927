#include "bmlab/dimcalc.hpp"

#include <cctype>
#include <stdexcept>

namespace bmlab {
namespace dimcalc {

std::optional<AtomInfo> atom_info(const std::string& name) {
  auto leaf = [](int d, int m, int h, bool conn, bool ss, const char* cite) {
    AtomInfo a;
    a.profile = {d, m, h, d - m};
    a.connected_lie = conn;
    a.semisimple = ss;
    a.citation = cite;
    return a;
  };
  if (name.rfind("r:", 0) == 0) {
    int d = std::stoi(name.substr(2));
    return leaf(d, 0, 0, true, false, "abelian vector group");
  }
  if (name.rfind("t:", 0) == 0) {
    int d = std::stoi(name.substr(2));
    return leaf(d, d, 0, true, false, "compact torus");
  }
  if (name.rfind("compact(", 0) == 0 && name.back() == ')') {
    int d = std::stoi(name.substr(8, name.size() - 9));
    return leaf(d, d, 0, true, false, "connected compact Lie group");
  }
  if (name == "R") return leaf(1, 0, 0, true, false, "real line");
  if (name == "T") return leaf(1, 1, 0, true, false, "circle group");
  if (name == "Z") return leaf(0, 0, 0, false, false, "discrete integers");
  if (name == "heis3") return leaf(3, 0, 0, true, false, "simply connected nilpotent");
  if (name == "aff") return leaf(2, 0, 0, true, false, "orientation-preserving affine line");
  if (name == "sl2r")
    return leaf(3, 1, 0, true, true, "Iwasawa K=SO(2), dim AN = 2");
  if (name == "sl2r_cover")
    return leaf(3, 0, 1, true, true, "universal cover: rank-1 discrete center");
  return std::nullopt;
}

namespace {

EvalResult unsupported(std::string reason) {
  EvalResult r;
  r.supported = false;
  r.reason = std::move(reason);
  return r;
}

}  // namespace

EvalResult eval_profile(const ExprPtr& e) {
  if (!e) throw std::invalid_argument("eval_profile: null expression");
  switch (e->kind) {
    case NodeKind::atom: {
      auto info = atom_info(e->atom_name);
      if (!info) return unsupported("unknown atom: " + e->atom_name);
      EvalResult r;
      r.supported = true;
      r.profile = info->profile;
      r.connected_lie = info->connected_lie;
      r.semisimple = info->semisimple;
      r.rules.push_back("atom(" + e->atom_name + "): " + info->citation);
      return r;
    }
    case NodeKind::direct_product: {
      EvalResult a = eval_profile(e->children[0]);
      EvalResult b = eval_profile(e->children[1]);
      if (!a.supported) return a;
      if (!b.supported) return b;
      EvalResult r;
      r.supported = true;
      r.profile = {a.profile.d + b.profile.d, a.profile.m + b.profile.m,
                   a.profile.h + b.profile.h, a.profile.n + b.profile.n};
      r.connected_lie = a.connected_lie && b.connected_lie;
      r.semisimple = a.semisimple && b.semisimple;
      r.rules = a.rules;
      r.rules.insert(r.rules.end(), b.rules.begin(), b.rules.end());
      r.rules.push_back("direct product: n and h both add");
      return r;
    }
    case NodeKind::connected_lie_extension: {
      EvalResult k = eval_profile(e->children[0]);
      EvalResult q = eval_profile(e->children[1]);
      if (!k.supported) return k;
      if (!q.supported) return q;
      if (!k.connected_lie || !q.connected_lie) {
        auto r = unsupported(
            "extension rule requires connected Lie kernel and quotient "
            "(noncompact Lie dimension is not additive in general: "
            "1 -> Z -> R -> T -> 1)");
        return r;
      }
      if (e->semisimple_flag && (!k.semisimple || !q.semisimple))
        return unsupported("semisimple flag inconsistent with components");
      EvalResult r;
      r.connected_lie = true;
      r.semisimple = e->semisimple_flag;
      r.partial_n = k.profile.n + q.profile.n;
      if (!e->semisimple_flag) {
        r.supported = false;
        r.reason =
            "helix dimension of a non-semisimple extension is not determined "
            "by the rules (n alone would be " +
            std::to_string(*r.partial_n) + ")";
        return r;
      }
      r.supported = true;
      r.profile = {k.profile.d + q.profile.d, k.profile.m + q.profile.m,
                   k.profile.h + q.profile.h, k.profile.n + q.profile.n};
      r.rules = k.rules;
      r.rules.insert(r.rules.end(), q.rules.begin(), q.rules.end());
      r.rules.push_back("connected Lie extension (semisimple): n and h add");
      return r;
    }
    case NodeKind::rpos_quotient_extension: {
      EvalResult k = eval_profile(e->children[0]);
      if (!k.supported) return k;
      EvalResult r;
      r.supported = true;
      r.profile = {k.profile.d + 1, k.profile.m, k.profile.h, k.profile.n + 1};
      r.connected_lie = k.connected_lie;
      r.semisimple = false;
      r.rules = k.rules;
      r.rules.push_back("extension by (R^{>0}, x): n + 1, h preserved");
      return r;
    }
    case NodeKind::quotient_by_compact: {
      EvalResult a = eval_profile(e->children[0]);
      if (!a.supported) return a;
      if (e->compact_dim < 0 || e->compact_dim > a.profile.m)
        return unsupported("quotient by compact: k must satisfy 0 <= k <= m");
      EvalResult r = a;
      r.profile.d -= e->compact_dim;
      r.profile.m -= e->compact_dim;
      r.rules.push_back("quotient by compact normal subgroup: n and h preserved");
      return r;
    }
    case NodeKind::open_subgroup: {
      EvalResult a = eval_profile(e->children[0]);
      if (!a.supported) return a;
      EvalResult r = a;
      r.rules.push_back("open subgroup: all invariants preserved");
      return r;
    }
  }
  return unsupported("malformed tree");
}

bool check_helix_bound(const ExprPtr& e) {
  EvalResult r = eval_profile(e);
  if (!r.supported) throw std::runtime_error("helix bound: " + r.reason);
  return r.profile.h <= r.profile.n / 3;
}

int bm_exponent(const ExprPtr& e) {
  EvalResult r = eval_profile(e);
  if (!r.supported) throw std::runtime_error("bm_exponent: " + r.reason);
  return r.profile.bm_exponent();
}

namespace {

struct Parser {
  const std::string& s;
  size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool eat(const char* tok) {
    skip_ws();
    size_t n = std::string(tok).size();
    if (s.compare(pos, n, tok) == 0) {
      pos += n;
      return true;
    }
    return false;
  }

  void expect(char c) {
    skip_ws();
    if (pos >= s.size() || s[pos] != c)
      throw std::invalid_argument(std::string("expression grammar: expected '") + c +
                                  "' at position " + std::to_string(pos));
    ++pos;
  }

  std::string ident() {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_' ||
            s[pos] == ':'))
      ++pos;
    if (start == pos) throw std::invalid_argument("expression grammar: name expected");
    return s.substr(start, pos - start);
  }

  int integer() {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (start == pos) throw std::invalid_argument("expression grammar: integer expected");
    return std::stoi(s.substr(start, pos - start));
  }

  ExprPtr expr() {
    skip_ws();
    auto node = std::make_shared<GroupExpr>();
    if (eat("prod(")) {
      node->kind = NodeKind::direct_product;
      node->children.push_back(expr());
      expect(',');
      node->children.push_back(expr());
      expect(')');
      return node;
    }
    if (eat("ext_lie(")) {
      node->kind = NodeKind::connected_lie_extension;
      node->children.push_back(expr());
      expect(',');
      node->children.push_back(expr());
      skip_ws();
      if (eat(",")) {
        std::string flag = ident();
        if (flag != "semisimple")
          throw std::invalid_argument("expression grammar: unknown flag '" + flag + "'");
        node->semisimple_flag = true;
      }
      expect(')');
      return node;
    }
    if (eat("ext_rpos(")) {
      node->kind = NodeKind::rpos_quotient_extension;
      node->children.push_back(expr());
      expect(')');
      return node;
    }
    if (eat("quot_compact(")) {
      node->kind = NodeKind::quotient_by_compact;
      node->children.push_back(expr());
      expect(',');
      node->compact_dim = integer();
      expect(')');
      return node;
    }
    if (eat("open_sub(")) {
      node->kind = NodeKind::open_subgroup;
      node->children.push_back(expr());
      expect(')');
      return node;
    }
    node->kind = NodeKind::atom;
    node->atom_name = ident();
    if (node->atom_name == "compact") {
      expect('(');
      node->atom_name += "(" + std::to_string(integer()) + ")";
      expect(')');
    }
    return node;
  }
};

}  // namespace

ExprPtr parse_expr(const std::string& text) {
  Parser p{text};
  ExprPtr e = p.expr();
  p.skip_ws();
  if (p.pos != text.size())
    throw std::invalid_argument("expression grammar: trailing input in '" + text + "'");
  return e;
}

std::string to_string(const ExprPtr& e) {
  switch (e->kind) {
    case NodeKind::atom: return e->atom_name;
    case NodeKind::direct_product:
      return "prod(" + to_string(e->children[0]) + "," + to_string(e->children[1]) + ")";
    case NodeKind::connected_lie_extension:
      return "ext_lie(" + to_string(e->children[0]) + "," + to_string(e->children[1]) +
             (e->semisimple_flag ? ",semisimple)" : ")");
    case NodeKind::rpos_quotient_extension:
      return "ext_rpos(" + to_string(e->children[0]) + ")";
    case NodeKind::quotient_by_compact:
      return "quot_compact(" + to_string(e->children[0]) + "," +
             std::to_string(e->compact_dim) + ")";
    case NodeKind::open_subgroup:
      return "open_sub(" + to_string(e->children[0]) + ")";
  }
  return "?";
}

}  // namespace dimcalc
}  // namespace bmlab
