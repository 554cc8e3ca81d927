#include "bmlab/catalog.hpp"

#include <cmath>
#include <numbers>

namespace bmlab {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

ChartPtr finish(GroupChart c) { return std::make_shared<const GroupChart>(std::move(c)); }
}  // namespace

ChartPtr make_euclidean(int d) {
  GroupChart c;
  c.name = "r:" + std::to_string(d);
  c.dim = d;
  c.axes.assign(d, Axis{});
  c.multiply_raw = c.multiply = [](const Vec& a, const Vec& b) -> Vec { return a + b; };
  c.invert = [](const Vec& a) -> Vec { return -a; };
  c.identity = Vec::Zero(d);
  c.left_density_closed = [](const Vec&) { return 1.0; };
  c.modular_closed = [](const Vec&) { return 1.0; };
  c.profile = {d, 0, 0, d};
  c.law_multilinear = true;
  return finish(std::move(c));
}

ChartPtr make_torus(int d) {
  GroupChart c;
  c.name = "t:" + std::to_string(d);
  c.dim = d;
  c.axes.assign(d, Axis{0.0, 1.0, /*period=*/1.0, /*base_scale=*/1.0});
  c.multiply_raw = [](const Vec& a, const Vec& b) -> Vec { return a + b; };
  c.identity = Vec::Zero(d);
  c.profile = {d, d, 0, 0};
  c.law_multilinear = true;
  c.multiply = [](const Vec& a, const Vec& b) -> Vec {
    Vec r = a + b;
    for (int k = 0; k < r.size(); ++k) {
      r[k] = std::fmod(r[k], 1.0);
      if (r[k] < 0.0) r[k] += 1.0;
    }
    return r;
  };
  c.invert = [](const Vec& a) -> Vec {
    Vec r = -a;
    for (int k = 0; k < r.size(); ++k) {
      r[k] = std::fmod(r[k], 1.0);
      if (r[k] < 0.0) r[k] += 1.0;
    }
    return r;
  };
  c.left_density_closed = [](const Vec&) { return 1.0; };
  c.modular_closed = [](const Vec&) { return 1.0; };
  return finish(std::move(c));
}

ChartPtr make_heisenberg() {
  GroupChart c;
  c.name = "heis3";
  c.dim = 3;
  c.axes.assign(3, Axis{});
  c.multiply_raw = c.multiply = [](const Vec& a, const Vec& b) -> Vec {
    Vec r(3);
    r[0] = a[0] + b[0];
    r[1] = a[1] + b[1];
    r[2] = a[2] + b[2] + a[0] * b[1];
    return r;
  };
  c.invert = [](const Vec& a) -> Vec {
    Vec r(3);
    r[0] = -a[0];
    r[1] = -a[1];
    r[2] = -a[2] + a[0] * a[1];
    return r;
  };
  c.identity = Vec::Zero(3);
  c.left_density_closed = [](const Vec&) { return 1.0; };
  c.modular_closed = [](const Vec&) { return 1.0; };
  c.profile = {3, 0, 0, 3};
  c.law_multilinear = true;
  return finish(std::move(c));
}

ChartPtr make_affine() {
  GroupChart c;
  c.name = "aff";
  c.dim = 2;
  c.axes.assign(2, Axis{});
  c.axes[0].lo = 0.0;  // a > 0
  c.multiply_raw = c.multiply = [](const Vec& g, const Vec& h) -> Vec {
    Vec r(2);
    r[0] = g[0] * h[0];
    r[1] = g[0] * h[1] + g[1];
    return r;
  };
  c.invert = [](const Vec& g) -> Vec {
    Vec r(2);
    r[0] = 1.0 / g[0];
    r[1] = -g[1] / g[0];
    return r;
  };
  c.identity = Vec(2);
  c.identity << 1.0, 0.0;
  c.left_density_closed = [](const Vec& g) { return 1.0 / (g[0] * g[0]); };
  c.modular_closed = [](const Vec& g) { return 1.0 / g[0]; };
  c.profile = {2, 0, 0, 2};
  c.law_multilinear = true;
  return finish(std::move(c));
}

Eigen::Matrix2d sl2r_to_matrix(const Vec& g) {
  double ct = std::cos(g[0]), st = std::sin(g[0]);
  double et = std::exp(g[1]), eti = std::exp(-g[1]);
  double u = g[2];
  // k(theta) a(t) n(u) with a = diag(e^t, e^-t), n = [[1,u],[0,1]]
  Eigen::Matrix2d m;
  m(0, 0) = ct * et;
  m(0, 1) = ct * et * u - st * eti;
  m(1, 0) = st * et;
  m(1, 1) = st * et * u + ct * eti;
  return m;
}

Vec sl2r_from_matrix(const Eigen::Matrix2d& m) {
  // Gram-Schmidt on the first column; det m = 1 forces R = [[r, r*u],[0, 1/r]].
  double r = std::hypot(m(0, 0), m(1, 0));
  double theta = std::atan2(m(1, 0), m(0, 0));
  if (theta < 0.0) theta += kTwoPi;
  double t = std::log(r);
  double u = (m(0, 0) * m(0, 1) + m(1, 0) * m(1, 1)) / (r * r);
  Vec g(3);
  g << theta, t, u;
  return g;
}

ChartPtr make_sl2r() {
  GroupChart c;
  c.name = "sl2r";
  c.dim = 3;
  c.axes.assign(3, Axis{});
  c.axes[0] = Axis{0.0, kTwoPi, /*period=*/kTwoPi, /*base_scale=*/kTwoPi};
  c.multiply_raw = c.multiply = [](const Vec& a, const Vec& b) -> Vec {
    return sl2r_from_matrix(Eigen::Matrix2d(sl2r_to_matrix(a) * sl2r_to_matrix(b)));
  };
  c.invert = [](const Vec& a) -> Vec {
    Eigen::Matrix2d m = sl2r_to_matrix(a), inv;
    inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
    return sl2r_from_matrix(inv);
  };
  c.identity = Vec::Zero(3);
  c.left_density_closed = [](const Vec& g) { return std::exp(2.0 * g[1]); };
  c.modular_closed = [](const Vec&) { return 1.0; };
  c.profile = {3, 1, 0, 2};
  c.law_multilinear = false;
  c.left_shift_axis = 0;  // left rotation adds to theta
  return finish(std::move(c));
}

ChartPtr make_product(ChartPtr a, ChartPtr b) {
  GroupChart c;
  c.name = "prod(" + a->name + "," + b->name + ")";
  c.dim = a->dim + b->dim;
  c.axes = a->axes;
  c.axes.insert(c.axes.end(), b->axes.begin(), b->axes.end());
  int da = a->dim, db = b->dim;
  auto split = [da, db](const Vec& v) {
    return std::pair<Vec, Vec>(v.head(da), v.tail(db));
  };
  auto join = [da, db](const Vec& x, const Vec& y) {
    Vec r(da + db);
    r.head(da) = x;
    r.tail(db) = y;
    return r;
  };
  c.multiply = [a, b, split, join](const Vec& g, const Vec& h) -> Vec {
    auto [g1, g2] = split(g);
    auto [h1, h2] = split(h);
    return join(a->multiply(g1, h1), b->multiply(g2, h2));
  };
  c.multiply_raw = [a, b, split, join](const Vec& g, const Vec& h) -> Vec {
    auto [g1, g2] = split(g);
    auto [h1, h2] = split(h);
    return join(a->multiply_raw(g1, h1), b->multiply_raw(g2, h2));
  };
  c.invert = [a, b, split, join](const Vec& g) -> Vec {
    auto [g1, g2] = split(g);
    return join(a->invert(g1), b->invert(g2));
  };
  c.identity = join(a->identity, b->identity);
  if (a->left_density_closed && b->left_density_closed) {
    c.left_density_closed = [a, b, split](const Vec& g) {
      auto [g1, g2] = split(g);
      return a->left_density_closed(g1) * b->left_density_closed(g2);
    };
  }
  if (a->modular_closed && b->modular_closed) {
    c.modular_closed = [a, b, split](const Vec& g) {
      auto [g1, g2] = split(g);
      return a->modular_closed(g1) * b->modular_closed(g2);
    };
  }
  c.profile = {a->profile.d + b->profile.d, a->profile.m + b->profile.m,
               a->profile.h + b->profile.h, a->profile.n + b->profile.n};
  c.law_multilinear = a->law_multilinear && b->law_multilinear;
  return finish(std::move(c));
}

namespace {

ChartPtr parse_group_at(const std::string& s, size_t& pos);

size_t find_comma(const std::string& s, size_t from) {
  int depth = 0;
  for (size_t i = from; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == ',' && depth == 0) return i;
  }
  return std::string::npos;
}

ChartPtr parse_group_at(const std::string& s, size_t& pos) {
  if (s.compare(pos, 5, "prod(") == 0) {
    size_t open = pos + 5;
    size_t comma = find_comma(s, open);
    if (comma == std::string::npos)
      throw std::invalid_argument("group grammar: prod needs two arguments: " + s);
    size_t p1 = open;
    ChartPtr left = parse_group_at(s, p1);
    if (p1 != comma) throw std::invalid_argument("group grammar: bad prod argument: " + s);
    size_t p2 = comma + 1;
    ChartPtr right = parse_group_at(s, p2);
    if (p2 >= s.size() || s[p2] != ')')
      throw std::invalid_argument("group grammar: unbalanced prod: " + s);
    pos = p2 + 1;
    return make_product(left, right);
  }
  size_t end = pos;
  while (end < s.size() && s[end] != ',' && s[end] != ')') ++end;
  std::string tok = s.substr(pos, end - pos);
  pos = end;
  auto dim_of = [&](const std::string& t, const char* prefix) -> int {
    std::string num = t.substr(std::string(prefix).size());
    int d = std::stoi(num);
    if (d < 1 || d > 6) throw std::invalid_argument("group grammar: dimension out of range: " + t);
    return d;
  };
  if (tok.rfind("r:", 0) == 0) return make_euclidean(dim_of(tok, "r:"));
  if (tok.rfind("t:", 0) == 0) return make_torus(dim_of(tok, "t:"));
  if (tok == "heis3") return make_heisenberg();
  if (tok == "aff") return make_affine();
  if (tok == "sl2r") return make_sl2r();
  throw std::invalid_argument("unknown group: '" + tok + "'");
}

}  // namespace

ChartPtr parse_group(const std::string& name) {
  std::string s;
  for (char ch : name)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  size_t pos = 0;
  ChartPtr g = parse_group_at(s, pos);
  if (pos != s.size()) throw std::invalid_argument("trailing input in group name: " + name);
  return g;
}

std::vector<ChartPtr> catalog() {
  return {make_euclidean(1), make_euclidean(2), make_euclidean(3), make_torus(2),
          make_heisenberg(), make_affine(),     make_sl2r(),
          make_product(make_euclidean(1), make_heisenberg())};
}

}  // namespace bmlab
