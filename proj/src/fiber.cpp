#include "bmlab/fiber.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

namespace bmlab {

Vec FiberSplit::lift(const Vec& q) const {
  Vec g = group->identity;
  for (size_t i = 0; i < quotient_axes.size(); ++i) g[quotient_axes[i]] = q[long(i)];
  return g;
}

Vec FiberSplit::embed(const Vec& z) const {
  Vec g = group->identity;
  for (size_t i = 0; i < fiber_axes.size(); ++i) g[fiber_axes[i]] = z[long(i)];
  return g;
}

Vec FiberSplit::project_q(const Vec& g) const {
  Vec q(long(quotient_axes.size()));
  for (size_t i = 0; i < quotient_axes.size(); ++i) q[long(i)] = g[quotient_axes[i]];
  return q;
}

Vec FiberSplit::project_h(const Vec& g) const {
  Vec z(long(fiber_axes.size()));
  for (size_t i = 0; i < fiber_axes.size(); ++i) z[long(i)] = g[fiber_axes[i]];
  return z;
}

namespace {

ChartPtr derive_chart(const FiberSplit& split, const std::vector<int>& axes,
                      bool quotient_part, const std::string& suffix) {
  ChartPtr parent = split.group;
  GroupChart c;
  c.name = parent->name + suffix;
  c.dim = int(axes.size());
  for (int a : axes) c.axes.push_back(parent->axes[a]);
  FiberSplit s = split;  // copy with captured axis lists
  if (quotient_part) {
    c.multiply = [parent, s](const Vec& a, const Vec& b) -> Vec {
      return s.project_q(parent->multiply(s.lift(a), s.lift(b)));
    };
    c.invert = [parent, s](const Vec& a) -> Vec {
      return s.project_q(parent->invert(s.lift(a)));
    };
    c.identity = s.project_q(parent->identity);
  } else {
    c.multiply = [parent, s](const Vec& a, const Vec& b) -> Vec {
      return s.project_h(parent->multiply(s.embed(a), s.embed(b)));
    };
    c.invert = [parent, s](const Vec& a) -> Vec {
      return s.project_h(parent->invert(s.embed(a)));
    };
    c.identity = s.project_h(parent->identity);
  }
  c.multiply_raw = c.multiply;
  c.law_multilinear = parent->law_multilinear;
  return std::make_shared<const GroupChart>(std::move(c));
}

Vec random_in_domain(const GroupChart& chart, std::mt19937_64& rng) {
  auto u01 = [&]() { return double(rng() >> 11) * 0x1.0p-53; };
  Vec g(chart.dim);
  for (int k = 0; k < chart.dim; ++k) {
    const Axis& ax = chart.axes[k];
    double lo = std::isfinite(ax.lo) ? ax.lo + 0.1 : -2.0;
    double hi = std::isfinite(ax.hi) ? ax.hi - 0.1 : 2.0;
    if (ax.period > 0.0) {
      lo = 0.0;
      hi = ax.period;
    }
    if (std::isfinite(ax.lo) && !std::isfinite(ax.hi)) hi = lo + 4.0;
    g[k] = lo + u01() * (hi - lo);
  }
  return g;
}

}  // namespace

FiberSplit make_split(ChartPtr chart, std::vector<int> fiber_axes) {
  std::sort(fiber_axes.begin(), fiber_axes.end());
  FiberSplit s;
  s.group = chart;
  s.fiber_axes = fiber_axes;
  for (int k = 0; k < chart->dim; ++k)
    if (!std::binary_search(fiber_axes.begin(), fiber_axes.end(), k))
      s.quotient_axes.push_back(k);
  if (s.fiber_axes.empty() || s.quotient_axes.empty())
    throw std::invalid_argument("split: both parts must be nonempty");

  std::mt19937_64 rng(0xf1b5);
  const double tol = 1e-9;
  for (int trial = 0; trial < 64; ++trial) {
    Vec h1 = chart->identity, h2 = chart->identity, g = random_in_domain(*chart, rng);
    for (int a : s.fiber_axes) {
      h1[a] = random_in_domain(*chart, rng)[a];
      h2[a] = random_in_domain(*chart, rng)[a];
    }
    // closure of H under the law
    Vec p = chart->multiply(h1, h2);
    for (int a : s.quotient_axes)
      if (std::abs(p[a] - chart->identity[a]) > tol)
        throw std::invalid_argument("split: masked axes are not a subgroup");
    // normality: g h g^-1 stays in H
    Vec c = chart->multiply(chart->multiply(g, h1), chart->invert(g));
    for (int a : s.quotient_axes)
      if (std::abs(c[a] - chart->identity[a]) > tol)
        throw std::invalid_argument("split: subgroup is not normal");
    // quotient law independent of representatives
    Vec q1 = random_in_domain(*chart, rng), q2 = random_in_domain(*chart, rng);
    for (int a : s.fiber_axes) {
      q1[a] = chart->identity[a];
      q2[a] = chart->identity[a];
    }
    Vec base = chart->multiply(q1, q2);
    Vec moved = chart->multiply(chart->multiply(q1, h1), chart->multiply(q2, h2));
    for (int a : s.quotient_axes)
      if (std::abs(base[a] - moved[a]) > tol)
        throw std::invalid_argument("split: quotient law not well defined");
  }

  s.subgroup = derive_chart(s, s.fiber_axes, false, "/H");
  s.quotient = derive_chart(s, s.quotient_axes, true, "/Q");

  // the fiber parametrization z -> masked(lift(q) * embed(z)) must be affine
  const int hd = int(s.fiber_axes.size());
  for (int trial = 0; trial < 16; ++trial) {
    Vec q = s.project_q(random_in_domain(*chart, rng));
    Vec sigma = s.lift(q);
    Vec zid = s.project_h(chart->identity);
    Vec t0 = s.project_h(chart->multiply(sigma, s.embed(zid)));
    Mat m(hd, hd);
    for (int j = 0; j < hd; ++j) {
      Vec z = zid;
      z[j] += 1.0;
      m.col(j) = s.project_h(chart->multiply(sigma, s.embed(z))) - t0;
    }
    Vec z = zid;
    for (int j = 0; j < hd; ++j) z[j] += double(rng() % 7) - 3.0 + 0.37;
    Vec expect = t0 + m * (z - zid);
    Vec got = s.project_h(chart->multiply(sigma, s.embed(z)));
    if ((expect - got).cwiseAbs().maxCoeff() > tol * (1.0 + got.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("split: fiber parametrization is not affine");
  }
  return s;
}

namespace {

// Affine parametrization z -> masked coords of lift(q) * embed(z); validated
// on random points when the split is built and reused per quotient cell.
struct FiberMap {
  Vec t0;        // image of the fiber identity
  Mat m;         // linear part
  double absdet;
  Vec zid;
};

FiberMap fiber_map_at(const FiberSplit& s, const Vec& q_center) {
  const GroupChart& G = *s.group;
  Vec sigma = s.lift(q_center);
  int hd = int(s.fiber_axes.size());
  FiberMap fm;
  fm.zid = s.project_h(G.identity);
  fm.t0 = s.project_h(G.multiply(sigma, s.embed(fm.zid)));
  fm.m.resize(hd, hd);
  for (int j = 0; j < hd; ++j) {
    Vec z = fm.zid;
    z[j] += 1.0;
    fm.m.col(j) = s.project_h(G.multiply(sigma, s.embed(z))) - fm.t0;
  }
  fm.absdet = std::abs(fm.m.determinant());
  if (!(fm.absdet > 1e-14))
    throw std::runtime_error("fiber map degenerate at quotient point");
  return fm;
}

double subgroup_density(const FiberSplit& s, const Vec& z) {
  return haar_left_density(*s.subgroup, z);
}

}  // namespace

FiberProfile fiber_profile(const FiberSplit& split, const CellSet& omega) {
  if (omega.chart()->name != split.group->name)
    throw std::invalid_argument("fiber_profile: set lives on a different chart");
  const Grid& g = omega.grid();

  Grid qg;
  qg.dim = int(split.quotient_axes.size());
  qg.level = g.level;
  for (size_t i = 0; i < split.quotient_axes.size(); ++i) {
    qg.scale[i] = g.scale[size_t(split.quotient_axes[i])];
    qg.periodic[i] = g.periodic[size_t(split.quotient_axes[i])];
  }

  // bucket cells of omega by their quotient part
  std::map<uint64_t, std::vector<uint64_t>> buckets;
  int64_t idx[kMaxDim], qidx[kMaxDim];
  for (uint64_t key : omega.cells()) {
    g.unpack(key, idx);
    for (size_t i = 0; i < split.quotient_axes.size(); ++i)
      qidx[i] = idx[split.quotient_axes[i]];
    buckets[qg.pack(qidx)].push_back(key);
  }

  FiberProfile p;
  p.quotient = split.quotient;
  p.qgrid = qg;
  p.values.reserve(buckets.size());
  const int hd = int(split.fiber_axes.size());
  double hvol = 1.0;
  for (int a : split.fiber_axes) hvol *= g.side(a);

  Vec qc(qg.dim), zc(hd), masked_center(hd);
  for (const auto& [qkey, cells] : buckets) {
    qg.unpack(qkey, qidx);
    for (int i = 0; i < qg.dim; ++i) qc[i] = (double(qidx[i]) + 0.5) * qg.side(i);
    FiberMap fm = fiber_map_at(split, qc);
    Eigen::PartialPivLU<Mat> lu(fm.m);
    double f = 0.0;
    for (uint64_t key : cells) {
      g.unpack(key, idx);
      for (int i = 0; i < hd; ++i)
        masked_center[i] = (double(idx[split.fiber_axes[i]]) + 0.5) *
                           g.side(split.fiber_axes[i]);
      zc = fm.zid + lu.solve(masked_center - fm.t0);
      f += subgroup_density(split, zc) * hvol / fm.absdet;
    }
    if (f > 0.0) {
      p.values.emplace_back(qkey, f);
      p.max_value = std::max(p.max_value, f);
    }
  }
  std::sort(p.values.begin(), p.values.end());

  // superlevel lookup table
  std::vector<std::pair<double, double>> vm;
  vm.reserve(p.values.size());
  for (const auto& [key, f] : p.values) {
    qg.unpack(key, qidx);
    for (int i = 0; i < qg.dim; ++i) qc[i] = (double(qidx[i]) + 0.5) * qg.side(i);
    double vol = 1.0;
    for (int i = 0; i < qg.dim; ++i) vol *= qg.side(i);
    vm.emplace_back(f, haar_left_density(*split.quotient, qc) * vol);
  }
  std::sort(vm.begin(), vm.end());
  p.slv_value.resize(vm.size());
  p.slv_suffix.assign(vm.size() + 1, 0.0);
  for (size_t i = vm.size(); i-- > 0;) {
    p.slv_value[i] = vm[i].first;
    p.slv_suffix[i] = p.slv_suffix[i + 1] + vm[i].second;
  }
  return p;
}

double FiberProfile::value_at(uint64_t key) const {
  auto it = std::lower_bound(values.begin(), values.end(), key,
                             [](const auto& a, uint64_t k) { return a.first < k; });
  return (it != values.end() && it->first == key) ? it->second : 0.0;
}

namespace {

double quotient_cell_mass(const FiberProfile& p, uint64_t key) {
  const Grid& qg = p.qgrid;
  int64_t qidx[kMaxDim];
  qg.unpack(key, qidx);
  Vec qc(qg.dim);
  for (int i = 0; i < qg.dim; ++i) qc[i] = (double(qidx[i]) + 0.5) * qg.side(i);
  double vol = 1.0;
  for (int i = 0; i < qg.dim; ++i) vol *= qg.side(i);
  return haar_left_density(*p.quotient, qc) * vol;
}

}  // namespace

double quotient_integral_check(const FiberSplit& split, const CellSet& omega) {
  Measured mu = measure(omega, Side::left);
  if (!(mu.value > 0.0)) throw std::invalid_argument("quotient check: zero measure");
  FiberProfile p = fiber_profile(split, omega);
  double integral = 0.0;
  for (const auto& [key, f] : p.values) integral += f * quotient_cell_mass(p, key);
  return std::abs(mu.value - integral) / mu.value;
}

double superlevel_measure(const FiberProfile& p, double t) {
  if (!p.slv_value.empty()) {
    if (t <= 0.0) return p.slv_suffix[0];
    auto it = std::lower_bound(p.slv_value.begin(), p.slv_value.end(), t);
    return p.slv_suffix[size_t(it - p.slv_value.begin())];
  }
  double total = 0.0;
  for (const auto& [key, f] : p.values)
    if (t <= 0.0 || f >= t) total += quotient_cell_mass(p, key);
  return total;
}

double layer_cake_error(const FiberProfile& p, int r, int grid_points) {
  if (r < 1) throw std::invalid_argument("layer cake: r >= 1");
  double direct = 0.0;
  for (const auto& [key, f] : p.values)
    direct += std::pow(f, double(r)) * quotient_cell_mass(p, key);
  if (!(direct > 0.0)) return 0.0;
  double top = p.max_value;
  double dt = top / double(grid_points);
  double integral = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    double t = (double(i) + 0.5) * dt;
    integral += double(r) * std::pow(t, double(r - 1)) * superlevel_measure(p, t) * dt;
  }
  return std::abs(direct - integral) / direct;
}

double spillover_F(const FiberProfile& p, int n1, int n2, double t) {
  if (n1 < 1) throw std::invalid_argument("spillover_F: n1 >= 1 required");
  if (n1 + n2 < 2)
    throw std::invalid_argument("spillover_F: n1 + n2 >= 2 required");
  if (!(t > 0.0)) throw std::invalid_argument("spillover_F: t > 0 required");
  double gamma = double(n1 + n2 - 1);
  double alpha = double(n1 - 1) / gamma;
  double M = superlevel_measure(p, std::pow(t, double(n1)));
  if (M <= 0.0) return 0.0;
  return std::pow(t, alpha) * std::pow(M, 1.0 / gamma);
}

ConvexityResult spillover_convexity_check(const FiberSplit& split, const CellSet& X,
                                          const CellSet& Y, int n1, int n2,
                                          int grid_points, uint64_t samples,
                                          uint64_t seed) {
  int out_level = std::max(X.grid().level, Y.grid().level);
  CellSet XY = product_set_inner(X, Y, out_level, samples, seed);
  FiberProfile pX = fiber_profile(split, X);
  FiberProfile pY = fiber_profile(split, Y);
  FiberProfile pXY = fiber_profile(split, XY);

  double TX = std::pow(pX.max_value, 1.0 / double(n1));
  double TY = std::pow(pY.max_value, 1.0 / double(n1));
  ConvexityResult res;
  res.worst_margin = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= grid_points; ++i) {
    double t1 = TX * double(i) / double(grid_points);
    double f1 = spillover_F(pX, n1, n2, t1);
    for (int j = 1; j <= grid_points; ++j) {
      double t2 = TY * double(j) / double(grid_points);
      double f2 = spillover_F(pY, n1, n2, t2);
      double lhs = spillover_F(pXY, n1, n2, t1 + t2);
      double margin = lhs - f1 - f2;
      if (margin < res.worst_margin) {
        res.worst_margin = margin;
        res.t1_at_worst = t1;
        res.t2_at_worst = t2;
      }
    }
  }
  return res;
}

namespace {

double lemma_ratio(double a, double b, int n, double eps, double r) {
  if (n == 0) {
    return (eps * r * (a + b + eps)) /
           ((1.0 + r * a * b) * (1.0 + r * (a + eps) * (b + eps)));
  }
  double inv = 1.0 / double(n + 1);
  double top = std::pow(r * (a * b + eps * (a + b + eps)), inv) - std::pow(r * a * b, inv);
  double bot = (1.0 + std::pow(r * a * b, inv)) *
               (1.0 + std::pow(r * (a + eps) * (b + eps), inv));
  return top / bot;
}

}  // namespace

double lemma_deficit(double a, double b, int n, double eps) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("lemma deficit: a, b > 0");
  if (n < 0 || eps < 0.0) throw std::invalid_argument("lemma deficit: n, eps >= 0");
  if (eps == 0.0) return 0.0;

  // coarse scan over log r locates the bracket; golden section refines it
  const double llo = std::log(1e-8), lhi = std::log(1e8);
  const int coarse = 129;
  int best = 0;
  double best_val = -1.0;
  for (int i = 0; i < coarse; ++i) {
    double lr = llo + (lhi - llo) * double(i) / double(coarse - 1);
    double v = lemma_ratio(a, b, n, eps, std::exp(lr));
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double step = (lhi - llo) / double(coarse - 1);
  double lo = llo + step * double(std::max(0, best - 1));
  double hi = llo + step * double(std::min(coarse - 1, best + 1));
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = lemma_ratio(a, b, n, eps, std::exp(x1));
  double f2 = lemma_ratio(a, b, n, eps, std::exp(x2));
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = lemma_ratio(a, b, n, eps, std::exp(x2));
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = lemma_ratio(a, b, n, eps, std::exp(x1));
    }
  }
  return std::max(f1, f2);
}

double lemma_deficit_gridscan(double a, double b, int n, double eps, int points) {
  if (eps == 0.0) return 0.0;
  const double llo = std::log(1e-6), lhi = std::log(1e6);
  double best = 0.0;
  for (int i = 0; i < points; ++i) {
    double lr = llo + (lhi - llo) * double(i) / double(points - 1);
    best = std::max(best, lemma_ratio(a, b, n, eps, std::exp(lr)));
  }
  return best;
}

std::string fiber_profile_csv(const FiberProfile& p) {
  std::string out;
  const Grid& qg = p.qgrid;
  for (int i = 0; i < qg.dim; ++i) out += "q" + std::to_string(i) + ",";
  out += "fiber_length\n";
  int64_t qidx[kMaxDim];
  char buf[40];
  for (const auto& [key, f] : p.values) {
    qg.unpack(key, qidx);
    for (int i = 0; i < qg.dim; ++i) {
      std::snprintf(buf, sizeof buf, "%.12g", (double(qidx[i]) + 0.5) * qg.side(i));
      out += buf;
      out += ',';
    }
    std::snprintf(buf, sizeof buf, "%.12g", f);
    out += buf;
    out += '\n';
  }
  return out;
}

}  // namespace bmlab
