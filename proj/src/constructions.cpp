#include "bmlab/constructions.hpp"

#include <cmath>
#include <cstdio>
#include <future>
#include <random>

#include "bmlab/catalog.hpp"

namespace bmlab {

double sl2r_quotient_gap(double t, double u) {
  double sh = std::sinh(t);
  return 0.5 * (std::exp(2.0 * t) * u * u + 4.0 * sh * sh);
}

namespace {

// min of the gap over a (t, u) cell: quadratic in u (clamp u to 0), then
// convex in t (golden section).
double cell_min_gap(double t0, double t1, double u0, double u1) {
  double us = (u0 <= 0.0 && 0.0 <= u1) ? 0.0 : (std::abs(u0) < std::abs(u1) ? u0 : u1);
  double lo = t0, hi = t1;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = sl2r_quotient_gap(x1, us), f2 = sl2r_quotient_gap(x2, us);
  for (int it = 0; it < 60 && hi - lo > 1e-14; ++it) {
    if (f1 > f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = sl2r_quotient_gap(x2, us);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = sl2r_quotient_gap(x1, us);
    }
  }
  return std::min({f1, f2, sl2r_quotient_gap(t0, us), sl2r_quotient_gap(t1, us)});
}

Grid tube_grid(const GroupChart& chart, const TubeSpec& spec) {
  if (spec.scale.size() == chart.dim)
    return Grid::of_chart_scaled(chart, spec.level, spec.scale);
  return Grid::of_chart(chart, spec.level);
}

CellSet euclidean_ball(ChartPtr chart, const TubeSpec& spec, int first_axis) {
  const GroupChart& c = *chart;
  Grid g = tube_grid(c, spec);
  const int d = c.dim;
  const double r2 = spec.radius * spec.radius;
  int64_t lo[kMaxDim], hi[kMaxDim], idx[kMaxDim];
  for (int k = 0; k < d; ++k) {
    if (k < first_axis) {  // compact factor: every cell
      lo[k] = 0;
      hi[k] = g.wrap_count() - 1;
    } else {
      lo[k] = int64_t(std::floor(-spec.radius / g.side(k)));
      hi[k] = int64_t(std::floor(spec.radius / g.side(k)));
    }
  }
  std::vector<uint64_t> keys;
  std::function<void(int, double)> rec = [&](int k, double dist2) {
    if (dist2 >= r2) return;
    if (k == d) {
      keys.push_back(g.pack(idx));
      return;
    }
    for (int64_t i = lo[k]; i <= hi[k]; ++i) {
      idx[k] = i;
      double add = 0.0;
      if (k >= first_axis) {
        double a = double(i) * g.side(k), b = double(i + 1) * g.side(k);
        double nearest = (a <= 0.0 && 0.0 <= b) ? 0.0 : std::min(std::abs(a), std::abs(b));
        add = nearest * nearest;
      }
      rec(k + 1, dist2 + add);
    }
  };
  rec(0, 0.0);
  return CellSet(chart, g, SetRole::outer, std::move(keys));
}

CellSet sl2r_tube(ChartPtr chart, const TubeSpec& spec) {
  const GroupChart& c = *chart;
  Grid g = tube_grid(c, spec);
  const double cgap = std::cosh(spec.radius) - 1.0;
  // t range: 4 sinh^2(t)/2 <= cgap; u range at the most negative t
  double tmax = std::asinh(std::sqrt(0.5 * cgap));
  double umax = std::sqrt(2.0 * cgap) * std::exp(tmax);
  int64_t tlo = int64_t(std::floor(-tmax / g.side(1))) - 1;
  int64_t thi = int64_t(std::floor(tmax / g.side(1))) + 1;
  int64_t ulo = int64_t(std::floor(-umax / g.side(2))) - 1;
  int64_t uhi = int64_t(std::floor(umax / g.side(2))) + 1;
  std::vector<uint64_t> keys;
  int64_t idx[kMaxDim];
  for (int64_t it = tlo; it <= thi; ++it) {
    double t0 = double(it) * g.side(1), t1 = double(it + 1) * g.side(1);
    for (int64_t iu = ulo; iu <= uhi; ++iu) {
      double u0 = double(iu) * g.side(2), u1 = double(iu + 1) * g.side(2);
      if (cell_min_gap(t0, t1, u0, u1) >= cgap) continue;
      idx[1] = it;
      idx[2] = iu;
      for (int64_t th = 0; th < g.wrap_count(); ++th) {
        idx[0] = th;
        keys.push_back(g.pack(idx));
      }
    }
  }
  return CellSet(chart, g, SetRole::outer, std::move(keys));
}

}  // namespace

CellSet tube(const TubeSpec& spec) {
  const std::string& name = spec.group->name;
  if (!(spec.radius > 0.0)) throw std::invalid_argument("tube: radius > 0 required");
  if (name == "sl2r") return sl2r_tube(spec.group, spec);
  if (name.rfind("r:", 0) == 0) return euclidean_ball(spec.group, spec, 0);
  if (name.rfind("t:", 0) == 0) return euclidean_ball(spec.group, spec, spec.group->dim);
  if (name.rfind("prod(t:", 0) == 0) {
    // prod(t:a, r:b): compact torus factor times a Euclidean ball
    int first_flat = 0;
    while (first_flat < spec.group->dim &&
           spec.group->axes[first_flat].period > 0.0)
      ++first_flat;
    for (int k = first_flat; k < spec.group->dim; ++k)
      if (spec.group->axes[k].period > 0.0)
        throw std::invalid_argument("tube: unsupported group " + name);
    return euclidean_ball(spec.group, spec, first_flat);
  }
  throw std::invalid_argument("tube: unsupported group " + name);
}

CellSet slab(const SlabSpec& spec) {
  ChartPtr aff = make_affine();
  double ahi = std::exp(spec.eps_tilde);
  Vec lo(2), hi(2);
  lo << 1.0, 0.0;
  hi << ahi, spec.width;
  Grid g;
  if (spec.scale.size() == 2) {
    g = Grid::of_chart_scaled(*aff, spec.level, spec.scale);
  } else {
    Vec scale(2);
    scale << (ahi - 1.0) * double(int64_t(1) << spec.level) / 32.0, spec.width;
    g = Grid::of_chart_scaled(*aff, spec.level, scale);
  }
  return from_box(aff, lo, hi, g);
}

SlabClosedForm slab_closed_form(double eps_tilde, double width) {
  double E = std::exp(eps_tilde);
  SlabClosedForm f;
  f.mu_X = width * (1.0 - 1.0 / E);
  f.nu_X = width * eps_tilde;
  // X^2 = { (a, b) : a in [1, E^2], 0 <= b <= width (1 + min(E, a)) }
  f.mu_X2 = width * ((1.0 - 1.0 / E + eps_tilde) + (1.0 + E) * (1.0 / E - 1.0 / (E * E)));
  f.nu_X2 = width * ((eps_tilde + E - 1.0) + (1.0 + E) * eps_tilde);
  return f;
}

CollapsePair collapse_pair(double s, double alpha, double beta, int level) {
  if (!(s > 0.0) || s > 0.2)
    throw std::invalid_argument("collapse_pair: 0 < s <= 0.2 required");
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("collapse_pair: alpha, beta > 0 required");
  CollapsePair cp;
  cp.s = s;
  cp.alpha = alpha;
  cp.beta = beta;
  cp.A = 1.0;
  cp.Aprime = 60.0 / (s * s);  // far block: makes b_X << A' b_Y
  cp.b_X = alpha * cp.A * (1.0 + s * s) / (s * s);
  cp.b_Y = beta * cp.Aprime * (1.0 + s) / s;
  // XY is contained in [A A', A A'(1+s^2)(1+s)] x [0, A(1+s^2) b_Y + b_X]
  double aw = (1.0 + s * s) * (1.0 + s);
  double height = cp.A * (1.0 + s * s) * cp.b_Y + cp.b_X;
  cp.mu_XY_bound = height * (1.0 / (cp.A * cp.Aprime)) * (1.0 - 1.0 / aw);
  cp.ratio_bound = cp.mu_XY_bound / beta;
  cp.C = (cp.ratio_bound - 1.0) / s;
  if (!(cp.ratio_bound >= 1.0))
    throw std::runtime_error("collapse_pair: parameter solve infeasible");

  // Grid realization: right-translate Y by (1/A', 0); the ratio
  // mu(XY)/mu(Y) is invariant and everything lands near a = 1.
  ChartPtr aff = make_affine();
  double side_a = s * s / 12.0;                  // X spans 12 cells in a
  double side_b = cp.b_X / 3.0;                  // X spans 3 cells in b
  double two_L = double(int64_t(1) << level);
  Vec scale(2);
  scale << side_a * two_L, side_b * two_L;
  Grid g = Grid::of_chart_scaled(*aff, level, scale);
  Vec xlo(2), xhi(2), ylo(2), yhi(2);
  xlo << cp.A, 0.0;
  xhi << cp.A * (1.0 + s * s), cp.b_X;
  ylo << 1.0, 0.0;
  yhi << 1.0 + s, cp.b_Y;
  cp.X = from_box(aff, xlo, xhi, g);
  cp.Y = from_box(aff, ylo, yhi, g);
  cp.shift_factor = cp.Aprime;  // mu(grid Y) = Aprime * beta
  return cp;
}

StabilityPair stability_pair(ChartPtr group, double eps_tilde, double delta,
                             int level, const Vec& scale) {
  if (!(eps_tilde > 0.0)) throw std::invalid_argument("stability: eps > 0");
  StabilityPair sp;
  sp.delta = delta;
  sp.delta1 = delta * (1.0 + 0.5 * eps_tilde);
  sp.bound = std::pow(2.0 + eps_tilde, group->profile.bm_exponent());
  TubeSpec tx{group, delta, level, scale};
  TubeSpec tx1{group, sp.delta1, level, scale};
  sp.X = tube(tx);
  sp.X1 = tube(tx1);
  CellSet prod = product_set(sp.X1, sp.X, level);
  sp.achieved = measure(prod, Side::left).value / measure(sp.X, Side::left).value;
  sp.feasible = sp.achieved < sp.bound;
  return sp;
}

// ------------------------------------------------------------- optimizer --

ParamFamily make_family(const std::string& kind, ChartPtr group, int level,
                        uint64_t samples, uint64_t seed) {
  ParamFamily f;
  f.name = kind;
  if (kind == "box") {
    const int d = group->dim;
    f.lo = Vec::Constant(d - 1 > 0 ? d - 1 : 1, -1.2);
    f.hi = Vec::Constant(d - 1 > 0 ? d - 1 : 1, 1.2);
    for (int k = 0; k < f.lo.size(); ++k)
      f.param_names.push_back("log_aspect" + std::to_string(k));
    f.objective = [group, level](const Vec& p) {
      // X = Y = box of unit volume with the given log-aspect profile
      const int d = group->dim;
      Vec w(d);
      double sum = 0.0;
      for (int k = 0; k < d - 1; ++k) {
        w[k] = std::exp(p[k]);
        sum += p[k];
      }
      w[d - 1] = std::exp(-sum);
      Vec lo = Vec::Zero(d), hi = w;
      if (group->name == "aff") {
        lo[0] = 1.0;  // keep clear of the a > 0 boundary
        hi[0] = 1.0 + w[0];
      }
      CellSet X = from_box(group, lo, hi, level);
      CellSet XX = product_set(X, X, level);
      double muX = measure(X, Side::left).value;
      double nuX = measure(X, Side::right).value;
      double muXX = measure(XX, Side::left).value;
      double nuXX = measure(XX, Side::right).value;
      return 1.0 - bm_lhs(nuX, nuXX, muX, muXX, group->profile.bm_exponent());
    };
    return f;
  }
  if (kind == "tube") {
    f.lo = Vec::Constant(1, 0.05);
    f.hi = Vec::Constant(1, 0.8);
    f.param_names.push_back("radius");
    f.objective = [group, level](const Vec& p) {
      double delta = p[0];
      Vec scale;
      if (group->name == "sl2r") {
        scale.resize(3);
        scale << 2.0 * std::numbers::pi, 2.0 * delta, 2.0 * delta;
      }
      TubeSpec spec{group, delta, level, scale};
      CellSet X = tube(spec);
      CellSet XX = product_set(X, X, level);
      return measure(XX, Side::left).value / measure(X, Side::left).value;
    };
    return f;
  }
  if (kind == "collapse") {
    f.lo = Vec::Constant(1, 0.01);
    f.hi = Vec::Constant(1, 0.2);
    f.param_names.push_back("s");
    f.objective = [](const Vec& p) {
      CollapsePair cp = collapse_pair(p[0], 1.0, 1.0);
      // subadditivity gap mu(XY) - mu(X) - mu(Y), from the closed form
      return cp.mu_XY_bound - cp.alpha - cp.beta;
    };
    return f;
  }
  (void)samples;
  (void)seed;
  throw std::invalid_argument("unknown family: " + kind);
}

OptimizeResult minimize_product(const ParamFamily& family, int budget, int restarts,
                                uint64_t seed) {
  OptimizeResult res;
  const int dim = int(family.lo.size());
  int evals = 0;
  bool exhausted = false;

  auto eval = [&](const Vec& p) -> double {
    if (evals >= budget) {
      exhausted = true;
      return std::numeric_limits<double>::infinity();
    }
    ++evals;
    return family.objective(p);
  };

  res.best_objective = std::numeric_limits<double>::infinity();
  char line[160];
  for (int r = 0; r < restarts && !exhausted; ++r) {
    std::mt19937_64 rng(seed + uint64_t(r) * 0x9e3779b97f4a7c15ULL);
    auto u01 = [&]() { return double(rng() >> 11) * 0x1.0p-53; };
    Vec p(dim);
    for (int k = 0; k < dim; ++k)
      p[k] = r == 0 ? 0.5 * (family.lo[k] + family.hi[k])
                    : family.lo[k] + u01() * (family.hi[k] - family.lo[k]);
    double fp = eval(p);
    // coordinate descent: per-axis 9-point scan, halving the span
    for (int sweep = 0; sweep < 6 && !exhausted; ++sweep) {
      bool improved = false;
      for (int k = 0; k < dim && !exhausted; ++k) {
        double span = (family.hi[k] - family.lo[k]) / std::pow(2.0, sweep);
        double best_x = p[k], best_f = fp;
        for (int i = 0; i <= 8; ++i) {
          double x = p[k] - 0.5 * span + span * double(i) / 8.0;
          x = std::clamp(x, family.lo[k], family.hi[k]);
          Vec q = p;
          q[k] = x;
          double fq = eval(q);
          if (fq < best_f - 1e-15) {
            best_f = fq;
            best_x = x;
          }
        }
        if (best_x != p[k]) {
          p[k] = best_x;
          fp = best_f;
          improved = true;
        }
      }
      if (!improved) break;
    }
    if (fp < res.best_objective) {
      res.best_objective = fp;
      res.best_params = p;
    }
    std::snprintf(line, sizeof line, "restart %d: objective %.10g after %d evals", r,
                  fp, evals);
    res.trail.push_back(line);
  }
  res.evals = evals;
  res.budget_exhausted = exhausted;
  return res;
}

}  // namespace bmlab
