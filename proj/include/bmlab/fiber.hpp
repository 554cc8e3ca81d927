#ifndef BMLAB_FIBER_HPP
#define BMLAB_FIBER_HPP

#include <vector>

#include "bmlab/product.hpp"

namespace bmlab {

/// An axis-aligned normal subgroup H spanned by `fiber_axes` of the chart,
/// together with derived charts for H and for G/H. Construction verifies on
/// samples that the masked axes form a normal subgroup, that the quotient
/// law is well defined, and that the fiber parametrization is affine.
struct FiberSplit {
  ChartPtr group;
  std::vector<int> fiber_axes;      // ascending
  std::vector<int> quotient_axes;   // complement, ascending
  ChartPtr subgroup;                // chart on the fiber axes
  ChartPtr quotient;                // chart on the quotient axes

  Vec lift(const Vec& q) const;     // quotient coords -> G (fiber part = identity)
  Vec embed(const Vec& z) const;    // fiber coords -> G
  Vec project_q(const Vec& g) const;
  Vec project_h(const Vec& g) const;
};

FiberSplit make_split(ChartPtr chart, std::vector<int> fiber_axes);

/// Sampled fiber-length function over the quotient grid,
/// f(q) = mu_H(lift(q)^{-1} Omega cap H), evaluated at cell centers.
struct FiberProfile {
  ChartPtr quotient;
  Grid qgrid;
  std::vector<std::pair<uint64_t, double>> values;  // sorted by key, value > 0
  double max_value = 0.0;
  // superlevel table: fiber values ascending with suffix mass sums
  std::vector<double> slv_value;
  std::vector<double> slv_suffix;

  double value_at(uint64_t key) const;
};

FiberProfile fiber_profile(const FiberSplit& split, const CellSet& omega);

/// Relative gap |mu_G(Omega) - int_{G/H} f_Omega| / mu_G(Omega).
double quotient_integral_check(const FiberSplit& split, const CellSet& omega);

/// Quotient measure of the superlevel set {f >= t}; t <= 0 returns the
/// measure of the support.
double superlevel_measure(const FiberProfile& p, double t);

/// Relative gap in int r t^{r-1} M(t) dt = int f^r, with the left side
/// integrated on a uniform t grid (the independent route).
double layer_cake_error(const FiberProfile& p, int r, int grid_points = 20000);

/// Spillover functional F(t) = t^a * M(t^n1)^(1/g) with a = (n1-1)/g and
/// g = n1+n2-1, where M is the quotient measure of the superlevel set.
/// Requires n1 >= 1 and n1+n2 >= 2 (the n2 = 0 branch follows the max-norm
/// reading, which collapses to the same exponent 1/g).
double spillover_F(const FiberProfile& p, int n1, int n2, double t);

struct ConvexityResult {
  double worst_margin = 0.0;
  double t1_at_worst = 0.0;
  double t2_at_worst = 0.0;
};

/// Grid check of F_XY(t1 + t2) >= F_X(t1) + F_Y(t2), with XY estimated from
/// below by the statistical inner product. The margin should stay above
/// a small negative discretization allowance.
ConvexityResult spillover_convexity_check(const FiberSplit& split, const CellSet& X,
                                          const CellSet& Y, int n1, int n2,
                                          int grid_points, uint64_t samples,
                                          uint64_t seed);

/// The explicit deficit bound: sup over r > 0 of the ratio controlling the
/// nonuniform-modulus error term; 0 when eps = 0.
double lemma_deficit(double a, double b, int n, double eps);

/// Dense log-grid evaluation of the same supremum (the independent oracle).
double lemma_deficit_gridscan(double a, double b, int n, double eps, int points);

/// CSV export: one row per quotient cell, center coordinates then value.
std::string fiber_profile_csv(const FiberProfile& p);

}  // namespace bmlab

#endif
