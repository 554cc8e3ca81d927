#ifndef BMLAB_CONSTRUCTIONS_HPP
#define BMLAB_CONSTRUCTIONS_HPP

#include <functional>

#include "bmlab/bm.hpp"

namespace bmlab {

/// Tube around the maximal compact subgroup: preimage of the metric ball of
/// the given radius on G/K. Supported: r:d (Euclidean ball), sl2r (preimage
/// of a hyperbolic disc), t:d (all of G) and prod(t:a, r:b).
struct TubeSpec {
  ChartPtr group;
  double radius = 0.1;
  int level = 6;
  Vec scale;  // optional per-axis grid scale; empty = chart default
};

CellSet tube(const TubeSpec& spec);

/// Hyperbolic distance from i to (a(t) n(u)).i, as cosh(d) - 1.
double sl2r_quotient_gap(double t, double u);

/// Slab on Aff+(R): X = [1, e^eps] x [0, width], a thickened copy of a slice
/// of ker(Delta).
struct SlabSpec {
  double eps_tilde = 0.05;
  double width = 1.0;
  int level = 6;
  Vec scale;  // optional; empty = resolve the slab to ~32 cells across
};

CellSet slab(const SlabSpec& spec);

struct SlabClosedForm {
  double mu_X, nu_X, mu_X2, nu_X2;
};
SlabClosedForm slab_closed_form(double eps_tilde, double width);

/// Measure-collapse family on Aff+(R): a thin dilation sliver X against a
/// distant block Y, with mu(X) = alpha, mu(Y) = beta and
/// mu(XY) <= (1 + C s) mu(Y).
struct CollapsePair {
  double s, alpha, beta;
  double A = 1.0, Aprime = 0.0, b_X = 0.0, b_Y = 0.0;  // the solved family
  double mu_XY_bound = 0.0;  // closed-form upper bound on mu(XY)
  double ratio_bound = 0.0;  // mu_XY_bound / beta
  double C = 0.0;            // (ratio_bound - 1) / s
  // Grid realization: X and a right-translate of Y (translation preserves
  // the ratio mu(XY)/mu(Y); the raw family spans scales no single dyadic
  // grid can hold). mu(grid Y) = shift_factor * beta.
  CellSet X, Y;
  double shift_factor = 1.0;
};

CollapsePair collapse_pair(double s, double alpha, double beta, int level = 7);

struct StabilityPair {
  CellSet X, X1;
  double delta = 0.0, delta1 = 0.0;
  double bound = 0.0;     // (2 + eps)^n
  double achieved = 0.0;  // measured mu(X1 X) / mu(X)
  bool feasible = false;
};

/// Nested tubes with measured mu(X1 X) < (2 + eps)^n mu(X).
StabilityPair stability_pair(ChartPtr group, double eps_tilde, double delta,
                             int level, const Vec& scale = {});

/// One scalar objective over a box of parameters.
struct ParamFamily {
  std::string name;
  Vec lo, hi;
  std::vector<std::string> param_names;
  std::function<double(const Vec&)> objective;  // smaller is better
};

/// Families: "box" (aspect of X = Y boxes, objective 1 - lhs),
/// "tube" (radius, objective product ratio), "collapse" (s, objective
/// mu(XY) - mu(X) - mu(Y) from the closed form).
ParamFamily make_family(const std::string& kind, ChartPtr group, int level,
                        uint64_t samples, uint64_t seed);

struct OptimizeResult {
  Vec best_params;
  double best_objective = 0.0;
  int evals = 0;
  bool budget_exhausted = false;
  std::vector<std::string> trail;  // one line per restart
};

/// Coordinate descent with seeded random restarts; deterministic under seed.
OptimizeResult minimize_product(const ParamFamily& family, int budget, int restarts,
                                uint64_t seed);

}  // namespace bmlab

#endif
