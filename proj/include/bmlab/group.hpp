#ifndef BMLAB_GROUP_HPP
#define BMLAB_GROUP_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bmlab/types.hpp"

namespace bmlab {

// Group elements live in a fixed coordinate chart; an Element is just its
// coordinate vector. Charts own the group law and everything derived from it.
using Element = Vec;

/// (d, m, h, n): topological dimension, max dimension of a compact subgroup,
/// helix dimension, noncompact Lie dimension n = d - m.
struct DimensionProfile {
  int d = 0;
  int m = 0;
  int h = 0;
  int n = 0;
  int bm_exponent() const { return n - h; }
  bool operator==(const DimensionProfile&) const = default;
};

/// One chart axis: admissible coordinate range, periodicity, and the base
/// grid unit used by dyadic cell sets (cell side = base_scale / 2^level).
struct Axis {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double period = 0.0;  // 0 = not periodic; else base_scale == period
  double base_scale = 1.0;
};

using GroupLaw = std::function<Vec(const Vec&, const Vec&)>;
using Density = std::function<double(const Vec&)>;

/// A concrete group presented as a coordinate chart with an explicit law.
/// Immutable after construction; safe to share across threads.
struct GroupChart {
  std::string name;
  int dim = 0;
  std::vector<Axis> axes;
  GroupLaw multiply;       // canonical coordinates (periodic axes wrapped)
  GroupLaw multiply_raw;   // unwrapped law; equals `multiply` when no wrap
  std::function<Vec(const Vec&)> invert;
  Vec identity;
  Density left_density_closed;   // may be empty; normalized to 1 at identity
  Density modular_closed;        // may be empty
  DimensionProfile profile;
  // Every output coordinate of multiply_raw is multilinear in the input
  // coordinates; box images are then exactly enclosed by corner products.
  bool law_multilinear = false;
  // Axis parametrizing a compact factor that acts by coordinate shift on the
  // left: multiply(shift(g,s), h) = shift(multiply(g,h), s). Sets invariant
  // under this shift admit a quotient product kernel. -1 when absent.
  int left_shift_axis = -1;
  double density_scale = 1.0;  // global Haar constant (tests rescale it)

  bool in_domain(const Vec& g, double slack = 0.0) const;
  Vec wrap(Vec g) const;

  GroupChart with_density_scale(double c) const {
    GroupChart copy = *this;
    copy.density_scale = c;
    return copy;
  }
};

using ChartPtr = std::shared_ptr<const GroupChart>;

// Translation Jacobians of the group law, by central differences with one
// Richardson extrapolation step. `left` differentiates y -> g*y at y = e,
// otherwise y -> y*g at y = e.
Mat translation_jacobian(const GroupChart& chart, const Vec& g, bool left);

/// Left Haar density at g relative to coordinate volume, normalized so that
/// the density at the identity equals density_scale.
double haar_left_density(const GroupChart& chart, const Vec& g);

/// Modular function value: mu(A g) = Delta(g) mu(A).
double modular_value(const GroupChart& chart, const Vec& g);

// Always compute from translation Jacobians, ignoring any closed form.
// The closed forms are cross-checked against these in the test suite.
double haar_left_density_generic(const GroupChart& chart, const Vec& g);
double modular_value_generic(const GroupChart& chart, const Vec& g);

/// Right Haar density: left density / Delta.
double haar_right_density(const GroupChart& chart, const Vec& g);

// Jacobians of the full product map at (a, b), w.r.t. the first and second
// argument. Periodic output axes are differenced on the circle.
void product_jacobians(const GroupChart& chart, const Vec& a, const Vec& b,
                       Mat& Ja, Mat& Jb);

}  // namespace bmlab

#endif
