#include "bmlab/group.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace bmlab {

bool GroupChart::in_domain(const Vec& g, double slack) const {
  if (g.size() != dim) return false;
  for (int k = 0; k < dim; ++k) {
    const Axis& ax = axes[k];
    if (ax.period > 0.0) continue;  // periodic axes are wrapped, always valid
    if (g[k] < ax.lo - slack || g[k] > ax.hi + slack) return false;
  }
  return true;
}

Vec GroupChart::wrap(Vec g) const {
  for (int k = 0; k < dim; ++k) {
    double p = axes[k].period;
    if (p > 0.0) {
      g[k] = std::fmod(g[k], p);
      if (g[k] < 0.0) g[k] += p;
    }
  }
  return g;
}

namespace {

// Wrap a coordinate difference onto (-p/2, p/2] so that finite differences
// across a periodic seam stay small.
inline double wrap_diff(double d, double period) {
  if (period <= 0.0) return d;
  d = std::fmod(d, period);
  if (d > 0.5 * period) d -= period;
  if (d < -0.5 * period) d += period;
  return d;
}

Vec law_diff(const GroupChart& chart, const Vec& a, const Vec& b) {
  Vec d = a - b;
  for (int k = 0; k < chart.dim; ++k) d[k] = wrap_diff(d[k], chart.axes[k].period);
  return d;
}

// Central-difference Jacobian of f at x with one Richardson step.
template <class F>
Mat jacobian_fd(const GroupChart& chart, F&& f, const Vec& x) {
  const int d = chart.dim;
  Mat J(d, d);
  for (int j = 0; j < d; ++j) {
    double scale = std::max(1.0, std::abs(x[j]));
    double h = 1e-4 * scale;
    Vec e = Vec::Zero(d);
    e[j] = 1.0;
    auto central = [&](double step) -> Vec {
      Vec fp = f(x + step * e);
      Vec fm = f(x - step * e);
      return law_diff(chart, fp, fm) / (2.0 * step);
    };
    Vec c1 = central(h);
    Vec c2 = central(0.5 * h);
    J.col(j) = (4.0 * c2 - c1) / 3.0;
  }
  return J;
}

}  // namespace

Mat translation_jacobian(const GroupChart& chart, const Vec& g, bool left) {
  if (!chart.in_domain(g))
    throw domain_error_chart(chart.name + ": element outside chart domain");
  auto f = [&](const Vec& y) { return left ? chart.multiply(g, y) : chart.multiply(y, g); };
  return jacobian_fd(chart, f, chart.identity);
}

double haar_left_density_generic(const GroupChart& chart, const Vec& g) {
  double det = translation_jacobian(chart, g, /*left=*/true).determinant();
  double ad = std::abs(det);
  if (!(ad > 1e-14))
    throw domain_error_chart(chart.name + ": singular translation Jacobian");
  return chart.density_scale / ad;
}

double haar_left_density(const GroupChart& chart, const Vec& g) {
  if (chart.left_density_closed)
    return chart.density_scale * chart.left_density_closed(g);
  return haar_left_density_generic(chart, g);
}

double modular_value_generic(const GroupChart& chart, const Vec& g) {
  double dl = std::abs(translation_jacobian(chart, g, true).determinant());
  double dr = std::abs(translation_jacobian(chart, g, false).determinant());
  if (!(dl > 1e-14) || !(dr > 1e-14))
    throw domain_error_chart(chart.name + ": singular translation Jacobian");
  return dr / dl;
}

double modular_value(const GroupChart& chart, const Vec& g) {
  if (chart.modular_closed) return chart.modular_closed(g);
  return modular_value_generic(chart, g);
}

double haar_right_density(const GroupChart& chart, const Vec& g) {
  return haar_left_density(chart, g) / modular_value(chart, g);
}

void product_jacobians(const GroupChart& chart, const Vec& a, const Vec& b,
                       Mat& Ja, Mat& Jb) {
  Ja = jacobian_fd(chart, [&](const Vec& x) { return chart.multiply(x, b); }, a);
  Jb = jacobian_fd(chart, [&](const Vec& y) { return chart.multiply(a, y); }, b);
}

}  // namespace bmlab
