#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "bmlab/catalog.hpp"

using namespace bmlab;

namespace {

Vec random_element(const GroupChart& c, std::mt19937_64& rng) {
  auto u01 = [&]() { return double(rng() >> 11) * 0x1.0p-53; };
  Vec g(c.dim);
  for (int k = 0; k < c.dim; ++k) {
    const Axis& ax = c.axes[k];
    if (ax.period > 0.0) {
      g[k] = u01() * ax.period;
    } else if (std::isfinite(ax.lo)) {
      g[k] = ax.lo + 0.2 + 3.0 * u01();  // stay clear of the boundary
    } else {
      g[k] = -2.0 + 4.0 * u01();
    }
  }
  return g;
}

double rel_err_vec(const GroupChart& c, const Vec& a, const Vec& b) {
  double worst = 0.0;
  for (int k = 0; k < c.dim; ++k) {
    double diff = std::abs(a[k] - b[k]);
    if (c.axes[k].period > 0.0) {
      diff = std::fmod(diff, c.axes[k].period);
      diff = std::min(diff, c.axes[k].period - diff);
    }
    worst = std::max(worst, diff / std::max(1.0, std::abs(b[k])));
  }
  return worst;
}

}  // namespace

TEST_CASE("group laws: identity, inverse, associativity on the whole catalog") {
  for (const ChartPtr& chart : catalog()) {
    CAPTURE(chart->name);
    std::mt19937_64 rng(42);
    for (int i = 0; i < 1000; ++i) {
      Vec a = random_element(*chart, rng);
      Vec b = random_element(*chart, rng);
      Vec c = random_element(*chart, rng);
      CHECK(rel_err_vec(*chart, chart->multiply(chart->identity, a), a) < 1e-9);
      CHECK(rel_err_vec(*chart, chart->multiply(a, chart->identity), a) < 1e-9);
      CHECK(rel_err_vec(*chart, chart->multiply(a, chart->invert(a)),
                        chart->identity) < 1e-9);
      Vec left = chart->multiply(chart->multiply(a, b), c);
      Vec right = chart->multiply(a, chart->multiply(b, c));
      CHECK(rel_err_vec(*chart, left, right) < 1e-9);
    }
  }
}

TEST_CASE("left Haar density examples") {
  ChartPtr r2 = make_euclidean(2);
  Vec g(2);
  g << 3.0, -1.0;
  CHECK(haar_left_density_generic(*r2, g) == doctest::Approx(1.0).epsilon(1e-9));

  ChartPtr aff = make_affine();
  Vec a(2);
  a << 2.0, 0.0;
  // finite-difference Jacobian of (a,b)(a',b') = (aa', ab'+b) at the identity
  CHECK(haar_left_density_generic(*aff, a) == doctest::Approx(0.25).epsilon(1e-7));

  ChartPtr h3 = make_heisenberg();
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    Vec g3 = random_element(*h3, rng);
    CHECK(haar_left_density_generic(*h3, g3) == doctest::Approx(1.0).epsilon(1e-7));
  }
}

TEST_CASE("generic density equals the closed form on the catalog") {
  std::mt19937_64 rng(11);
  for (const ChartPtr& chart : catalog()) {
    CAPTURE(chart->name);
    for (int i = 0; i < 25; ++i) {
      Vec g = random_element(*chart, rng);
      double generic = haar_left_density_generic(*chart, g);
      double closed = chart->left_density_closed(g);
      CHECK(rel_diff(generic, closed) < 1e-6);
    }
  }
}

TEST_CASE("modular function: unimodular charts, aff value, homomorphism") {
  std::mt19937_64 rng(3);
  for (const ChartPtr& chart : catalog()) {
    if (chart->name == "aff" || chart->name.find("aff") != std::string::npos) continue;
    CAPTURE(chart->name);
    for (int i = 0; i < 10; ++i) {
      Vec g = random_element(*chart, rng);
      CHECK(modular_value_generic(*chart, g) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  ChartPtr aff = make_affine();
  Vec g(2);
  g << 2.0, 5.0;
  CHECK(modular_value_generic(*aff, g) == doctest::Approx(0.5).epsilon(1e-6));

  for (const ChartPtr& chart : catalog()) {
    CAPTURE(chart->name);
    for (int i = 0; i < 50; ++i) {
      Vec a = random_element(*chart, rng);
      Vec b = random_element(*chart, rng);
      double dab = modular_value(*chart, chart->multiply(a, b));
      double da = modular_value(*chart, a);
      double db = modular_value(*chart, b);
      CHECK(rel_diff(dab, da * db) < 1e-6);
      CHECK(modular_value(*chart, a) * modular_value(*chart, chart->invert(a)) ==
            doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("modular value against the small-box translation oracle on aff") {
  // mu(A g) / mu(A) for a small box A around the identity, by change of
  // variables through the right translation map
  ChartPtr aff = make_affine();
  Vec g(2);
  g << 2.0, 5.0;
  auto rg = [&](const Vec& y) { return aff->multiply(y, g); };
  double h = 1e-3;
  int n = 8;
  double mu_A = 0.0, mu_Ag = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Vec y(2);
      y << 1.0 - h / 2 + (i + 0.5) * h / n, -h / 2 + (j + 0.5) * h / n;
      double cellvol = (h / n) * (h / n);
      mu_A += haar_left_density(*aff, y) * cellvol;
      Mat J(2, 2);
      double step = 1e-6;
      for (int k = 0; k < 2; ++k) {
        Vec e = Vec::Zero(2);
        e[k] = step;
        J.col(k) = (rg(y + e) - rg(y - e)) / (2 * step);
      }
      mu_Ag += haar_left_density(*aff, rg(y)) * std::abs(J.determinant()) * cellvol;
    }
  }
  CHECK(mu_Ag / mu_A == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("right density: examples and right-invariance") {
  ChartPtr aff = make_affine();
  Vec g(2);
  g << 2.0, 0.0;
  CHECK(haar_right_density(*aff, g) == doctest::Approx(0.5).epsilon(1e-6));

  // nu(A g) = nu(A) on random small boxes
  std::mt19937_64 rng(19);
  auto u01 = [&]() { return double(rng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 5; ++trial) {
    Vec g2(2);
    g2 << 0.5 + 2.0 * u01(), -1.0 + 2.0 * u01();
    auto rgm = [&](const Vec& y) { return aff->multiply(y, g2); };
    double h = 1e-2;
    Vec base(2);
    base << 1.0 + u01(), u01();
    int n = 6;
    double nu_A = 0.0, nu_Ag = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Vec y = base;
        y[0] += (i + 0.5) * h / n;
        y[1] += (j + 0.5) * h / n;
        double cellvol = (h / n) * (h / n);
        nu_A += haar_right_density(*aff, y) * cellvol;
        Mat J(2, 2);
        double step = 1e-6;
        for (int k = 0; k < 2; ++k) {
          Vec e = Vec::Zero(2);
          e[k] = step;
          J.col(k) = (rgm(y + e) - rgm(y - e)) / (2 * step);
        }
        nu_Ag += haar_right_density(*aff, rgm(y)) * std::abs(J.determinant()) * cellvol;
      }
    }
    CHECK(rel_diff(nu_A, nu_Ag) < 1e-5);
  }
}

TEST_CASE("left invariance of the left Haar measure on random charts") {
  std::mt19937_64 rng(23);
  for (const ChartPtr& chart : catalog()) {
    if (chart->dim > 3) continue;
    CAPTURE(chart->name);
    for (int trial = 0; trial < 3; ++trial) {
      Vec g = random_element(*chart, rng);
      Vec base = random_element(*chart, rng);
      auto lg = [&](const Vec& y) { return chart->multiply(g, y); };
      double h = 1e-2;
      int n = 4;
      double mu_A = 0.0, mu_gA = 0.0;
      int total = 1;
      for (int k = 0; k < chart->dim; ++k) total *= n;
      for (int cell = 0; cell < total; ++cell) {
        Vec y = base;
        int c = cell;
        double cellvol = 1.0;
        for (int k = 0; k < chart->dim; ++k) {
          y[k] += ((c % n) + 0.5) * h / n;
          c /= n;
          cellvol *= h / n;
        }
        mu_A += haar_left_density(*chart, y) * cellvol;
        Mat J(chart->dim, chart->dim);
        double step = 1e-6;
        for (int k = 0; k < chart->dim; ++k) {
          Vec e = Vec::Zero(chart->dim);
          e[k] = step;
          Vec diff = lg(y + e) - lg(y - e);
          for (int kk = 0; kk < chart->dim; ++kk) {
            double p = chart->axes[kk].period;
            if (p > 0.0) {
              diff[kk] = std::fmod(diff[kk], p);
              if (diff[kk] > 0.5 * p) diff[kk] -= p;
              if (diff[kk] < -0.5 * p) diff[kk] += p;
            }
          }
          J.col(k) = diff / (2 * step);
        }
        mu_gA += haar_left_density(*chart, lg(y)) * std::abs(J.determinant()) * cellvol;
      }
      CHECK(rel_diff(mu_A, mu_gA) < 1e-4);
    }
  }
}

TEST_CASE("sl2r chart: matrix round trip and Iwasawa bijectivity") {
  ChartPtr sl2r = make_sl2r();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    Vec g = random_element(*sl2r, rng);
    Eigen::Matrix2d m = sl2r_to_matrix(g);
    CHECK(std::abs(m.determinant() - 1.0) < 1e-12);
    Vec back = sl2r_from_matrix(m);
    CHECK(rel_err_vec(*sl2r, back, g) < 1e-9);

    Vec h = random_element(*sl2r, rng);
    Eigen::Matrix2d prod_m = sl2r_to_matrix(g) * sl2r_to_matrix(h);
    Vec prod_chart = sl2r->multiply(g, h);
    CHECK((sl2r_to_matrix(prod_chart) - prod_m).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("catalog profiles") {
  auto find = [&](const std::string& name) {
    for (const ChartPtr& c : catalog())
      if (c->name == name) return c;
    ChartPtr none;
    REQUIRE(none);
    return none;
  };
  CHECK(find("sl2r")->profile == DimensionProfile{3, 1, 0, 2});
  CHECK(find("r:3")->profile == DimensionProfile{3, 0, 0, 3});
  CHECK(find("heis3")->profile == DimensionProfile{3, 0, 0, 3});
  CHECK(find("aff")->profile == DimensionProfile{2, 0, 0, 2});
  CHECK(find("t:2")->profile == DimensionProfile{2, 2, 0, 0});
  CHECK(find("prod(r:1,heis3)")->profile == DimensionProfile{4, 0, 0, 4});
  for (const ChartPtr& c : catalog()) {
    CHECK(c->profile.n == c->profile.d - c->profile.m);
    CHECK(c->profile.h <= c->profile.n / 3);
  }
}

TEST_CASE("group name grammar") {
  CHECK(parse_group("r:3")->dim == 3);
  CHECK(parse_group("prod(r:1, heis3)")->dim == 4);
  CHECK(parse_group("prod(prod(r:1,r:1),t:1)")->dim == 3);
  CHECK_THROWS_AS(parse_group("so3"), std::invalid_argument);
  CHECK_THROWS_AS(parse_group("prod(r:1)"), std::invalid_argument);
  CHECK_THROWS_AS(parse_group("r:0"), std::invalid_argument);
}

TEST_CASE("domain error: affine density rejects the boundary") {
  ChartPtr aff = make_affine();
  Vec bad(2);
  bad << -1.0, 0.0;
  CHECK_THROWS_AS(haar_left_density_generic(*aff, bad), domain_error_chart);
}
