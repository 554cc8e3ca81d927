#ifndef BMLAB_BM_HPP
#define BMLAB_BM_HPP

#include <optional>
#include <string>

#include "bmlab/product.hpp"

namespace bmlab {

/// ||(x, y)||_{1/n} = (x^{1/n} + y^{1/n})^n, max(x, y) when n = 0.
double holder_norm(double x, double y, int n);

/// Left-hand side of the inequality at exponent n:
/// (nu_X/nu_XY)^{1/n} + (mu_Y/mu_XY)^{1/n}, max of the ratios when n = 0.
double bm_lhs(double nu_X, double nu_XY, double mu_Y, double mu_XY, int n);

/// Unimodular specialization (mu(X)/mu(XY))^{1/k} + (mu(Y)/mu(XY))^{1/k}.
double mccrudden_lhs(double mu_X, double mu_Y, double mu_XY, int exponent);

/// The exponent-1 functional.
double kemperman_lhs(double nu_X, double nu_XY, double mu_Y, double mu_XY);

struct BMReport {
  std::string group;
  int exponent_used = 0;
  Measured nu_X, mu_Y;
  Measured nu_XY_inner, nu_XY_outer, mu_XY_inner, mu_XY_outer;
  double lhs_conservative = 0.0;  // inner XY estimates: undercounting XY
  double lhs_optimistic = 0.0;    // outer XY cover
  double deficit = 0.0;           // 1 - lhs_conservative
  double allowance = 0.0;         // quadrature + 3 sigma Monte Carlo band
  bool pass = false;
  bool clipped = false;
  int level = 0;
  uint64_t samples = 0;
  uint64_t seed = 0;
  double pad_safety = 0.0;

  static std::string csv_header();
  std::string csv_row() const;
};

struct CheckOptions {
  std::optional<int> exponent;  // defaults to the chart's n - h
  int out_level = -1;           // defaults to max input level
  uint64_t samples = 200000;
  uint64_t seed = 1;
  ProductOptions product;
};

/// Full inequality check for one (X, Y) pair. PASS means the conservative
/// LHS does not exceed 1 + allowance.
BMReport check_bm(const CellSet& X, const CellSet& Y, const CheckOptions& opts = {});

}  // namespace bmlab

#endif
