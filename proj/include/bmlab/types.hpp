#ifndef BMLAB_TYPES_HPP
#define BMLAB_TYPES_HPP

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace bmlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A quantity together with an estimate of its numerical error.
struct Measured {
  double value = 0.0;
  double error = 0.0;
};

struct domain_error_chart : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double rel_diff(double a, double b) {
  double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace bmlab

#endif
