#ifndef BMLAB_CATALOG_HPP
#define BMLAB_CATALOG_HPP

#include <vector>

#include "bmlab/group.hpp"

namespace bmlab {

ChartPtr make_euclidean(int d);        // "r:d"
ChartPtr make_torus(int d);            // "t:d"
ChartPtr make_heisenberg();            // "heis3"
ChartPtr make_affine();                // "aff", a > 0 half-plane
ChartPtr make_sl2r();                  // "sl2r", Iwasawa chart (theta, t, u)
ChartPtr make_product(ChartPtr a, ChartPtr b);

/// Parse "r:3", "t:2", "heis3", "aff", "sl2r", "prod(e,e)" (nestable).
ChartPtr parse_group(const std::string& name);

/// The stock charts exercised by the test suites.
std::vector<ChartPtr> catalog();

// SL(2,R) chart <-> 2x2 matrix round trip.
Eigen::Matrix2d sl2r_to_matrix(const Vec& g);
Vec sl2r_from_matrix(const Eigen::Matrix2d& m);

}  // namespace bmlab

#endif
