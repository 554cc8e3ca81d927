#ifndef BMLAB_GRID_HPP
#define BMLAB_GRID_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "bmlab/group.hpp"

namespace bmlab {

constexpr int kMaxDim = 6;

/// Dyadic grid on a chart: anchored at the origin, cell side on axis k is
/// scale[k] / 2^level. Periodic axes carry scale == period so that 2^level
/// cells tile the axis exactly and indices wrap mod 2^level.
///
/// Cells are identified by signed per-axis indices packed into one 64-bit
/// key, floor(64/dim) bits per axis, axis 0 in the most significant field;
/// key order is then lexicographic in (i0, i1, ...). Out-of-range indices
/// are a hard error.
struct Grid {
  int dim = 0;
  int level = 0;
  std::array<double, kMaxDim> scale{};    // base unit per axis
  std::array<bool, kMaxDim> periodic{};   // wrap at 2^level cells

  static Grid of_chart(const GroupChart& chart, int level);
  static Grid of_chart_scaled(const GroupChart& chart, int level, const Vec& scale);

  bool operator==(const Grid&) const = default;

  double side(int k) const { return scale[k] / double(int64_t(1) << level); }
  double cell_volume() const {
    double v = 1.0;
    for (int k = 0; k < dim; ++k) v *= side(k);
    return v;
  }
  int64_t wrap_count() const { return int64_t(1) << level; }

  int bits_per_axis() const { return 64 / dim; }
  int64_t index_bias() const { return int64_t(1) << (bits_per_axis() - 1); }

  int64_t index_of(double x, int k) const;        // cell containing x
  int64_t wrap_index(int64_t i, int k) const;     // mod 2^level on periodic axes

  uint64_t pack(const int64_t* idx) const;
  void unpack(uint64_t key, int64_t* idx) const;

  uint64_t key_of_point(const Vec& x) const;
  Vec cell_center(uint64_t key) const;
  void cell_bounds(uint64_t key, Vec& lo, Vec& hi) const;

  /// Same grid, one level deeper (cells split into 2^dim children).
  Grid refined(int new_level) const;
};

}  // namespace bmlab

#endif
