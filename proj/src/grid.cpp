#include "bmlab/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace bmlab {

Grid Grid::of_chart(const GroupChart& chart, int level) {
  Grid g;
  g.dim = chart.dim;
  g.level = level;
  if (chart.dim > kMaxDim) throw std::invalid_argument("grid: chart dimension too large");
  if (level < 0 || level > 40) throw std::invalid_argument("grid: level out of range");
  for (int k = 0; k < chart.dim; ++k) {
    g.scale[k] = chart.axes[k].base_scale;
    g.periodic[k] = chart.axes[k].period > 0.0;
  }
  return g;
}

Grid Grid::of_chart_scaled(const GroupChart& chart, int level, const Vec& scale) {
  Grid g = of_chart(chart, level);
  for (int k = 0; k < chart.dim; ++k) {
    if (g.periodic[k]) continue;  // periodic axes keep scale == period
    if (!(scale[k] > 0.0)) throw std::invalid_argument("grid: scale must be positive");
    g.scale[k] = scale[k];
  }
  return g;
}

int64_t Grid::index_of(double x, int k) const {
  double s = side(k);
  int64_t i = int64_t(std::floor(x / s));
  return wrap_index(i, k);
}

int64_t Grid::wrap_index(int64_t i, int k) const {
  if (!periodic[k]) return i;
  int64_t n = wrap_count();
  i %= n;
  if (i < 0) i += n;
  return i;
}

uint64_t Grid::pack(const int64_t* idx) const {
  const int b = bits_per_axis();
  const int64_t bias = index_bias();
  uint64_t key = 0;
  for (int k = 0; k < dim; ++k) {
    int64_t u = idx[k] + bias;
    if (u < 0 || u >= (int64_t(1) << b))
      throw std::overflow_error("grid: cell index out of packable range");
    key = (key << b) | uint64_t(u);
  }
  return key;
}

void Grid::unpack(uint64_t key, int64_t* idx) const {
  const int b = bits_per_axis();
  const int64_t bias = index_bias();
  const uint64_t mask = (b == 64) ? ~uint64_t(0) : ((uint64_t(1) << b) - 1);
  for (int k = dim - 1; k >= 0; --k) {
    idx[k] = int64_t(key & mask) - bias;
    key >>= b;
  }
}

uint64_t Grid::key_of_point(const Vec& x) const {
  int64_t idx[kMaxDim];
  for (int k = 0; k < dim; ++k) idx[k] = index_of(x[k], k);
  return pack(idx);
}

Vec Grid::cell_center(uint64_t key) const {
  int64_t idx[kMaxDim];
  unpack(key, idx);
  Vec c(dim);
  for (int k = 0; k < dim; ++k) c[k] = (double(idx[k]) + 0.5) * side(k);
  return c;
}

void Grid::cell_bounds(uint64_t key, Vec& lo, Vec& hi) const {
  int64_t idx[kMaxDim];
  unpack(key, idx);
  lo.resize(dim);
  hi.resize(dim);
  for (int k = 0; k < dim; ++k) {
    lo[k] = double(idx[k]) * side(k);
    hi[k] = double(idx[k] + 1) * side(k);
  }
}

Grid Grid::refined(int new_level) const {
  if (new_level < level) throw std::invalid_argument("grid: refine cannot coarsen");
  Grid g = *this;
  g.level = new_level;
  return g;
}

}  // namespace bmlab
