#ifndef BMLAB_PRODUCT_HPP
#define BMLAB_PRODUCT_HPP

#include "bmlab/cellset.hpp"

namespace bmlab {

struct ProductOptions {
  // Subdivide box pairs until the enclosure spans at most this many output
  // cells per axis (deeper subdivision = tighter cover, more work).
  int tau_cells = 1;
  // Safety factor on the first-order Lipschitz bound used for smooth
  // (non-multilinear) group laws. Recorded in reports.
  double pad_safety = 1.5;
  // Escaping the chart domain clips cells with a warning; in strict mode it
  // throws instead.
  bool strict = false;
  int threads = 0;  // 0 = auto; only the inner sampler is threaded
};

/// Certified outer cover of {x*y : x in X, y in Y} on the output grid
/// (same per-axis scale, level out_level >= both input levels).
/// Multilinear laws use exact corner enclosures; smooth laws use the
/// center product padded by pad_safety * (|Jx| rx + |Jy| ry).
CellSet product_set(const CellSet& X, const CellSet& Y, int out_level,
                    const ProductOptions& opts = {});

/// Statistical inner estimate: a cell is kept once at least `min_hits`
/// sampled products land in it and each face neighbor was hit at least once.
CellSet product_set_inner(const CellSet& X, const CellSet& Y, int out_level,
                          uint64_t samples, uint64_t seed, int min_hits = 3,
                          int threads = 0);

/// Axis-aligned box of whole cells, indices inclusive on both ends.
struct CellBox {
  int64_t lo[kMaxDim];
  int64_t hi[kMaxDim];
};

/// Greedy decomposition of a cell set into maximal grid boxes.
std::vector<CellBox> decompose_boxes(const CellSet& s);

}  // namespace bmlab

#endif
