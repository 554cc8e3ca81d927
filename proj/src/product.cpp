#include "bmlab/product.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <thread>
#include <unordered_map>

namespace bmlab {

namespace {

// ---------------------------------------------------------------- bitmap --

struct BitWindow {
  int dim = 0;
  int64_t lo[kMaxDim] = {};
  int64_t n[kMaxDim] = {};
  bool periodic[kMaxDim] = {};
  int64_t stride[kMaxDim] = {};
  std::vector<uint64_t> words;
  bool clipped = false;  // marks fell outside a non-periodic window edge

  void allocate() {
    int64_t total = 1;
    for (int k = 0; k < dim; ++k) {
      if (n[k] < 1) n[k] = 1;
      total *= n[k];
      if (total > (int64_t(1) << 33))
        throw std::runtime_error("product: output window too large; coarsen the grid");
    }
    int64_t s = 1;
    for (int k = dim - 1; k >= 0; --k) {
      stride[k] = s;
      s *= n[k];
    }
    words.assign(size_t((total + 63) / 64), 0);
  }

  bool index_in(const int64_t* idx) const {
    for (int k = 0; k < dim; ++k)
      if (idx[k] < lo[k] || idx[k] >= lo[k] + n[k]) return false;
    return true;
  }

  int64_t linear(const int64_t* idx) const {
    int64_t p = 0;
    for (int k = 0; k < dim; ++k) p += (idx[k] - lo[k]) * stride[k];
    return p;
  }

  void set_bit(int64_t p) { words[size_t(p >> 6)] |= uint64_t(1) << (p & 63); }
  bool test_bit(int64_t p) const {
    return (words[size_t(p >> 6)] >> (p & 63)) & 1;
  }
};

// Index range [a, b] (inclusive) along one window axis, split into wrapped
// contiguous pieces; clamps non-periodic axes and reports clipping.
struct AxisRange {
  int64_t start[2];
  int64_t len[2];
  int pieces = 0;
};

AxisRange axis_range(BitWindow& w, int k, int64_t a, int64_t b, int64_t wrap_n) {
  AxisRange r;
  if (w.periodic[k]) {
    if (b - a + 1 >= wrap_n) {
      r.pieces = 1;
      r.start[0] = 0;
      r.len[0] = wrap_n;
      return r;
    }
    int64_t a0 = ((a % wrap_n) + wrap_n) % wrap_n;
    int64_t b0 = ((b % wrap_n) + wrap_n) % wrap_n;
    if (a0 <= b0) {
      r.pieces = 1;
      r.start[0] = a0;
      r.len[0] = b0 - a0 + 1;
    } else {
      r.pieces = 2;
      r.start[0] = 0;
      r.len[0] = b0 + 1;
      r.start[1] = a0;
      r.len[1] = wrap_n - a0;
    }
    return r;
  }
  int64_t cl = std::max(a, w.lo[k]);
  int64_t ch = std::min(b, w.lo[k] + w.n[k] - 1);
  if (cl > a || ch < b) w.clipped = true;
  if (cl > ch) {
    r.pieces = 0;
    return r;
  }
  r.pieces = 1;
  r.start[0] = cl;
  r.len[0] = ch - cl + 1;
  return r;
}

// Visit every cell of the index box [a, b] (wrapped/clamped); op takes the
// linear bit position of a contiguous run along the last axis and returns
// false to abort the whole traversal.
template <class Op>
void for_box_bits(BitWindow& w, const int64_t* a, const int64_t* b, int64_t wrap_n,
                  Op&& op) {
  const int d = w.dim;
  AxisRange ranges[kMaxDim];
  for (int k = 0; k < d; ++k) {
    ranges[k] = axis_range(w, k, a[k], b[k], wrap_n);
    if (ranges[k].pieces == 0) return;
  }
  bool abort = false;
  std::function<void(int, int64_t)> rec = [&](int k, int64_t base) {
    if (abort) return;
    const AxisRange& r = ranges[k];
    for (int piece = 0; piece < r.pieces && !abort; ++piece) {
      if (k == d - 1) {
        int64_t p0 = base + (r.start[piece] - w.lo[k]) * w.stride[k];
        if (!op(p0, r.len[piece])) abort = true;
      } else {
        for (int64_t i = 0; i < r.len[piece] && !abort; ++i) {
          rec(k + 1, base + (r.start[piece] + i - w.lo[k]) * w.stride[k]);
        }
      }
    }
  };
  rec(0, 0);
}

void mark_box(BitWindow& w, const int64_t* a, const int64_t* b, int64_t wrap_n) {
  for_box_bits(w, a, b, wrap_n, [&](int64_t p0, int64_t len) {
    int64_t p = p0;
    int64_t end = p0 + len;
    // stride of last axis is 1: fill words
    while (p < end && (p & 63)) w.set_bit(p++);
    while (end - p >= 64) {
      w.words[size_t(p >> 6)] = ~uint64_t(0);
      p += 64;
    }
    while (p < end) w.set_bit(p++);
    return true;
  });
}

bool box_saturated(BitWindow& w, const int64_t* a, const int64_t* b, int64_t wrap_n) {
  bool full = true;
  for_box_bits(w, a, b, wrap_n, [&](int64_t p0, int64_t len) {
    int64_t p = p0;
    int64_t end = p0 + len;
    while (p < end && (p & 63)) {
      if (!w.test_bit(p++)) {
        full = false;
        return false;
      }
    }
    while (end - p >= 64) {
      if (w.words[size_t(p >> 6)] != ~uint64_t(0)) {
        full = false;
        return false;
      }
      p += 64;
    }
    while (p < end) {
      if (!w.test_bit(p++)) {
        full = false;
        return false;
      }
    }
    return true;
  });
  return full;
}

// ---------------------------------------------------------- box geometry --

struct DomainBox {
  // Continuous coordinate box; degenerate axes (lo == hi) are points.
  double lo[kMaxDim];
  double hi[kMaxDim];
  int dim;
  double center(int k) const { return 0.5 * (lo[k] + hi[k]); }
  double half(int k) const { return 0.5 * (hi[k] - lo[k]); }
};

struct Enclosure {
  double lo[kMaxDim];
  double hi[kMaxDim];
};

// Exact enclosure for multilinear laws: bounding box of corner products.
Enclosure enclose_corners(const GroupChart& chart, const DomainBox& x,
                          const DomainBox& y) {
  const int d = chart.dim;
  Enclosure e;
  for (int k = 0; k < d; ++k) {
    e.lo[k] = std::numeric_limits<double>::infinity();
    e.hi[k] = -std::numeric_limits<double>::infinity();
  }
  Vec xv(d), yv(d);
  for (int cx = 0; cx < (1 << d); ++cx) {
    for (int k = 0; k < d; ++k) xv[k] = (cx >> k) & 1 ? x.hi[k] : x.lo[k];
    for (int cy = 0; cy < (1 << d); ++cy) {
      for (int k = 0; k < d; ++k) yv[k] = (cy >> k) & 1 ? y.hi[k] : y.lo[k];
      Vec p = chart.multiply_raw(xv, yv);
      for (int k = 0; k < d; ++k) {
        e.lo[k] = std::min(e.lo[k], p[k]);
        e.hi[k] = std::max(e.hi[k], p[k]);
      }
    }
  }
  return e;
}

// First-order enclosure for smooth laws: center product padded by
// safety * (|Jx| rx + |Jy| ry). Periodic output axes are kept as an arc
// around the center (unwrapped interval; marking wraps it).
struct PadEnclosure {
  Enclosure e;
  Mat Jx, Jb;
};

PadEnclosure enclose_padded(const GroupChart& chart, const DomainBox& x,
                            const DomainBox& y, double safety) {
  const int d = chart.dim;
  Vec xc(d), yc(d);
  for (int k = 0; k < d; ++k) {
    xc[k] = x.center(k);
    yc[k] = y.center(k);
  }
  PadEnclosure pe;
  product_jacobians(chart, xc, yc, pe.Jx, pe.Jb);
  Vec p = chart.multiply(xc, yc);
  for (int k = 0; k < d; ++k) {
    double pad = 0.0;
    for (int j = 0; j < d; ++j) {
      pad += std::abs(pe.Jx(k, j)) * x.half(j);
      pad += std::abs(pe.Jb(k, j)) * y.half(j);
    }
    pad *= safety;
    pe.e.lo[k] = p[k] - pad;
    pe.e.hi[k] = p[k] + pad;
  }
  return pe;
}

// ------------------------------------------------------ recursion engine --

struct KernelContext {
  const GroupChart* chart;
  Grid out;
  BitWindow* bits;
  double pad_safety;
  int tau;
  bool corners;           // multilinear: corner enclosures, else padded
  bool project_axis0;     // quotient mode: ignore axis 0 of the output
  int64_t wrap_n;
  uint64_t nodes = 0;
};

// Enclosure -> inclusive cell index range per output axis.
void enclosure_to_cells(const KernelContext& ctx, const Enclosure& e, int64_t* a,
                        int64_t* b) {
  const int d = ctx.chart->dim;
  for (int k = 0; k < d; ++k) {
    double s = ctx.out.side(k);
    a[k] = int64_t(std::floor(e.lo[k] / s));
    b[k] = int64_t(std::floor(e.hi[k] / s));
  }
}

// Clip an enclosure to the chart domain; returns false if empty. Sets the
// clip flag when anything was cut away.
bool clip_to_domain(const GroupChart& chart, Enclosure& e, bool& clip_flag) {
  for (int k = 0; k < chart.dim; ++k) {
    const Axis& ax = chart.axes[k];
    if (ax.period > 0.0) continue;
    if (e.lo[k] < ax.lo) {
      e.lo[k] = ax.lo;
      clip_flag = true;
    }
    if (e.hi[k] > ax.hi) {
      e.hi[k] = ax.hi;
      clip_flag = true;
    }
    if (e.lo[k] > e.hi[k]) return false;
  }
  return true;
}

struct SplitChoice {
  int which = -1;  // 0 = x box, 1 = y box
  int axis = -1;
};

// The recursion: subdivide the (x, y) box pair until the image enclosure is
// at most tau cells per considered axis, then mark it. Subtrees whose
// enclosure is already fully marked are pruned, which is what keeps solid
// interiors cheap. Sequential by design: the marked state feeds back into
// pruning, and a fixed traversal order keeps results deterministic.
void recurse(KernelContext& ctx, DomainBox x, DomainBox y, bool& clip_flag,
             const Grid& gx, const Grid& gy) {
  struct Item {
    DomainBox x, y;
  };
  std::vector<Item> stack;
  stack.push_back({x, y});
  const int d = ctx.chart->dim;
  const int k0 = ctx.project_axis0 ? 1 : 0;

  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    ++ctx.nodes;

    Enclosure e;
    Mat Jx, Jb;
    if (ctx.corners) {
      e = enclose_corners(*ctx.chart, it.x, it.y);
    } else {
      PadEnclosure pe = enclose_padded(*ctx.chart, it.x, it.y, ctx.pad_safety);
      e = pe.e;
      Jx = std::move(pe.Jx);
      Jb = std::move(pe.Jb);
    }
    if (!clip_to_domain(*ctx.chart, e, clip_flag)) continue;

    int64_t a[kMaxDim], b[kMaxDim];
    enclosure_to_cells(ctx, e, a, b);

    bool small_enough = true;
    for (int k = k0; k < d; ++k)
      if (b[k] - a[k] + 1 > ctx.tau) small_enough = false;

    // Can any axis still be split? Boxes at single-cell granularity stop.
    bool splittable = false;
    for (int k = 0; k < d; ++k) {
      if (it.x.hi[k] - it.x.lo[k] > gx.side(k) * 1.5) splittable = true;
      if (it.y.hi[k] - it.y.lo[k] > gy.side(k) * 1.5) splittable = true;
    }

    if (small_enough || !splittable) {
      mark_box(*ctx.bits, a + k0, b + k0, ctx.wrap_n);
      continue;
    }
    if (box_saturated(*ctx.bits, a + k0, b + k0, ctx.wrap_n)) continue;

    // Split the input axis with the largest image footprint, measured in
    // output cells. Multilinear: corner spread; smooth: Jacobian column.
    SplitChoice best;
    double best_score = -1.0;
    for (int which = 0; which < 2; ++which) {
      const DomainBox& db = which == 0 ? it.x : it.y;
      const Grid& g = which == 0 ? gx : gy;
      for (int j = 0; j < d; ++j) {
        if (db.hi[j] - db.lo[j] <= g.side(j) * 1.5) continue;  // single cell
        double score = 0.0;
        if (ctx.corners) {
          // probe: central difference of the law along axis j
          Vec xv(d), yv(d);
          for (int k = 0; k < d; ++k) {
            xv[k] = it.x.center(k);
            yv[k] = it.y.center(k);
          }
          Vec lo = xv, hi = xv, lo2 = yv, hi2 = yv;
          if (which == 0) {
            lo[j] = db.lo[j];
            hi[j] = db.hi[j];
          } else {
            lo2[j] = db.lo[j];
            hi2[j] = db.hi[j];
          }
          Vec plo = ctx.chart->multiply_raw(which == 0 ? lo : xv, which == 0 ? yv : lo2);
          Vec phi = ctx.chart->multiply_raw(which == 0 ? hi : xv, which == 0 ? yv : hi2);
          for (int k = k0; k < d; ++k)
            score = std::max(score, std::abs(phi[k] - plo[k]) / ctx.out.side(k));
        } else {
          const Mat& J = which == 0 ? Jx : Jb;
          for (int k = k0; k < d; ++k)
            score = std::max(score,
                             std::abs(J(k, j)) * (db.hi[j] - db.lo[j]) / ctx.out.side(k));
        }
        if (score > best_score) {
          best_score = score;
          best = {which, j};
        }
      }
    }
    if (best.which < 0) {  // nothing splittable contributed; mark and go on
      mark_box(*ctx.bits, a + k0, b + k0, ctx.wrap_n);
      continue;
    }

    DomainBox& db = best.which == 0 ? it.x : it.y;
    const Grid& g = best.which == 0 ? gx : gy;
    // split at a cell boundary so subboxes stay cell aligned
    double s = g.side(best.axis);
    double mid = 0.5 * (db.lo[best.axis] + db.hi[best.axis]);
    mid = std::round(mid / s) * s;
    if (mid <= db.lo[best.axis] || mid >= db.hi[best.axis])
      mid = db.lo[best.axis] + s * std::floor((db.hi[best.axis] - db.lo[best.axis]) / (2 * s));
    if (mid <= db.lo[best.axis]) mid = db.lo[best.axis] + s;

    Item lo_item = it, hi_item = it;
    (best.which == 0 ? lo_item.x : lo_item.y).hi[best.axis] = mid;
    (best.which == 0 ? hi_item.x : hi_item.y).lo[best.axis] = mid;
    stack.push_back(hi_item);
    stack.push_back(lo_item);
  }
}

DomainBox to_domain_box(const CellBox& cb, const Grid& g) {
  DomainBox db;
  db.dim = g.dim;
  for (int k = 0; k < g.dim; ++k) {
    db.lo[k] = double(cb.lo[k]) * g.side(k);
    db.hi[k] = double(cb.hi[k] + 1) * g.side(k);
  }
  return db;
}

}  // namespace

std::vector<CellBox> decompose_boxes(const CellSet& s) {
  const Grid& g = s.grid();
  const int d = g.dim;
  std::vector<CellBox> boxes;
  // runs along the last axis (keys are sorted lexicographically)
  int64_t idx[kMaxDim], prev[kMaxDim];
  bool open = false;
  CellBox cur{};
  for (uint64_t key : s.cells()) {
    g.unpack(key, idx);
    bool extends = open;
    if (open) {
      for (int k = 0; k + 1 < d; ++k)
        if (idx[k] != prev[k]) extends = false;
      if (extends && idx[d - 1] != prev[d - 1] + 1) extends = false;
    }
    if (extends) {
      cur.hi[d - 1] = idx[d - 1];
    } else {
      if (open) boxes.push_back(cur);
      for (int k = 0; k < d; ++k) cur.lo[k] = cur.hi[k] = idx[k];
      open = true;
    }
    std::memcpy(prev, idx, sizeof(prev));
  }
  if (open) boxes.push_back(cur);

  // merge along the remaining axes, innermost outward
  for (int axis = d - 2; axis >= 0; --axis) {
    std::sort(boxes.begin(), boxes.end(), [&](const CellBox& a, const CellBox& b) {
      for (int k = 0; k < d; ++k) {
        if (k == axis) continue;
        if (a.lo[k] != b.lo[k]) return a.lo[k] < b.lo[k];
        if (a.hi[k] != b.hi[k]) return a.hi[k] < b.hi[k];
      }
      return a.lo[axis] < b.lo[axis];
    });
    std::vector<CellBox> merged;
    for (const CellBox& b : boxes) {
      bool joined = false;
      if (!merged.empty()) {
        CellBox& m = merged.back();
        bool same = true;
        for (int k = 0; k < d; ++k) {
          if (k == axis) continue;
          if (m.lo[k] != b.lo[k] || m.hi[k] != b.hi[k]) same = false;
        }
        if (same && m.hi[axis] + 1 == b.lo[axis]) {
          m.hi[axis] = b.hi[axis];
          joined = true;
        }
      }
      if (!joined) merged.push_back(b);
    }
    boxes.swap(merged);
  }
  return boxes;
}

CellSet product_set(const CellSet& X, const CellSet& Y, int out_level,
                    const ProductOptions& opts) {
  if (X.empty() || Y.empty())
    return CellSet(X.chart(), X.grid().refined(out_level), SetRole::outer, {});
  const GroupChart& chart = *X.chart();
  if (chart.name != Y.chart()->name)
    throw std::invalid_argument("product_set: charts differ");
  if (X.grid().scale != Y.grid().scale)
    throw std::invalid_argument("product_set: grid scales differ");
  if (out_level < std::max(X.grid().level, Y.grid().level))
    throw std::invalid_argument("product_set: out_level below input levels");

  const int d = chart.dim;
  Grid out = X.grid().refined(out_level);
  std::vector<CellBox> bx = decompose_boxes(X);
  std::vector<CellBox> by = decompose_boxes(Y);
  const Grid& gx = X.grid();
  const Grid& gy = Y.grid();

  // Quotient mode: X invariant under the left shift axis (every box spans
  // the whole axis). The product is then  full-axis x image of the slice
  // products, so axis 0 is dropped from the search and restored at the end.
  bool quotient = false;
  if (chart.left_shift_axis == 0 && gx.periodic[0]) {
    quotient = !bx.empty();
    for (const CellBox& b : bx)
      if (!(b.lo[0] == 0 && b.hi[0] == gx.wrap_count() - 1)) quotient = false;
  }

  KernelContext ctx;
  ctx.chart = &chart;
  ctx.out = out;
  ctx.pad_safety = opts.pad_safety;
  ctx.tau = std::max(1, opts.tau_cells);
  ctx.corners = chart.law_multilinear;
  ctx.project_axis0 = quotient;
  ctx.wrap_n = out.wrap_count();

  // window: bounding boxes of the inputs, enclosed and padded once
  BitWindow bits;
  const int k0 = quotient ? 1 : 0;
  bits.dim = d - k0;
  bool dummy_clip = false;
  {
    DomainBox xall, yall;
    xall.dim = yall.dim = d;
    for (int k = 0; k < d; ++k) {
      xall.lo[k] = std::numeric_limits<double>::infinity();
      xall.hi[k] = -std::numeric_limits<double>::infinity();
      yall.lo[k] = xall.lo[k];
      yall.hi[k] = xall.hi[k];
    }
    for (const CellBox& b : bx) {
      DomainBox db = to_domain_box(b, gx);
      for (int k = 0; k < d; ++k) {
        xall.lo[k] = std::min(xall.lo[k], db.lo[k]);
        xall.hi[k] = std::max(xall.hi[k], db.hi[k]);
      }
    }
    for (const CellBox& b : by) {
      DomainBox db = to_domain_box(b, gy);
      for (int k = 0; k < d; ++k) {
        yall.lo[k] = std::min(yall.lo[k], db.lo[k]);
        yall.hi[k] = std::max(yall.hi[k], db.hi[k]);
      }
    }
    if (quotient) xall.lo[0] = xall.hi[0] = 0.0;
    Enclosure e;
    if (ctx.corners) {
      e = enclose_corners(chart, xall, yall);
    } else {
      e = enclose_padded(chart, xall, yall, opts.pad_safety).e;
    }
    clip_to_domain(chart, e, dummy_clip);
    int64_t a[kMaxDim], b2[kMaxDim];
    enclosure_to_cells(ctx, e, a, b2);
    const int64_t margin = 16;
    for (int k = k0; k < d; ++k) {
      int w = k - k0;
      bits.periodic[w] = out.periodic[k];
      if (out.periodic[k]) {
        bits.lo[w] = 0;
        bits.n[w] = out.wrap_count();
      } else {
        bits.lo[w] = a[k] - margin;
        bits.n[w] = (b2[k] - a[k] + 1) + 2 * margin;
      }
    }
    bits.allocate();
  }
  ctx.bits = &bits;

  bool clip_flag = false;
  for (const CellBox& xb : bx) {
    for (const CellBox& yb : by) {
      DomainBox dx = to_domain_box(xb, gx);
      if (quotient) dx.lo[0] = dx.hi[0] = 0.0;
      recurse(ctx, dx, to_domain_box(yb, gy), clip_flag, gx, gy);
    }
  }
  if (bits.clipped)
    throw std::runtime_error("product_set: enclosure escaped the output window");
  if (clip_flag && opts.strict)
    throw domain_error_chart("product_set: product escaped chart domain (strict)");

  // harvest marked cells (linear order is lexicographic, so keys are sorted)
  std::vector<uint64_t> keys;
  int64_t idx[kMaxDim];
  int64_t widx[kMaxDim];
  std::function<void(int)> walk = [&](int w) {
    if (w == bits.dim) {
      if (!bits.test_bit(bits.linear(widx))) return;
      if (quotient) {
        for (int k = 1; k < d; ++k) idx[k] = out.wrap_index(widx[k - 1], k);
        for (int64_t th = 0; th < out.wrap_count(); ++th) {
          idx[0] = th;
          keys.push_back(out.pack(idx));
        }
      } else {
        for (int k = 0; k < d; ++k) idx[k] = out.wrap_index(widx[k], k);
        keys.push_back(out.pack(idx));
      }
      return;
    }
    for (int64_t i = bits.lo[w]; i < bits.lo[w] + bits.n[w]; ++i) {
      widx[w] = i;
      walk(w + 1);
    }
  };
  walk(0);
  return CellSet(X.chart(), out, SetRole::outer, std::move(keys), clip_flag);
}

CellSet product_set_inner(const CellSet& X, const CellSet& Y, int out_level,
                          uint64_t samples, uint64_t seed, int min_hits,
                          int threads) {
  if (X.empty() || Y.empty())
    return CellSet(X.chart(), X.grid().refined(out_level), SetRole::inner, {});
  if (X.chart()->name != Y.chart()->name)
    throw std::invalid_argument("product_set_inner: charts differ");
  if (samples < 1) throw std::invalid_argument("product_set_inner: samples >= 1");
  const GroupChart& chart = *X.chart();
  const Grid out = X.grid().refined(out_level);
  const int d = chart.dim;

  // Thread count changes which rng stream draws which sample, so the default
  // is fixed rather than hardware dependent; reports stay reproducible.
  if (threads < 1) threads = 1;

  using Counts = std::unordered_map<uint64_t, uint32_t>;
  std::vector<Counts> partial;
  partial.resize(size_t(threads));
  auto worker = [&](int tid) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + uint64_t(tid) + 1);
    auto u01 = [&]() { return double(rng() >> 11) * 0x1.0p-53; };
    Counts& counts = partial[size_t(tid)];
    uint64_t n = samples / uint64_t(threads) + (tid < int(samples % uint64_t(threads)) ? 1 : 0);
    Vec x(d), y(d), lo(d), hi(d);
    int64_t idx[kMaxDim];
    const int64_t bias = out.index_bias();
    for (uint64_t i = 0; i < n; ++i) {
      uint64_t kx = X.cells()[size_t(rng() % X.size())];
      uint64_t ky = Y.cells()[size_t(rng() % Y.size())];
      X.grid().cell_bounds(kx, lo, hi);
      for (int k = 0; k < d; ++k) x[k] = lo[k] + u01() * (hi[k] - lo[k]);
      Y.grid().cell_bounds(ky, lo, hi);
      for (int k = 0; k < d; ++k) y[k] = lo[k] + u01() * (hi[k] - lo[k]);
      Vec p = chart.multiply(x, y);
      bool ok = true;
      for (int k = 0; k < d; ++k) {
        idx[k] = out.index_of(p[k], k);
        if (idx[k] < -bias || idx[k] >= bias) ok = false;  // unpackable: drop
      }
      if (ok) ++counts[out.pack(idx)];
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  Counts counts = std::move(partial[0]);
  for (int t = 1; t < threads; ++t)
    for (auto [k, v] : partial[size_t(t)]) counts[k] += v;

  std::vector<uint64_t> keys;
  int64_t idx[kMaxDim], nb[kMaxDim];
  for (const auto& [key, hits] : counts) {
    if (hits < uint32_t(min_hits)) continue;
    out.unpack(key, idx);
    bool corroborated = true;
    for (int k = 0; k < d && corroborated; ++k) {
      for (int dir = -1; dir <= 1 && corroborated; dir += 2) {
        std::memcpy(nb, idx, sizeof(nb));
        nb[k] = idx[k] + dir;
        if (out.periodic[k]) nb[k] = out.wrap_index(nb[k], k);
        auto it = counts.find(out.pack(nb));
        if (it == counts.end() || it->second == 0) corroborated = false;
      }
    }
    if (corroborated) keys.push_back(key);
  }
  return CellSet(X.chart(), out, SetRole::inner, std::move(keys));
}

}  // namespace bmlab
