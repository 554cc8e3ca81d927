#include "bmlab/cellset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "bmlab/catalog.hpp"

namespace bmlab {

const char* to_string(SetRole r) {
  switch (r) {
    case SetRole::exact: return "exact";
    case SetRole::outer: return "outer";
    case SetRole::inner: return "inner";
  }
  return "?";
}

CellSet::CellSet(ChartPtr chart, Grid grid, SetRole role, std::vector<uint64_t> cells,
                 bool clipped)
    : chart_(std::move(chart)),
      grid_(grid),
      role_(role),
      cells_(std::move(cells)),
      clipped_(clipped) {
  std::sort(cells_.begin(), cells_.end());
  cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
}

bool CellSet::contains(uint64_t key) const {
  return std::binary_search(cells_.begin(), cells_.end(), key);
}

CellSet from_box(ChartPtr chart, const Vec& lo, const Vec& hi, int level) {
  Grid g = Grid::of_chart(*chart, level);
  return from_box(std::move(chart), lo, hi, g);
}

CellSet from_box(ChartPtr chart, const Vec& lo, const Vec& hi, const Grid& grid) {
  const int d = chart->dim;
  if (lo.size() != d || hi.size() != d) throw std::invalid_argument("from_box: bad box size");
  for (int k = 0; k < d; ++k)
    if (!(lo[k] < hi[k])) throw std::invalid_argument("from_box: requires lo < hi");
  if (!chart->in_domain(lo, 1e-12) || !chart->in_domain(chart->wrap(hi), 1e-12))
    throw domain_error_chart("from_box: box outside chart domain");

  bool aligned = true;
  int64_t first[kMaxDim], count[kMaxDim];
  for (int k = 0; k < d; ++k) {
    double s = grid.side(k);
    double flo = lo[k] / s, fhi = hi[k] / s;
    double rlo = std::round(flo), rhi = std::round(fhi);
    bool ax_aligned = std::abs(flo - rlo) < 1e-9 && std::abs(fhi - rhi) < 1e-9;
    aligned = aligned && ax_aligned;
    int64_t i0 = ax_aligned ? int64_t(rlo) : int64_t(std::floor(flo));
    int64_t i1 = ax_aligned ? int64_t(rhi) : int64_t(std::ceil(fhi));
    if (grid.periodic[k] && i1 - i0 >= grid.wrap_count()) {
      i0 = 0;
      i1 = grid.wrap_count();
    }
    first[k] = i0;
    count[k] = i1 - i0;
  }
  std::vector<uint64_t> keys;
  uint64_t total = 1;
  for (int k = 0; k < d; ++k) total *= uint64_t(count[k]);
  keys.reserve(total);
  int64_t idx[kMaxDim];
  std::function<void(int)> rec = [&](int k) {
    if (k == d) {
      int64_t w[kMaxDim];
      for (int j = 0; j < d; ++j) w[j] = grid.wrap_index(idx[j], j);
      keys.push_back(grid.pack(w));
      return;
    }
    for (int64_t i = first[k]; i < first[k] + count[k]; ++i) {
      idx[k] = i;
      rec(k + 1);
    }
  };
  rec(0);
  return CellSet(std::move(chart), grid, aligned ? SetRole::exact : SetRole::outer,
                 std::move(keys));
}

namespace {

double density_at(const GroupChart& chart, const Vec& g, Side side) {
  return side == Side::left ? haar_left_density(chart, g) : haar_right_density(chart, g);
}

}  // namespace

Measured measure(const CellSet& s, Side side) {
  if (s.empty()) return {0.0, 0.0};
  const GroupChart& chart = *s.chart();
  const Grid& g = s.grid();
  const int d = g.dim;
  const double vol = g.cell_volume();
  const double child_vol = vol / double(1 << d);
  double coarse = 0.0, fine = 0.0;
  Vec center(d), child(d);
  int64_t idx[kMaxDim];
  for (uint64_t key : s.cells()) {
    g.unpack(key, idx);
    for (int k = 0; k < d; ++k) center[k] = (double(idx[k]) + 0.5) * g.side(k);
    coarse += density_at(chart, center, side) * vol;
    for (int corner = 0; corner < (1 << d); ++corner) {
      for (int k = 0; k < d; ++k) {
        double off = (corner >> k) & 1 ? 0.25 : -0.25;
        child[k] = center[k] + off * g.side(k);
      }
      fine += density_at(chart, child, side) * child_vol;
    }
  }
  return {fine, std::abs(fine - coarse) + 1e-14 * std::abs(fine)};
}

CellSet set_union(const CellSet& a, const CellSet& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.chart()->name != b.chart()->name)
    throw std::invalid_argument("union: charts differ");
  const CellSet* x = &a;
  const CellSet* y = &b;
  CellSet ra, rb;
  if (!a.same_grid(b)) {
    Grid ga = a.grid(), gb = b.grid();
    if (ga.scale != gb.scale) throw std::invalid_argument("union: grid scales differ");
    if (ga.level < gb.level) {
      ra = refine(a, gb.level);
      x = &ra;
    } else {
      rb = refine(b, ga.level);
      y = &rb;
    }
  }
  std::vector<uint64_t> merged;
  merged.reserve(x->size() + y->size());
  std::merge(x->cells().begin(), x->cells().end(), y->cells().begin(), y->cells().end(),
             std::back_inserter(merged));
  SetRole role = std::max(a.role(), b.role());  // exact < outer < inner: weakest wins
  return CellSet(a.chart(), x->grid(), role, std::move(merged),
                 a.clipped() || b.clipped());
}

CellSet refine(const CellSet& s, int new_level) {
  const Grid& g = s.grid();
  if (new_level == g.level) return s;
  Grid fine = g.refined(new_level);
  const int d = g.dim;
  const int shift = new_level - g.level;
  const int64_t per_axis = int64_t(1) << shift;
  std::vector<uint64_t> keys;
  keys.reserve(s.size() << (d * shift));
  int64_t idx[kMaxDim], child[kMaxDim];
  for (uint64_t key : s.cells()) {
    g.unpack(key, idx);
    std::function<void(int)> rec = [&](int k) {
      if (k == d) {
        keys.push_back(fine.pack(child));
        return;
      }
      for (int64_t i = 0; i < per_axis; ++i) {
        child[k] = idx[k] * per_axis + i;
        rec(k + 1);
      }
    };
    rec(0);
  }
  return CellSet(s.chart(), fine, s.role(), std::move(keys), s.clipped());
}

bool subset_of(const CellSet& a, const CellSet& b) {
  if (a.empty()) return true;
  const CellSet* x = &a;
  CellSet ra;
  if (!a.same_grid(b)) {
    if (a.grid().scale != b.grid().scale || a.grid().level > b.grid().level) return false;
    ra = refine(a, b.grid().level);
    x = &ra;
  }
  return std::includes(b.cells().begin(), b.cells().end(), x->cells().begin(),
                       x->cells().end());
}

double boundary_fraction(const CellSet& s, Side side) {
  if (s.empty()) return 0.0;
  const Grid& g = s.grid();
  const int d = g.dim;
  Measured total = measure(s, side);
  if (total.value <= 0.0) return 0.0;
  double bnd = 0.0;
  const double vol = g.cell_volume();
  int64_t idx[kMaxDim], nb[kMaxDim];
  const GroupChart& chart = *s.chart();
  for (uint64_t key : s.cells()) {
    g.unpack(key, idx);
    bool interior = true;
    for (int k = 0; k < d && interior; ++k) {
      for (int dir = -1; dir <= 1 && interior; dir += 2) {
        std::memcpy(nb, idx, sizeof(nb));
        nb[k] = g.wrap_index(idx[k] + dir, k);
        if (!s.contains(g.pack(nb))) interior = false;
      }
    }
    if (!interior) {
      Vec c(d);
      for (int k = 0; k < d; ++k) c[k] = (double(idx[k]) + 0.5) * g.side(k);
      bnd += density_at(chart, c, side) * vol;
    }
  }
  return bnd / total.value;
}

// --- serialization -------------------------------------------------------

namespace {
constexpr uint32_t kMagic = 0x424d4353;  // "BMCS"

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

void write_binary(const CellSet& s, std::ostream& os) {
  put<uint32_t>(os, kMagic);
  put<uint32_t>(os, 1);  // version
  put<uint32_t>(os, uint32_t(s.chart()->name.size()));
  os.write(s.chart()->name.data(), std::streamsize(s.chart()->name.size()));
  put<uint32_t>(os, uint32_t(s.grid().dim));
  put<int32_t>(os, s.grid().level);
  put<uint8_t>(os, uint8_t(s.role()));
  put<uint8_t>(os, uint8_t(s.clipped()));
  for (int k = 0; k < s.grid().dim; ++k) put<double>(os, s.grid().scale[k]);
  put<uint64_t>(os, s.size());
  for (uint64_t key : s.cells()) put<uint64_t>(os, key);
}

CellSet read_binary(std::istream& is, const std::vector<ChartPtr>& known_charts) {
  if (get<uint32_t>(is) != kMagic) throw std::runtime_error("cellset: bad magic");
  if (get<uint32_t>(is) != 1) throw std::runtime_error("cellset: bad version");
  uint32_t nlen = get<uint32_t>(is);
  std::string name(nlen, '\0');
  is.read(name.data(), nlen);
  uint32_t dim = get<uint32_t>(is);
  int32_t level = get<int32_t>(is);
  uint8_t role = get<uint8_t>(is);
  uint8_t clipped = get<uint8_t>(is);
  ChartPtr chart;
  for (const auto& c : known_charts)
    if (c->name == name) chart = c;
  if (!chart) chart = parse_group(name);
  Grid g = Grid::of_chart(*chart, level);
  for (uint32_t k = 0; k < dim; ++k) g.scale[k] = get<double>(is);
  uint64_t n = get<uint64_t>(is);
  std::vector<uint64_t> cells(n);
  for (uint64_t i = 0; i < n; ++i) cells[i] = get<uint64_t>(is);
  return CellSet(chart, g, SetRole(role), std::move(cells), clipped != 0);
}

std::string to_json(const CellSet& s) {
  nlohmann::ordered_json j;
  j["chart"] = s.chart()->name;
  j["level"] = s.grid().level;
  j["role"] = to_string(s.role());
  j["scale"] = std::vector<double>(s.grid().scale.begin(),
                                   s.grid().scale.begin() + s.grid().dim);
  auto cells = nlohmann::json::array();
  int64_t idx[kMaxDim];
  for (uint64_t key : s.cells()) {
    s.grid().unpack(key, idx);
    cells.push_back(std::vector<int64_t>(idx, idx + s.grid().dim));
  }
  j["cells"] = std::move(cells);
  return j.dump();
}

}  // namespace bmlab
