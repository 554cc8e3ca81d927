#ifndef BMLAB_CELLSET_HPP
#define BMLAB_CELLSET_HPP

#include <iosfwd>
#include <vector>

#include "bmlab/grid.hpp"

namespace bmlab {

enum class SetRole : uint8_t { exact = 0, outer = 1, inner = 2 };
enum class Side : uint8_t { left, right };

const char* to_string(SetRole r);

/// A compact set as a union of dyadic cells. Cell keys are kept sorted and
/// unique; the value is immutable after construction.
class CellSet {
 public:
  CellSet() = default;
  CellSet(ChartPtr chart, Grid grid, SetRole role, std::vector<uint64_t> cells,
          bool clipped = false);

  const ChartPtr& chart() const { return chart_; }
  const Grid& grid() const { return grid_; }
  SetRole role() const { return role_; }
  const std::vector<uint64_t>& cells() const { return cells_; }
  size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  bool contains(uint64_t key) const;
  /// Some product cells fell outside the chart domain and were dropped.
  bool clipped() const { return clipped_; }

  bool same_grid(const CellSet& other) const { return grid_ == other.grid_; }

 private:
  ChartPtr chart_;
  Grid grid_;
  SetRole role_ = SetRole::exact;
  std::vector<uint64_t> cells_;
  bool clipped_ = false;
};

/// Cells meeting the half-open box [lo, hi). Role is exact when the box is
/// grid aligned, outer otherwise.
CellSet from_box(ChartPtr chart, const Vec& lo, const Vec& hi, int level);
CellSet from_box(ChartPtr chart, const Vec& lo, const Vec& hi, const Grid& grid);

/// Haar measure of the set by per-cell midpoint quadrature; one refinement
/// step supplies the error estimate.
Measured measure(const CellSet& s, Side side);

CellSet set_union(const CellSet& a, const CellSet& b);
CellSet refine(const CellSet& s, int new_level);

/// Is every cell of `a` a cell of `b`? Levels may differ by refinement.
bool subset_of(const CellSet& a, const CellSet& b);

/// Fraction of measure carried by cells with a missing face neighbor; used
/// in discretization allowances.
double boundary_fraction(const CellSet& s, Side side);

void write_binary(const CellSet& s, std::ostream& os);
CellSet read_binary(std::istream& is, const std::vector<ChartPtr>& known_charts);
std::string to_json(const CellSet& s);

}  // namespace bmlab

#endif
