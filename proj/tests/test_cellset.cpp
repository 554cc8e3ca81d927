#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bmlab/catalog.hpp"
#include "bmlab/cellset.hpp"

using namespace bmlab;

TEST_CASE("from_box: aligned unit interval is exact with 16 cells") {
  ChartPtr r1 = make_euclidean(1);
  Vec lo(1), hi(1);
  lo << 0.0;
  hi << 1.0;
  CellSet s = from_box(r1, lo, hi, 4);
  CHECK(s.size() == 16);
  CHECK(s.role() == SetRole::exact);
  Measured m = measure(s, Side::left);
  CHECK(m.value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("from_box: misaligned box becomes an outer cover") {
  ChartPtr r1 = make_euclidean(1);
  Vec lo(1), hi(1);
  lo << 0.03;
  hi << 0.97;
  CellSet s = from_box(r1, lo, hi, 4);
  CHECK(s.role() == SetRole::outer);
  CHECK(measure(s, Side::left).value >= 0.94);
}

TEST_CASE("measure: unit square on r:2 is exact") {
  ChartPtr r2 = make_euclidean(2);
  Vec lo = Vec::Zero(2), hi = Vec::Ones(2);
  CellSet s = from_box(r2, lo, hi, 5);
  Measured m = measure(s, Side::left);
  CHECK(std::abs(m.value - 1.0) < 1e-12);
  CHECK(m.error < 1e-10);
}

TEST_CASE("measure: affine box left and right converge to 1/2 and ln 2") {
  ChartPtr aff = make_affine();
  Vec lo(2), hi(2);
  lo << 1.0, 0.0;
  hi << 2.0, 1.0;
  double prev_left_err = 1e9, prev_right_err = 1e9;
  for (int level : {4, 5, 6}) {
    CellSet s = from_box(aff, lo, hi, level);
    Measured left = measure(s, Side::left);
    Measured right = measure(s, Side::right);
    double le = std::abs(left.value - 0.5);
    double re = std::abs(right.value - std::log(2.0));
    CHECK(le < prev_left_err);
    CHECK(re < prev_right_err);
    CHECK(le < left.error + 1e-4);
    prev_left_err = le;
    prev_right_err = re;
  }
  CellSet s6 = from_box(aff, lo, hi, 6);
  CHECK(measure(s6, Side::left).value == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(measure(s6, Side::right).value ==
        doctest::Approx(std::log(2.0)).epsilon(1e-4));
}

TEST_CASE("empty set measures zero") {
  ChartPtr r1 = make_euclidean(1);
  CellSet empty(r1, Grid::of_chart(*r1, 3), SetRole::exact, {});
  CHECK(measure(empty, Side::left).value == 0.0);
}

TEST_CASE("union and refine identities") {
  ChartPtr r2 = make_euclidean(2);
  Vec lo = Vec::Zero(2), hi = Vec::Ones(2);
  CellSet s = from_box(r2, lo, hi, 4);
  CellSet empty(r2, s.grid(), SetRole::exact, {});

  CellSet u = set_union(s, empty);
  CHECK(u.size() == s.size());
  CellSet uu = set_union(s, s);
  CHECK(uu.size() == s.size());  // idempotent

  CellSet fine = refine(s, 6);
  CHECK(fine.size() == s.size() * 16);
  CHECK(measure(fine, Side::left).value ==
        doctest::Approx(measure(s, Side::left).value).epsilon(1e-12));

  // union with level mismatch refines the coarser operand
  Vec lo2(2), hi2(2);
  lo2 << 2.0, 0.0;
  hi2 << 3.0, 1.0;
  CellSet t = from_box(r2, lo2, hi2, 6);
  CellSet mixed = set_union(s, t);
  CHECK(mixed.grid().level == 6);
  CHECK(mixed.size() == s.size() * 16 + t.size());
}

TEST_CASE("monotonicity: subset of a bigger box has smaller measure") {
  ChartPtr aff = make_affine();
  Vec lo(2), hi(2), hi2(2);
  lo << 1.0, 0.0;
  hi << 2.0, 1.0;
  hi2 << 3.0, 2.0;
  CellSet small = from_box(aff, lo, hi, 5);
  CellSet big = from_box(aff, lo, hi2, 5);
  CHECK(subset_of(small, big));
  CHECK(measure(small, Side::left).value <= measure(big, Side::left).value);
  CHECK(measure(small, Side::right).value <= measure(big, Side::right).value);
}

TEST_CASE("torus wraps: box across the seam") {
  ChartPtr t1 = make_torus(1);
  Vec lo(1), hi(1);
  lo << 0.75;
  hi << 1.25;  // wraps around 1 == 0
  CellSet s = from_box(t1, lo, hi, 3);
  CHECK(s.size() == 4);
  CHECK(measure(s, Side::left).value == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("serialization round trip: binary and json") {
  ChartPtr aff = make_affine();
  Vec lo(2), hi(2);
  lo << 1.0, 0.0;
  hi << 2.0, 1.0;
  CellSet s = from_box(aff, lo, hi, 5);

  std::stringstream buf;
  write_binary(s, buf);
  CellSet back = read_binary(buf, {aff});
  CHECK(back.cells() == s.cells());
  CHECK(back.grid() == s.grid());
  CHECK(back.role() == s.role());

  std::string j = to_json(s);
  CHECK(j.find("\"chart\":\"aff\"") != std::string::npos);
  CHECK(j.find("\"level\":5") != std::string::npos);
}

TEST_CASE("determinism: identical construction gives identical cells") {
  ChartPtr h3 = make_heisenberg();
  Vec lo = Vec::Zero(3), hi = Vec::Ones(3);
  CellSet a = from_box(h3, lo, hi, 4);
  CellSet b = from_box(h3, lo, hi, 4);
  CHECK(a.cells() == b.cells());
}

TEST_CASE("from_box rejects boxes outside the chart domain") {
  ChartPtr aff = make_affine();
  Vec lo(2), hi(2);
  lo << -1.0, 0.0;
  hi << 1.0, 1.0;
  CHECK_THROWS_AS(from_box(aff, lo, hi, 4), domain_error_chart);
}
