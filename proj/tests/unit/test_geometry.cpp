#include <catch_amalgamated.hpp>

#include "gridsel/geometry.hpp"

using namespace gridsel;

TEST_CASE("partition arithmetic follows the ceiling rule") {
  const auto g16 = GridGeometry::for_partition(16, 128 * 128);
  CHECK(g16.m_side == 8);
  CHECK(g16.h_side == 128);
  CHECK(g16.m() == 64);

  const auto g17 = GridGeometry::for_partition(17, 128 * 128);
  CHECK(g17.m_side == 8);
  CHECK(g17.h_side == 136);

  const auto g128 = GridGeometry::for_partition(128, 128 * 128);
  CHECK(g128.m_side == 1);

  const auto g1 = GridGeometry::for_partition(1, 128 * 128);
  CHECK(g1.m_side == 128);
}

TEST_CASE("m_side is the smallest value meeting n m >= N") {
  for (long long nref : {1LL, 7LL, 64LL * 64, 100LL, 128LL * 128, 1000LL}) {
    for (int n_side = 1; n_side <= 40; ++n_side) {
      const auto g = GridGeometry::for_partition(n_side, nref);
      const long long n = static_cast<long long>(n_side) * n_side;
      CHECK(n * g.m() >= nref);
      if (g.m_side > 1) CHECK(n * (g.m_side - 1LL) * (g.m_side - 1LL) < nref);
      CHECK_NOTHROW(g.validate());
    }
  }
}

TEST_CASE("geometry rejects bad arguments") {
  CHECK_THROWS_AS(GridGeometry::for_partition(0, 16), std::invalid_argument);
  CHECK_THROWS_AS(GridGeometry::for_partition(2, 0), std::invalid_argument);
  GridGeometry g = GridGeometry::for_partition(4, 64);
  g.h_side += 1;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("extent parsing and validation") {
  const auto e = SpatialExtent::parse("-74.03,40.58,-73.77,40.92");
  CHECK(e.lon_min == -74.03);
  CHECK(e.lat_min == 40.58);
  CHECK(e.lon_max == -73.77);
  CHECK(e.lat_max == 40.92);
  CHECK(e.contains(-74.03, 40.58));
  CHECK(e.contains(-73.77, 40.92));
  CHECK_FALSE(e.contains(-73.76, 40.9));
  CHECK_THROWS_AS(SpatialExtent::parse("1,2,3"), std::invalid_argument);
  CHECK_THROWS_AS(SpatialExtent::parse("1,1,0,2"), std::invalid_argument);
  CHECK_THROWS_AS(SpatialExtent::parse("a,b,c,d"), std::invalid_argument);
}

TEST_CASE("axis cells are half-open with the top edge clamped") {
  CHECK(axis_cell(0.0, 0.0, 1.0, 4) == 0);
  CHECK(axis_cell(0.2499, 0.0, 1.0, 4) == 0);
  CHECK(axis_cell(0.25, 0.0, 1.0, 4) == 1);
  CHECK(axis_cell(0.999, 0.0, 1.0, 4) == 3);
  CHECK(axis_cell(1.0, 0.0, 1.0, 4) == 3);
}
