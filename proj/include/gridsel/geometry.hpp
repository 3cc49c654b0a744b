#pragma once

#include <string>

namespace gridsel {

/// Rectangular study area in decimal degrees.
struct SpatialExtent {
  double lon_min = 0.0;
  double lon_max = 1.0;
  double lat_min = 0.0;
  double lat_max = 1.0;

  /// Throws std::invalid_argument unless lon_min < lon_max and lat_min < lat_max.
  void validate() const;
  bool contains(double lon, double lat) const;

  /// Parses "lonmin,latmin,lonmax,latmax".
  static SpatialExtent parse(const std::string& text);
};

/// Partition arithmetic linking MGrids (model cells) to HGrids (homogeneous
/// sub-cells). The space is cut into n_side x n_side MGrids, each holding
/// m_side x m_side HGrids, for h_side = n_side * m_side HGrids per side.
struct GridGeometry {
  int n_side = 1;
  int m_side = 1;
  int h_side = 1;
  long long n_ref = 1;  // reference HGrid total N

  long long n() const { return static_cast<long long>(n_side) * n_side; }
  long long m() const { return static_cast<long long>(m_side) * m_side; }

  /// Smallest m_side with n_side^2 * m_side^2 >= n_ref.
  static GridGeometry for_partition(int n_side, long long n_ref);
  /// One HGrid per MGrid: n_side = h_side, m_side = 1.
  static GridGeometry flat(int side);

  void validate() const;
  bool operator==(const GridGeometry&) const = default;
};

/// Cell index along one axis for coordinate `v` in [lo, hi], with the top edge
/// clamped into the last cell.
int axis_cell(double v, double lo, double hi, int cells);

}  // namespace gridsel
