#include "gridsel/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace gridsel {

void SpatialExtent::validate() const {
  if (!(std::isfinite(lon_min) && std::isfinite(lon_max) && std::isfinite(lat_min) &&
        std::isfinite(lat_max))) {
    throw std::invalid_argument("extent: bounds must be finite");
  }
  if (!(lon_min < lon_max) || !(lat_min < lat_max)) {
    throw std::invalid_argument("extent: require lon_min < lon_max and lat_min < lat_max");
  }
}

bool SpatialExtent::contains(double lon, double lat) const {
  return lon >= lon_min && lon <= lon_max && lat >= lat_min && lat <= lat_max;
}

SpatialExtent SpatialExtent::parse(const std::string& text) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string::npos ? text.size() : comma;
    double v = 0.0;
    const char* first = text.data() + start;
    const char* last = text.data() + end;
    while (first < last && *first == ' ') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
      throw std::invalid_argument("extent: cannot parse '" + text + "'");
    }
    parts.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (parts.size() != 4) {
    throw std::invalid_argument("extent: expected lonmin,latmin,lonmax,latmax");
  }
  SpatialExtent e{parts[0], parts[2], parts[1], parts[3]};
  e.validate();
  return e;
}

GridGeometry GridGeometry::for_partition(int n_side, long long n_ref) {
  if (n_side < 1) throw std::invalid_argument("geometry: n_side must be >= 1");
  if (n_ref < 1) throw std::invalid_argument("geometry: n_ref must be >= 1");
  const long long n = static_cast<long long>(n_side) * n_side;
  long long m_side = static_cast<long long>(std::ceil(std::sqrt(static_cast<double>(n_ref) / n)));
  m_side = std::max(1LL, m_side);
  // floating-point guard on both sides of the ceiling
  while (m_side > 1 && n * (m_side - 1) * (m_side - 1) >= n_ref) --m_side;
  while (n * m_side * m_side < n_ref) ++m_side;
  GridGeometry g;
  g.n_side = n_side;
  g.m_side = static_cast<int>(m_side);
  g.h_side = n_side * g.m_side;
  g.n_ref = n_ref;
  return g;
}

GridGeometry GridGeometry::flat(int side) {
  if (side < 1) throw std::invalid_argument("geometry: side must be >= 1");
  return GridGeometry{side, 1, side, static_cast<long long>(side) * side};
}

void GridGeometry::validate() const {
  if (n_side < 1 || m_side < 1 || n_ref < 1) {
    throw std::invalid_argument("geometry: sides and n_ref must be positive");
  }
  if (h_side != n_side * m_side) {
    throw std::invalid_argument("geometry: h_side must equal n_side * m_side");
  }
  if (n() * m() < n_ref) {
    throw std::invalid_argument("geometry: n*m must cover n_ref");
  }
}

int axis_cell(double v, double lo, double hi, int cells) {
  const double u = (v - lo) / (hi - lo) * cells;
  int idx = static_cast<int>(std::floor(u));
  return std::clamp(idx, 0, cells - 1);
}

}  // namespace gridsel
