#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace gridsel {

/// Dense square matrix stored row-major. Row 0 is the southern edge
/// (lat_min), column 0 the western edge (lon_min).
template <typename T>
class Grid {
 public:
  Grid() = default;
  explicit Grid(int side, T fill = T{}) : side_(side), data_(checked_size(side), fill) {}
  Grid(int side, std::vector<T> values) : side_(side), data_(std::move(values)) {
    if (data_.size() != checked_size(side)) {
      throw std::invalid_argument("Grid: value count does not match side*side");
    }
  }

  int side() const { return side_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int row, int col) {
    assert(row >= 0 && row < side_ && col >= 0 && col < side_);
    return data_[static_cast<std::size_t>(row) * side_ + col];
  }
  const T& operator()(int row, int col) const {
    assert(row >= 0 && row < side_ && col >= 0 && col < side_);
    return data_[static_cast<std::size_t>(row) * side_ + col];
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  static std::size_t checked_size(int side) {
    if (side < 0) throw std::invalid_argument("Grid: negative side");
    return static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
  }

  int side_ = 0;
  std::vector<T> data_;
};

}  // namespace gridsel
