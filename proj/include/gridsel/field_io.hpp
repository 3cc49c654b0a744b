#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gridsel/grid.hpp"

namespace gridsel {

// Text matrix format shared by count fields, alpha fields, forecasts and per-cell
// error matrices:
//
//   <side> <slot_index>
//   v(0,0) v(0,1) ... v(0,side-1)
//   ...
//   v(side-1,0) ...
//
// Values are written in shortest round-trip form, so re-reading reproduces them
// bit-for-bit. An archive is a concatenation of such blocks.

struct MatrixBlock {
  std::int64_t slot_index = 0;
  Grid<double> values;
};

std::string format_number(double v);

void write_matrix(std::ostream& out, std::int64_t slot_index, const Grid<double>& values);
void write_matrix(std::ostream& out, std::int64_t slot_index, const Grid<std::int64_t>& values);

/// Reads every block until end of input. Throws ParseError on malformed content.
std::vector<MatrixBlock> read_matrices(std::istream& in);
std::vector<MatrixBlock> read_matrix_file(const std::filesystem::path& path);

}  // namespace gridsel
