#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "gridsel/ingest.hpp"

namespace gridsel {

/// Sum over cells of |alpha_ij - mean alpha|. Zero iff the field is constant.
double d_alpha(const AlphaField& field);

struct DAlphaPoint {
  int side = 0;             // HGrids per side at this resolution
  long long n_ref = 0;      // side^2
  double d_alpha = 0.0;
};

struct DAlphaCurve {
  std::vector<DAlphaPoint> points;

  /// Throws std::invalid_argument unless resolutions strictly increase and every value is >= 0.
  void validate() const;
};

/// D_alpha at each candidate side, each from alpha freshly re-binned at that side.
DAlphaCurve scan_d_alpha(std::span<const EventRecord> events, const SpatialExtent& extent,
                         const TimeSlotSpec& slots, std::span<const int> sides, int slot_of_day,
                         std::optional<std::int64_t> end_day = {});

struct NSelection {
  int side = 0;
  long long n_ref = 0;
  bool plateau_found = true;
};

/// Smallest candidate from which every later step grows D_alpha by a relative
/// amount below `rel_growth_threshold`. Without such a candidate the largest one is
/// returned with plateau_found = false. Needs at least 3 points.
NSelection select_N(const DAlphaCurve& curve, double rel_growth_threshold = 0.02);

/// `N,d_alpha` rows with a header line.
void write_curve(std::ostream& out, const DAlphaCurve& curve);
DAlphaCurve read_curve(std::istream& in);

}  // namespace gridsel
