#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridsel/geometry.hpp"
#include "gridsel/grid.hpp"

namespace gridsel {

using Timestamp = std::chrono::sys_seconds;

struct EventRecord {
  Timestamp timestamp;
  double lon = 0.0;
  double lat = 0.0;
};

enum class DayFilter { weekdays, all };

/// Slot layout and the alpha-estimation window.
struct TimeSlotSpec {
  int slot_minutes = 30;
  DayFilter day_filter = DayFilter::weekdays;
  int window_days = 30;
  int utc_offset_minutes = 0;  // local time used for slot-of-day and weekday

  void validate() const;
  int slots_per_day() const { return 1440 / slot_minutes; }

  /// Global slot index: local day number (days since 1970-01-01) * slots_per_day + slot of day.
  std::int64_t slot_index(Timestamp t) const;
  std::int64_t day_of(std::int64_t slot_index) const;
  int slot_of_day(std::int64_t slot_index) const;
  std::int64_t local_day(Timestamp t) const;
  /// Does `day` pass the day filter?
  bool qualifies(std::int64_t day) const;
};

/// Event counts per HGrid for one slot.
struct CountField {
  GridGeometry geometry;
  std::int64_t slot_index = 0;
  Grid<std::int64_t> counts;

  std::int64_t total() const;
};

/// Mean event rate per HGrid for one slot of the day.
struct AlphaField {
  GridGeometry geometry;
  int slot_of_day = 0;
  Grid<double> alphas;

  double total() const;
  void validate() const;
};

// ---- parsing -----------------------------------------------------------

enum class OnMalformed { skip, abort };

struct LineIssue {
  std::size_t line = 0;
  std::string message;
};

struct ParseResult {
  std::vector<EventRecord> events;
  std::size_t out_of_extent = 0;
  std::vector<LineIssue> malformed;  // only populated with OnMalformed::skip
};

/// Parses an ISO-8601 instant: "YYYY-MM-DD[T ]HH:MM[:SS[.frac]]" with an optional
/// "Z" or "+HH:MM"/"-HH:MM" suffix. Without a suffix the text is taken as UTC.
/// Fractional seconds are truncated.
std::optional<Timestamp> parse_iso8601(std::string_view text);
std::string format_iso8601(Timestamp t);

/// Reads a `timestamp,lon,lat` CSV. Records outside `extent` are counted, not returned.
/// Throws std::runtime_error if the file cannot be opened and ParseError on a
/// malformed row when `on_malformed == abort`.
ParseResult parse_events(const std::filesystem::path& path, const SpatialExtent& extent,
                         OnMalformed on_malformed = OnMalformed::skip);

void write_events(const std::filesystem::path& path, std::span<const EventRecord> events);

// ---- binning -----------------------------------------------------------

/// Inclusive-exclusive range of local days.
struct DayRange {
  std::int64_t first = 0;
  std::int64_t last = 0;  // exclusive
};

struct BinOptions {
  std::optional<DayRange> days;       // default: span of the events
  std::optional<int> slot_of_day;     // default: every slot of the day
};

/// One CountField per (day, slot) in the range, ordered by slot index. Cell index is
/// floor of the affine map from (lon, lat) onto [0, h_side)^2; max-edge events clamp
/// into the last cell. Events outside the day range are ignored.
std::vector<CountField> bin_events(std::span<const EventRecord> events, const SpatialExtent& extent,
                                   const GridGeometry& geometry, const TimeSlotSpec& slots,
                                   const BinOptions& options = {});

/// Sums blocks of factor x factor cells. Requires side % factor == 0.
CountField aggregate_counts(const CountField& fine, int factor);
/// MGrid totals for a CountField whose geometry has m_side > 1.
CountField mgrid_counts(const CountField& field);

// ---- alpha estimation ----------------------------------------------------

/// Mean of the qualifying fields: same slot of day, passing the day filter, and whose
/// day lies in [end_day - window_days, end_day). `end_day` defaults to one past the
/// latest day in `history`. Throws InsufficientHistory when nothing qualifies.
AlphaField estimate_alpha(std::span<const CountField> history, int slot_of_day,
                          const TimeSlotSpec& policy, std::optional<std::int64_t> end_day = {});

/// Re-bins raw events at `geometry.h_side` and estimates alpha with the same estimator.
AlphaField rebin_alpha(std::span<const EventRecord> events, const SpatialExtent& extent,
                       const GridGeometry& geometry, const TimeSlotSpec& slots, int slot_of_day,
                       std::optional<std::int64_t> end_day = {});

/// Splits every cell into factor x factor sub-cells carrying alpha / factor^2.
AlphaField subdivide_alpha(const AlphaField& field, int factor);
/// Sums blocks of factor x factor cells.
AlphaField aggregate_alpha(const AlphaField& field, int factor);

}  // namespace gridsel
