#include "gridsel/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "gridsel/errors.hpp"
#include "gridsel/summation.hpp"

namespace gridsel {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return true;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

// ---- TimeSlotSpec ---------------------------------------------------------

void TimeSlotSpec::validate() const {
  if (slot_minutes <= 0 || 1440 % slot_minutes != 0) {
    throw std::invalid_argument("slot_minutes must be positive and divide 1440");
  }
  if (window_days <= 0) throw std::invalid_argument("window_days must be positive");
  if (utc_offset_minutes <= -1440 || utc_offset_minutes >= 1440) {
    throw std::invalid_argument("utc offset must lie within one day");
  }
}

std::int64_t TimeSlotSpec::local_day(Timestamp t) const {
  const std::int64_t local = t.time_since_epoch().count() + std::int64_t{utc_offset_minutes} * 60;
  return floor_div(local, 86400);
}

std::int64_t TimeSlotSpec::slot_index(Timestamp t) const {
  const std::int64_t local = t.time_since_epoch().count() + std::int64_t{utc_offset_minutes} * 60;
  return floor_div(local, std::int64_t{slot_minutes} * 60);
}

std::int64_t TimeSlotSpec::day_of(std::int64_t slot) const { return floor_div(slot, slots_per_day()); }

int TimeSlotSpec::slot_of_day(std::int64_t slot) const {
  return static_cast<int>(slot - day_of(slot) * slots_per_day());
}

bool TimeSlotSpec::qualifies(std::int64_t day) const {
  if (day_filter == DayFilter::all) return true;
  const std::chrono::weekday wd{std::chrono::sys_days{std::chrono::days{day}}};
  return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
}

// ---- fields ---------------------------------------------------------------

std::int64_t CountField::total() const {
  std::int64_t t = 0;
  for (auto c : counts.values()) t += c;
  return t;
}

double AlphaField::total() const {
  CompensatedSum s;
  for (double a : alphas.values()) s += a;
  return s.value();
}

void AlphaField::validate() const {
  geometry.validate();
  if (alphas.side() != geometry.h_side) {
    throw std::invalid_argument("alpha field: matrix side does not match h_side");
  }
  for (double a : alphas.values()) {
    if (!std::isfinite(a) || a < 0.0) {
      throw std::invalid_argument("alpha field: entries must be finite and non-negative");
    }
  }
}

// ---- timestamps -----------------------------------------------------------

std::optional<Timestamp> parse_iso8601(std::string_view text) {
  using namespace std::chrono;
  text = trim(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!read_int(text, 0, 4, y) || text.size() < 16 || text[4] != '-' || !read_int(text, 5, 2, mo) ||
      text[7] != '-' || !read_int(text, 8, 2, d) || (text[10] != 'T' && text[10] != ' ') ||
      !read_int(text, 11, 2, h) || text[13] != ':' || !read_int(text, 14, 2, mi)) {
    return std::nullopt;
  }
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    if (!read_int(text, pos + 1, 2, sec)) return std::nullopt;
    pos += 3;
    if (pos < text.size() && (text[pos] == '.' || text[pos] == ',')) {
      ++pos;
      const std::size_t start = pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
      if (pos == start) return std::nullopt;
    }
  }
  int offset_minutes = 0;
  if (pos < text.size()) {
    const char c = text[pos];
    if (c == 'Z' || c == 'z') {
      ++pos;
    } else if (c == '+' || c == '-') {
      int oh = 0, om = 0;
      if (!read_int(text, pos + 1, 2, oh)) return std::nullopt;
      std::size_t next = pos + 3;
      if (next < text.size() && text[next] == ':') ++next;
      if (!read_int(text, next, 2, om)) return std::nullopt;
      offset_minutes = (c == '+' ? 1 : -1) * (oh * 60 + om);
      pos = next + 2;
    }
  }
  if (pos != text.size()) return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  const sys_seconds t = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} - minutes{offset_minutes};
  return t;
}

std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const auto secs = (t - day_point).count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(secs / 3600), static_cast<long long>((secs / 60) % 60),
                static_cast<long long>(secs % 60));
  return buf;
}

// ---- parsing --------------------------------------------------------------

ParseResult parse_events(const std::filesystem::path& path, const SpatialExtent& extent,
                         OnMalformed on_malformed) {
  extent.validate();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open events file: " + path.string());

  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    if (line_no == 1 && row.substr(0, 9) == "timestamp") continue;

    auto fail = [&](const std::string& why) {
      if (on_malformed == OnMalformed::abort) throw ParseError(line_no, why);
      result.malformed.push_back({line_no, why});
    };

    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos || row.find(',', c2 + 1) != std::string_view::npos) {
      fail("expected 3 comma-separated fields");
      continue;
    }
    const auto ts = parse_iso8601(row.substr(0, c1));
    if (!ts) {
      fail("unparseable timestamp");
      continue;
    }
    EventRecord rec{*ts, 0.0, 0.0};
    if (!parse_double(row.substr(c1 + 1, c2 - c1 - 1), rec.lon) ||
        !parse_double(row.substr(c2 + 1), rec.lat)) {
      fail("lon/lat must be finite numbers");
      continue;
    }
    if (!extent.contains(rec.lon, rec.lat)) {
      ++result.out_of_extent;
      continue;
    }
    result.events.push_back(rec);
  }
  if (in.bad()) throw std::runtime_error("read error on events file: " + path.string());
  return result;
}

void write_events(const std::filesystem::path& path, std::span<const EventRecord> events) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write events file: " + path.string());
  out << "timestamp,lon,lat\n";
  char buf[96];
  for (const auto& e : events) {
    std::snprintf(buf, sizeof buf, ",%.9f,%.9f\n", e.lon, e.lat);
    out << format_iso8601(e.timestamp) << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// ---- binning --------------------------------------------------------------

std::vector<CountField> bin_events(std::span<const EventRecord> events, const SpatialExtent& extent,
                                   const GridGeometry& geometry, const TimeSlotSpec& slots,
                                   const BinOptions& options) {
  extent.validate();
  geometry.validate();
  slots.validate();
  const int spd = slots.slots_per_day();
  if (options.slot_of_day && (*options.slot_of_day < 0 || *options.slot_of_day >= spd)) {
    throw std::invalid_argument("bin_events: slot_of_day out of range");
  }

  DayRange range;
  if (options.days) {
    range = *options.days;
  } else if (!events.empty()) {
    auto [lo, hi] = std::minmax_element(events.begin(), events.end(), [](const auto& a, const auto& b) {
      return a.timestamp < b.timestamp;
    });
    range = {slots.local_day(lo->timestamp), slots.local_day(hi->timestamp) + 1};
  }
  if (range.last <= range.first) return {};

  const int per_day = options.slot_of_day ? 1 : spd;
  const std::int64_t field_count = (range.last - range.first) * per_day;
  std::vector<CountField> fields;
  fields.reserve(static_cast<std::size_t>(field_count));
  for (std::int64_t day = range.first; day < range.last; ++day) {
    for (int s = 0; s < per_day; ++s) {
      const int sod = options.slot_of_day ? *options.slot_of_day : s;
      fields.push_back(CountField{geometry, day * spd + sod, Grid<std::int64_t>(geometry.h_side, 0)});
    }
  }

  const int h = geometry.h_side;
  for (const auto& e : events) {
    const std::int64_t slot = slots.slot_index(e.timestamp);
    const std::int64_t day = slots.day_of(slot);
    if (day < range.first || day >= range.last) continue;
    const int sod = slots.slot_of_day(slot);
    std::int64_t idx = (day - range.first) * per_day;
    if (options.slot_of_day) {
      if (sod != *options.slot_of_day) continue;
    } else {
      idx += sod;
    }
    const int col = axis_cell(e.lon, extent.lon_min, extent.lon_max, h);
    const int row = axis_cell(e.lat, extent.lat_min, extent.lat_max, h);
    ++fields[static_cast<std::size_t>(idx)].counts(row, col);
  }
  return fields;
}

CountField aggregate_counts(const CountField& fine, int factor) {
  const int side = fine.counts.side();
  if (factor < 1 || side % factor != 0) {
    throw std::invalid_argument("aggregate_counts: side must be divisible by factor");
  }
  const int coarse = side / factor;
  CountField out{GridGeometry::flat(coarse), fine.slot_index, Grid<std::int64_t>(coarse, 0)};
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) out.counts(r / factor, c / factor) += fine.counts(r, c);
  }
  return out;
}

CountField mgrid_counts(const CountField& field) { return aggregate_counts(field, field.geometry.m_side); }

// ---- alpha ---------------------------------------------------------------

AlphaField estimate_alpha(std::span<const CountField> history, int slot_of_day, const TimeSlotSpec& policy,
                          std::optional<std::int64_t> end_day) {
  policy.validate();
  if (history.empty()) throw InsufficientHistory("no historical fields supplied");
  std::int64_t end = 0;
  if (end_day) {
    end = *end_day;
  } else {
    end = policy.day_of(history.front().slot_index);
    for (const auto& f : history) end = std::max(end, policy.day_of(f.slot_index));
    end += 1;
  }
  const std::int64_t begin = end - policy.window_days;

  const GridGeometry& geometry = history.front().geometry;
  const int side = history.front().counts.side();
  std::vector<std::int64_t> sums(static_cast<std::size_t>(side) * side, 0);
  std::int64_t used = 0;
  for (const auto& f : history) {
    if (policy.slot_of_day(f.slot_index) != slot_of_day) continue;
    const std::int64_t day = policy.day_of(f.slot_index);
    if (day < begin || day >= end || !policy.qualifies(day)) continue;
    if (f.counts.side() != side) throw ShapeMismatch("estimate_alpha: mixed field resolutions");
    auto vals = f.counts.values();
    for (std::size_t i = 0; i < vals.size(); ++i) sums[i] += vals[i];
    ++used;
  }
  if (used == 0) {
    throw InsufficientHistory("no qualifying historical slots for slot_of_day " +
                              std::to_string(slot_of_day) + " in the estimation window");
  }
  std::vector<double> mean(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) mean[i] = static_cast<double>(sums[i]) / static_cast<double>(used);
  return AlphaField{geometry, slot_of_day, Grid<double>(side, std::move(mean))};
}

AlphaField rebin_alpha(std::span<const EventRecord> events, const SpatialExtent& extent,
                       const GridGeometry& geometry, const TimeSlotSpec& slots, int slot_of_day,
                       std::optional<std::int64_t> end_day) {
  BinOptions opts;
  opts.slot_of_day = slot_of_day;
  if (end_day) opts.days = DayRange{*end_day - slots.window_days, *end_day};
  const auto fields = bin_events(events, extent, geometry, slots, opts);
  return estimate_alpha(fields, slot_of_day, slots, end_day);
}

AlphaField subdivide_alpha(const AlphaField& field, int factor) {
  if (factor < 1) throw std::invalid_argument("subdivide_alpha: factor must be >= 1");
  const int side = field.alphas.side();
  const int fine = side * factor;
  const double share = 1.0 / (static_cast<double>(factor) * factor);
  AlphaField out{GridGeometry::flat(fine), field.slot_of_day, Grid<double>(fine, 0.0)};
  for (int r = 0; r < fine; ++r) {
    for (int c = 0; c < fine; ++c) out.alphas(r, c) = field.alphas(r / factor, c / factor) * share;
  }
  return out;
}

AlphaField aggregate_alpha(const AlphaField& field, int factor) {
  const int side = field.alphas.side();
  if (factor < 1 || side % factor != 0) {
    throw std::invalid_argument("aggregate_alpha: side must be divisible by factor");
  }
  const int coarse = side / factor;
  AlphaField out{GridGeometry::flat(coarse), field.slot_of_day, Grid<double>(coarse, 0.0)};
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) out.alphas(r / factor, c / factor) += field.alphas(r, c);
  }
  return out;
}

}  // namespace gridsel
