#include "gridsel/uniformity.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "gridsel/errors.hpp"
#include "gridsel/field_io.hpp"
#include "gridsel/summation.hpp"

namespace gridsel {

double d_alpha(const AlphaField& field) {
  field.validate();
  const auto vals = field.alphas.values();
  if (vals.empty()) return 0.0;
  CompensatedSum sum;
  for (double v : vals) sum += v;
  const double mean = sum.value() / static_cast<double>(vals.size());
  CompensatedSum dev;
  for (double v : vals) dev += std::abs(v - mean);
  return dev.value();
}

void DAlphaCurve::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].d_alpha >= 0.0)) throw std::invalid_argument("D_alpha curve: negative value");
    if (i > 0 && points[i].n_ref <= points[i - 1].n_ref) {
      throw std::invalid_argument("D_alpha curve: resolutions must strictly increase");
    }
  }
}

DAlphaCurve scan_d_alpha(std::span<const EventRecord> events, const SpatialExtent& extent,
                         const TimeSlotSpec& slots, std::span<const int> sides, int slot_of_day,
                         std::optional<std::int64_t> end_day) {
  if (sides.empty()) throw std::invalid_argument("scan_d_alpha: no candidates");
  DAlphaCurve curve;
  for (int side : sides) {
    if (side < 1) throw std::invalid_argument("scan_d_alpha: side must be >= 1");
    const AlphaField alpha = rebin_alpha(events, extent, GridGeometry::flat(side), slots, slot_of_day, end_day);
    curve.points.push_back({side, static_cast<long long>(side) * side, d_alpha(alpha)});
  }
  curve.validate();
  return curve;
}

NSelection select_N(const DAlphaCurve& curve, double rel_growth_threshold) {
  curve.validate();
  const auto& p = curve.points;
  if (p.size() < 3) throw std::invalid_argument("select_N: need at least 3 curve points");
  if (!(rel_growth_threshold > 0.0)) throw std::invalid_argument("select_N: threshold must be positive");

  auto growth = [&](std::size_t i) {
    const double step = p[i + 1].d_alpha - p[i].d_alpha;
    if (step <= 0.0) return 0.0;
    if (p[i].d_alpha == 0.0) return std::numeric_limits<double>::infinity();
    return step / p[i].d_alpha;
  };

  // Walk back from the last step; the plateau starts where the suffix of small
  // steps begins.
  std::size_t start = p.size() - 1;
  while (start > 0 && growth(start - 1) < rel_growth_threshold) --start;
  if (start == p.size() - 1) return {p.back().side, p.back().n_ref, false};
  return {p[start].side, p[start].n_ref, true};
}

void write_curve(std::ostream& out, const DAlphaCurve& curve) {
  out << "N,d_alpha\n";
  for (const auto& pt : curve.points) out << pt.n_ref << ',' << format_number(pt.d_alpha) << '\n';
}

DAlphaCurve read_curve(std::istream& in) {
  DAlphaCurve curve;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("N,", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(line_no, "expected N,d_alpha");
    try {
      std::size_t used = 0;
      const long long n = std::stoll(line.substr(0, comma), &used);
      const double d = std::stod(line.substr(comma + 1));
      const auto side = static_cast<int>(std::llround(std::sqrt(static_cast<double>(n))));
      curve.points.push_back({side, n, d});
    } catch (const std::logic_error&) {
      throw ParseError(line_no, "bad number in curve row");
    }
  }
  curve.validate();
  return curve;
}

}  // namespace gridsel
