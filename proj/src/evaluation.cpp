#include "gridsel/evaluation.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "gridsel/errors.hpp"
#include "gridsel/report.hpp"
#include "gridsel/rng.hpp"
#include "gridsel/summation.hpp"

namespace gridsel {

void EvaluationSet::validate() const {
  geometry.validate();
  for (const auto& p : pairs) {
    if (p.forecast.side() != geometry.n_side) throw ShapeMismatch("evaluation: forecast is not n_side x n_side");
    if (p.actual.side() != geometry.h_side) throw ShapeMismatch("evaluation: actual is not h_side x h_side");
    for (double v : p.forecast.values()) {
      if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("evaluation: forecast must be finite and >= 0");
    }
    for (auto v : p.actual.values()) {
      if (v < 0) throw std::invalid_argument("evaluation: negative count");
    }
  }
}

EmpiricalErrors empirical_errors(const EvaluationSet& ev) {
  ev.validate();
  if (ev.pairs.empty()) throw std::invalid_argument("evaluation: empty evaluation set");
  const GridGeometry& g = ev.geometry;
  const int h = g.h_side;
  const int ms = g.m_side;
  const double m = static_cast<double>(g.m());
  const std::size_t cells = static_cast<std::size_t>(h) * h;

  std::vector<CompensatedSum> real(cells), model(cells), expr(cells);
  EmpiricalErrors out;
  for (const auto& p : ev.pairs) {
    CompensatedSum slot_real, slot_model, slot_expr;
    for (int bi = 0; bi < g.n_side; ++bi) {
      for (int bj = 0; bj < g.n_side; ++bj) {
        std::int64_t total = 0;
        for (int r = bi * ms; r < (bi + 1) * ms; ++r) {
          for (int c = bj * ms; c < (bj + 1) * ms; ++c) total += p.actual(r, c);
        }
        const double mean = static_cast<double>(total) / m;
        const double share = p.forecast(bi, bj) / m;
        for (int r = bi * ms; r < (bi + 1) * ms; ++r) {
          for (int c = bj * ms; c < (bj + 1) * ms; ++c) {
            const double actual = static_cast<double>(p.actual(r, c));
            const std::size_t idx = static_cast<std::size_t>(r) * h + c;
            const double dr = std::abs(share - actual);
            const double dm = std::abs(share - mean);
            const double de = std::abs(mean - actual);
            real[idx] += dr;
            model[idx] += dm;
            expr[idx] += de;
            slot_real += dr;
            slot_model += dm;
            slot_expr += de;
          }
        }
      }
    }
    out.real_per_slot.push_back(slot_real.value());
    out.model_per_slot.push_back(slot_model.value());
    out.expression_per_slot.push_back(slot_expr.value());
  }

  const double slots = static_cast<double>(ev.pairs.size());
  CompensatedSum tr, tm, te;
  for (std::size_t i = 0; i < cells; ++i) {
    tr += real[i].value() / slots;
    tm += model[i].value() / slots;
    te += expr[i].value() / slots;
  }
  out.real = tr.value();
  out.model = tm.value();
  out.expression = te.value();
  return out;
}

double empirical_real_error(const EvaluationSet& ev) { return empirical_errors(ev).real; }
double empirical_model_error(const EvaluationSet& ev) { return empirical_errors(ev).model; }
double empirical_expression_error(const EvaluationSet& ev) { return empirical_errors(ev).expression; }

std::vector<CountField> generate_poisson_field(const AlphaField& alpha, int slots, std::uint64_t seed,
                                               std::int64_t first_slot_index) {
  alpha.validate();
  if (slots < 1) throw std::invalid_argument("generate_poisson_field: slots must be >= 1");
  const int side = alpha.alphas.side();
  std::vector<CountField> out;
  out.reserve(static_cast<std::size_t>(slots));
  for (int s = 0; s < slots; ++s) {
    const std::int64_t slot = first_slot_index + s;
    Philox4x32 rng(seed, stream_id(StreamTag::poisson_field, static_cast<std::uint64_t>(slot)));
    CountField f{alpha.geometry, slot, Grid<std::int64_t>(side, 0)};
    const auto a = alpha.alphas.values();
    auto c = f.counts.values();
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = draw_poisson(rng, a[i]);
    out.push_back(std::move(f));
  }
  return out;
}

double standard_error(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  CompensatedSum sum;
  for (double v : values) sum += v;
  const double mean = sum.value() / static_cast<double>(n);
  CompensatedSum sq;
  for (double v : values) sq += (v - mean) * (v - mean);
  return std::sqrt(sq.value() / static_cast<double>(n - 1) / static_cast<double>(n));
}

std::string to_json(const ErrorReport& r) {
  nlohmann::ordered_json j;
  j["n_side"] = r.n_side;
  j["n"] = r.n;
  j["m"] = r.m;
  j["k"] = r.k;
  j["slots"] = r.slots;
  j["e_e_total"] = round_sig(r.e_e_total);
  j["e_m_total"] = round_sig(r.e_m_total);
  j["e_u_total"] = round_sig(r.e_u_total);
  j["e_r_empirical"] = r.e_r_empirical ? nlohmann::ordered_json(round_sig(*r.e_r_empirical)) : nlohmann::ordered_json();
  if (r.e_e_empirical) j["e_e_empirical"] = round_sig(*r.e_e_empirical);
  if (r.e_m_empirical) j["e_m_empirical"] = round_sig(*r.e_m_empirical);
  return j.dump(2);
}

}  // namespace gridsel

namespace gridsel {

std::vector<EventRecord> synthesize_events(const AlphaField& alpha, const SpatialExtent& extent,
                                           const TimeSlotSpec& slots, std::span<const std::int64_t> days,
                                           int slot_of_day, std::uint64_t seed) {
  alpha.validate();
  extent.validate();
  slots.validate();
  if (slot_of_day < 0 || slot_of_day >= slots.slots_per_day()) throw std::invalid_argument("slot of day out of range");
  const int side = alpha.alphas.side();
  const double w = (extent.lon_max - extent.lon_min) / side;
  const double h = (extent.lat_max - extent.lat_min) / side;
  const std::int64_t slot_seconds = std::int64_t{slots.slot_minutes} * 60;
  std::vector<EventRecord> events;
  for (std::int64_t day : days) {
    const std::int64_t slot = day * slots.slots_per_day() + slot_of_day;
    const std::int64_t slot_start = slot * slot_seconds - std::int64_t{slots.utc_offset_minutes} * 60;
    Philox4x32 rng(seed, stream_id(StreamTag::synth_events, static_cast<std::uint64_t>(slot)));
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        const std::int64_t count = draw_poisson(rng, alpha.alphas(r, c));
        for (std::int64_t e = 0; e < count; ++e) {
          // Keep clear of cell edges so re-binning at the source side is exact.
          const double u = 1e-6 + (1.0 - 2e-6) * rng.uniform01();
          const double v = 1e-6 + (1.0 - 2e-6) * rng.uniform01();
          const auto offset = static_cast<std::int64_t>(rng.uniform01() * static_cast<double>(slot_seconds));
          events.push_back({Timestamp{std::chrono::seconds{slot_start + offset}}, extent.lon_min + (c + u) * w,
                            extent.lat_min + (r + v) * h});
        }
      }
    }
  }
  return events;
}

}  // namespace gridsel
