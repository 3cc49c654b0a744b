#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridsel/ingest.hpp"

namespace gridsel {

/// One evaluated slot: MGrid forecasts (n_side x n_side) and actual HGrid counts
/// (h_side x h_side). HGrid forecasts are the MGrid forecast divided by m.
struct EvaluationPair {
  Grid<double> forecast;
  Grid<std::int64_t> actual;
};

struct EvaluationSet {
  GridGeometry geometry;
  std::vector<EvaluationPair> pairs;

  /// Throws ShapeMismatch / std::invalid_argument on bad shapes or negative counts.
  void validate() const;
};

/// Empirical totals: for every HGrid the mean over slots, summed over HGrids.
/// The per-slot vectors hold the HGrid sum of each slot; their mean equals the
/// total and their spread gives a standard error.
struct EmpiricalErrors {
  double real = 0.0;        // |forecast_ij - actual_ij|
  double model = 0.0;       // |forecast_ij - mgrid_mean_ij|
  double expression = 0.0;  // |mgrid_mean_ij - actual_ij|
  std::vector<double> real_per_slot;
  std::vector<double> model_per_slot;
  std::vector<double> expression_per_slot;
};

EmpiricalErrors empirical_errors(const EvaluationSet& ev);
double empirical_real_error(const EvaluationSet& ev);
double empirical_model_error(const EvaluationSet& ev);
double empirical_expression_error(const EvaluationSet& ev);

/// Independent Pois(alpha_ij) draws per cell and slot. Slot s uses its own stream
/// derived from (seed, first_slot_index + s).
std::vector<CountField> generate_poisson_field(const AlphaField& alpha, int slots, std::uint64_t seed,
                                               std::int64_t first_slot_index = 0);

/// Sample standard error of the mean of `values` (0 for fewer than two values).
double standard_error(const std::vector<double>& values);

struct ErrorReport {
  int n_side = 0;
  long long n = 0;
  long long m = 0;
  int k = 0;
  std::size_t slots = 0;
  double e_e_total = 0.0;
  double e_m_total = 0.0;
  double e_u_total = 0.0;  // e_e_total + e_m_total
  std::optional<double> e_r_empirical;
  std::optional<double> e_e_empirical;
  std::optional<double> e_m_empirical;
};

/// JSON object with stable key names; numbers printed with 12 significant digits.
std::string to_json(const ErrorReport& report);

}  // namespace gridsel

namespace gridsel {

/// Synthetic events for one slot of day on each listed local day: Pois(alpha_ij)
/// events per cell, each placed uniformly inside its cell and slot. The field's
/// own side sets the cell layout over `extent`.
std::vector<EventRecord> synthesize_events(const AlphaField& alpha, const SpatialExtent& extent,
                                           const TimeSlotSpec& slots, std::span<const std::int64_t> days,
                                           int slot_of_day, std::uint64_t seed);

}  // namespace gridsel
