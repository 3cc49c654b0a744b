#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gridsel/field_io.hpp"
#include "gridsel/ingest.hpp"

namespace gridsel {

/// Forecasts per-MGrid event counts. All fields handed to a predictor are at MGrid
/// resolution (one cell per MGrid).
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string name() const = 0;

  /// Training slots, any order.
  virtual void fit(std::span<const CountField> history) = 0;

  /// Forecast for `target.slot_index`. Only oracle-style predictors read
  /// `target.counts`; the others use it for shape and slot only.
  virtual Grid<double> predict(const CountField& target) const = 0;
};

using PredictorFactory = std::function<std::unique_ptr<Predictor>()>;

/// Mean of the qualifying history for the target's slot of day, with the window
/// ending the day before the target.
class HistoricalMeanPredictor : public Predictor {
 public:
  explicit HistoricalMeanPredictor(TimeSlotSpec policy);
  std::string name() const override { return "mean"; }
  void fit(std::span<const CountField> history) override;
  Grid<double> predict(const CountField& target) const override;

 private:
  TimeSlotSpec policy_;
  std::vector<CountField> history_;
};

/// max(0, actual + eps) with eps ~ Laplace(0, noise_scale), so E|eps| = noise_scale.
/// Noise for a slot depends only on (seed, slot index).
class NoisyOraclePredictor : public Predictor {
 public:
  NoisyOraclePredictor(double noise_scale, std::uint64_t seed);
  std::string name() const override { return "oracle"; }
  void fit(std::span<const CountField>) override {}
  Grid<double> predict(const CountField& target) const override;

 private:
  double noise_scale_;
  std::uint64_t seed_;
};

/// Forecasts read from matrix blocks (`n_side slot_index` headers). Negative values
/// are clamped to 0 and counted in `clamped()`.
class ExternalForecastPredictor : public Predictor {
 public:
  explicit ExternalForecastPredictor(std::span<const MatrixBlock> blocks);
  std::string name() const override { return "external"; }
  void fit(std::span<const CountField>) override {}
  Grid<double> predict(const CountField& target) const override;
  std::size_t clamped() const { return clamped_; }

 private:
  std::map<std::pair<int, std::int64_t>, Grid<double>> forecasts_;
  std::size_t clamped_ = 0;
};

struct MaeReport {
  double mae = 0.0;
  long long n = 0;
  double total_model_error = 0.0;  // n * mae
  std::size_t slots_evaluated = 0;
};

/// Mean over every (MGrid, slot) pair of |forecast - actual|. Throws
/// std::invalid_argument on an empty test set and ShapeMismatch on mismatched fields.
MaeReport compute_mae(const Predictor& predictor, std::span<const CountField> test);

}  // namespace gridsel
