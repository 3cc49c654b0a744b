#include "gridsel/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gridsel/errors.hpp"
#include "gridsel/rng.hpp"
#include "gridsel/summation.hpp"

namespace gridsel {

HistoricalMeanPredictor::HistoricalMeanPredictor(TimeSlotSpec policy) : policy_(policy) { policy_.validate(); }

void HistoricalMeanPredictor::fit(std::span<const CountField> history) {
  history_.assign(history.begin(), history.end());
}

Grid<double> HistoricalMeanPredictor::predict(const CountField& target) const {
  if (history_.empty()) throw InsufficientHistory("mean predictor has no training history");
  const int slot = policy_.slot_of_day(target.slot_index);
  AlphaField mean = estimate_alpha(history_, slot, policy_, policy_.day_of(target.slot_index));
  if (mean.alphas.side() != target.counts.side()) {
    throw ShapeMismatch("mean predictor: history resolution differs from target");
  }
  return std::move(mean.alphas);
}

NoisyOraclePredictor::NoisyOraclePredictor(double noise_scale, std::uint64_t seed)
    : noise_scale_(noise_scale), seed_(seed) {
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw std::invalid_argument("noise scale must be finite and >= 0");
  }
}

Grid<double> NoisyOraclePredictor::predict(const CountField& target) const {
  Philox4x32 rng(seed_, stream_id(StreamTag::oracle_noise, static_cast<std::uint64_t>(target.slot_index)));
  const int side = target.counts.side();
  Grid<double> out(side, 0.0);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const double v = static_cast<double>(target.counts(r, c)) + draw_laplace(rng, noise_scale_);
      out(r, c) = std::max(0.0, v);
    }
  }
  return out;
}

ExternalForecastPredictor::ExternalForecastPredictor(std::span<const MatrixBlock> blocks) {
  for (const auto& b : blocks) {
    Grid<double> g = b.values;
    for (double& v : g.values()) {
      if (!std::isfinite(v)) throw std::invalid_argument("external forecast contains a non-finite value");
      if (v < 0.0) {
        v = 0.0;
        ++clamped_;
      }
    }
    forecasts_.insert_or_assign({g.side(), b.slot_index}, std::move(g));
  }
}

Grid<double> ExternalForecastPredictor::predict(const CountField& target) const {
  const auto it = forecasts_.find({target.counts.side(), target.slot_index});
  if (it == forecasts_.end()) {
    throw InsufficientHistory("no external forecast for n_side " + std::to_string(target.counts.side()) +
                              " slot " + std::to_string(target.slot_index));
  }
  return it->second;
}

MaeReport compute_mae(const Predictor& predictor, std::span<const CountField> test) {
  if (test.empty()) throw std::invalid_argument("compute_mae: no test slots");
  const int side = test.front().counts.side();
  CompensatedSum abs_err;
  for (const auto& field : test) {
    if (field.counts.side() != side) throw ShapeMismatch("compute_mae: test fields differ in resolution");
    const Grid<double> forecast = predictor.predict(field);
    if (forecast.side() != side) throw ShapeMismatch("compute_mae: forecast shape does not match test field");
    const auto f = forecast.values();
    const auto a = field.counts.values();
    for (std::size_t i = 0; i < f.size(); ++i) abs_err += std::abs(f[i] - static_cast<double>(a[i]));
  }
  MaeReport rep;
  rep.n = static_cast<long long>(side) * side;
  rep.slots_evaluated = test.size();
  rep.mae = abs_err.value() / (static_cast<double>(rep.n) * static_cast<double>(test.size()));
  rep.total_model_error = static_cast<double>(rep.n) * rep.mae;
  return rep;
}

}  // namespace gridsel
