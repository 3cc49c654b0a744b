#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridsel/evaluation.hpp"
#include "gridsel/ingest.hpp"
#include "gridsel/prediction.hpp"

namespace gridsel {

struct Probe {
  int n_side = 0;
  double e = 0.0;
  bool cache_hit = false;
  double seconds = 0.0;
};

/// e(n_side) over the integer domain [1, max_side], memoized. Reads take a shared
/// lock; a fresh value is inserted under an exclusive lock and never replaced.
class Objective {
 public:
  explicit Objective(int max_side);
  virtual ~Objective() = default;
  Objective(const Objective&) = delete;
  Objective& operator=(const Objective&) = delete;

  int max_side() const { return max_side_; }
  Probe probe(int n_side);
  std::optional<double> cached(int n_side) const;
  /// Number of values actually computed (cache misses).
  std::size_t computations() const;

 protected:
  virtual double compute(int n_side) = 0;

 private:
  int max_side_;
  mutable std::shared_mutex mu_;
  std::map<int, double> memo_;
  std::size_t computed_ = 0;
};

/// Objective backed by a fixed table: values[s - 1] = e(s).
class CurveObjective : public Objective {
 public:
  explicit CurveObjective(std::vector<double> values);

 protected:
  double compute(int n_side) override;

 private:
  std::vector<double> values_;
};

/// Inputs shared by every candidate: the raw events, the slot being tuned, the
/// training days (predictor fit and alpha window end at training.last) and the
/// held-out test days.
struct UpperBoundData {
  std::vector<EventRecord> events;
  SpatialExtent extent;
  TimeSlotSpec slots;
  int slot_of_day = 16;
  DayRange training;
  std::vector<std::int64_t> test_days;
};

struct UpperBoundConfig {
  long long n_ref = 128 * 128;
  int k = 250;
  bool adaptive_k = false;
  /// Also measure the empirical real error on the test days at HGrid resolution.
  bool empirical_real = false;
  /// Dry run: MAE per n_side supplied by the caller instead of fitting a predictor.
  std::optional<std::map<int, double>> mae_table;
};

/// Total analytic expression error per n_side. It depends only on the data, N and
/// K, so evaluators that differ only in their predictor can share one.
class ExpressionCache {
 public:
  std::optional<double> find(int n_side) const;
  void store(int n_side, double value);

 private:
  mutable std::mutex mu_;
  std::map<int, double> values_;
};

/// e(n_side) = n MAE(f) + sum of analytic expression errors at h_side = n_side m_side.
class UpperBoundEvaluator : public Objective {
 public:
  UpperBoundEvaluator(std::shared_ptr<const UpperBoundData> data, UpperBoundConfig config,
                      PredictorFactory factory, std::shared_ptr<ExpressionCache> expression_cache = {});

  /// Full decomposition for one candidate; throws StageError naming the failing stage.
  ErrorReport report(int n_side);
  std::vector<ErrorReport> reports() const;

 protected:
  double compute(int n_side) override;

 private:
  double model_error(const GridGeometry& g, ErrorReport& rep);
  double expression_error(const GridGeometry& g);
  void measure_real_error(const GridGeometry& g, ErrorReport& rep);

  std::shared_ptr<const UpperBoundData> data_;
  UpperBoundConfig config_;
  PredictorFactory factory_;
  std::shared_ptr<ExpressionCache> expression_cache_;
  mutable std::mutex reports_mu_;
  std::map<int, ErrorReport> reports_;
};

enum class SearchMethod { ternary, iterative, brute };
std::string to_string(SearchMethod method);
SearchMethod parse_search_method(const std::string& text);

struct SearchTrace {
  SearchMethod method = SearchMethod::brute;
  int p0 = 0;
  int bound = 0;
  std::vector<Probe> probes;  // every lookup in order, cache hits included
  int chosen_side = 0;
  long long chosen_n = 0;
  double chosen_e = 0.0;

  std::size_t fresh_evaluations() const;
};

/// Carries the trace recorded before an objective evaluation failed.
class SearchFailure : public std::runtime_error {
 public:
  SearchFailure(SearchTrace trace, const std::string& what)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const SearchTrace& trace() const { return trace_; }

 private:
  SearchTrace trace_;
};

/// Shrinks [l, r] by comparing e at the two third points. When r - l reaches 2 the
/// third points coincide with the ends and the comparison can no longer shrink the
/// interval, so the remaining three points are compared directly.
SearchTrace ternary_search(Objective& objective);

/// Local search from p0: for i = bound..1 move to p+i if it is strictly better,
/// else to p-i if it is strictly better; repeat until a full scan makes no move.
SearchTrace iterative_search(Objective& objective, int p0 = 16, int bound = 4);

/// Every candidate (default 1..max_side); ties go to the smaller side.
SearchTrace brute_force_search(Objective& objective, std::optional<std::span<const int>> candidates = {});

/// min e / chosen e, in (0, 1]; 1 when both are 0.
double e_ratio(double best_e, double chosen_e);

std::string to_json(const SearchTrace& trace);

}  // namespace gridsel
