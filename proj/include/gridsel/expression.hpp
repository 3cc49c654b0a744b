#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gridsel/grid.hpp"
#include "gridsel/ingest.hpp"

namespace gridsel {

/// Inputs for the expression error of one HGrid j inside an MGrid of m HGrids.
///
/// With X ~ Pois(alpha_j) the HGrid count and Y ~ Pois(alpha_rest) the count of the
/// other m-1 HGrids, the expression error is
///
///   E|X - (X+Y)/m| = sum_{kh>=0} sum_{km>=0} |((m-1)kh - km)/m| P(X=kh) P(Y=km),
///
/// truncated to kh <= k, km <= (m-1)k.
struct ExprErrorInput {
  double alpha_j = 0.0;
  double alpha_rest = 0.0;
  int m = 1;
  int k = 250;

  void validate() const;
};

/// How the fast engine treats Poisson tails whose probabilities have underflowed
/// to exactly zero. Skipping them adds only +0.0 terms, so both modes return
/// bit-identical values; `full` keeps the O(mK) loop shape.
enum class TailMode { full, skip_underflow };

/// Direct double sum with every probability evaluated independently in log space.
double expr_error_reference(const ExprErrorInput& in);

/// O(mK^2): row-by-row sum where P(Y=km) is advanced by the ratio
/// alpha_rest / (km + 1).
double expr_error_naive(const ExprErrorInput& in);

/// O(mK): splits |d| = I(d) d, so the inner sum for row kh only needs the partial
/// sums of P(Y=km) and km P(Y=km) up to (m-1)kh, which grow incrementally with kh.
double expr_error_fast(const ExprErrorInput& in, TailMode tail = TailMode::full);

/// max(k, ceil(s + 12 sqrt(s) + 20)) with s = alpha_j + alpha_rest.
int adaptive_truncation(double alpha_j, double alpha_rest, int k);

/// ((1 - 2/m) alpha_j + (alpha_j + alpha_rest)/m), the per-HGrid upper bound.
double expression_error_bound(double alpha_j, double alpha_rest, int m);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Simulates |(X+Y)/m - X| with X ~ Pois(alpha_j), Y ~ Pois(alpha_rest).
MonteCarloEstimate expr_error_monte_carlo(double alpha_j, double alpha_rest, int m, std::int64_t samples,
                                          std::uint64_t seed);

struct ExpressionErrorOptions {
  int k = 250;
  bool adaptive_k = false;
};

struct ExpressionErrorTotals {
  double total = 0.0;
  Grid<double> per_cell;
};

/// Expression error of every HGrid, with alpha_rest = MGrid alpha sum - alpha_ij.
/// Throws ConsistencyError if any cell breaks the per-HGrid bound or the total
/// breaks 2(1 - 1/m) sum(alpha).
ExpressionErrorTotals total_expression_error(const AlphaField& field, const ExpressionErrorOptions& options = {});

struct KScanPoint {
  int k = 0;
  double value = 0.0;
  double seconds = 0.0;
};

/// Fast-engine value and wall time for each truncation level.
std::vector<KScanPoint> scan_k_convergence(const ExprErrorInput& in, std::span<const int> k_values);

}  // namespace gridsel
