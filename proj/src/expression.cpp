#include "gridsel/expression.hpp"

#include <boost/random/poisson_distribution.hpp>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "gridsel/errors.hpp"
#include "gridsel/rng.hpp"
#include "gridsel/summation.hpp"

namespace gridsel {

namespace {

// exp(-700) is comfortably inside the normal double range.
constexpr double kLinearLimit = 700.0;

double log_pmf(std::int64_t k, double rate) {
  if (rate == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  const double kd = static_cast<double>(k);
  return kd * std::log(rate) - rate - std::lgamma(kd + 1.0);
}

// Walks P(Z = k) for k = 0, 1, 2, ... with Z ~ Pois(rate) using
// P(k+1) = P(k) rate / (k+1). For rates where e^{-rate} would underflow the walk
// starts in log space and switches to the linear recurrence, re-anchored on a
// directly evaluated log pmf, once the probabilities become representable.
class PoissonSweep {
 public:
  explicit PoissonSweep(double rate) : rate_(rate) {
    if (rate_ <= kLinearLimit) {
      linear_ = true;
      p_ = std::exp(-rate_);
    } else {
      log_rate_ = std::log(rate_);
      log_p_ = -rate_;
    }
  }

  double value() const { return linear_ ? p_ : std::exp(log_p_); }

  // Past the mode and underflowed: every later probability is exactly zero.
  bool exhausted() const { return linear_ && p_ == 0.0 && static_cast<double>(k_) > rate_; }

  void advance() {
    ++k_;
    if (linear_) {
      p_ = p_ * rate_ / static_cast<double>(k_);
      return;
    }
    log_p_ += log_rate_ - std::log(static_cast<double>(k_));
    if (log_p_ > -kLinearLimit) {
      linear_ = true;
      p_ = std::exp(log_pmf(k_, rate_));
    }
  }

 private:
  double rate_;
  double log_rate_ = 0.0;
  double log_p_ = 0.0;
  double p_ = 0.0;
  std::int64_t k_ = 0;
  bool linear_ = false;
};

}  // namespace

void ExprErrorInput::validate() const {
  if (!std::isfinite(alpha_j) || alpha_j < 0.0 || !std::isfinite(alpha_rest) || alpha_rest < 0.0) {
    throw std::invalid_argument("expression error: rates must be finite and non-negative");
  }
  if (m < 1) throw std::invalid_argument("expression error: m must be >= 1");
  if (k < 1) throw std::invalid_argument("expression error: K must be >= 1");
}

double expr_error_reference(const ExprErrorInput& in) {
  in.validate();
  if (in.m == 1) return 0.0;
  const std::int64_t m1 = in.m - 1;
  const std::int64_t last = m1 * in.k;
  const double inv_m = 1.0 / in.m;

  std::vector<double> log_rest(static_cast<std::size_t>(last) + 1);
  for (std::int64_t km = 0; km <= last; ++km) log_rest[static_cast<std::size_t>(km)] = log_pmf(km, in.alpha_rest);

  CompensatedSum total;
  for (std::int64_t kh = 0; kh <= in.k; ++kh) {
    const double lx = log_pmf(kh, in.alpha_j);
    if (std::isinf(lx)) continue;
    for (std::int64_t km = 0; km <= last; ++km) {
      const double ly = log_rest[static_cast<std::size_t>(km)];
      if (std::isinf(ly)) continue;
      const double weight = static_cast<double>(std::llabs(m1 * kh - km)) * inv_m;
      total += weight * std::exp(lx + ly);
    }
  }
  return total.value();
}

double expr_error_naive(const ExprErrorInput& in) {
  in.validate();
  if (in.m == 1) return 0.0;
  const std::int64_t m1 = in.m - 1;
  const std::int64_t last = m1 * in.k;
  const double inv_m = 1.0 / in.m;

  CompensatedSum total;
  PoissonSweep x(in.alpha_j);
  for (std::int64_t kh = 0; kh <= in.k; ++kh, x.advance()) {
    const double p1 = x.value();
    PoissonSweep y(in.alpha_rest);
    for (std::int64_t km = 0; km <= last; ++km, y.advance()) {
      const double weight = static_cast<double>(std::llabs(m1 * kh - km)) * inv_m;
      total += weight * p1 * y.value();
    }
  }
  return total.value();
}

double expr_error_fast(const ExprErrorInput& in, TailMode tail) {
  in.validate();
  if (in.m == 1) return 0.0;
  const bool skip = tail == TailMode::skip_underflow;
  const std::int64_t m1 = in.m - 1;
  const std::int64_t last = m1 * in.k;

  // Totals of P(Y=km) and km P(Y=km) over the whole truncated range.
  CompensatedSum mass_all, moment_all;
  {
    PoissonSweep y(in.alpha_rest);
    for (std::int64_t km = 0; km <= last; ++km, y.advance()) {
      if (skip && y.exhausted()) break;
      const double q = y.value();
      mass_all += q;
      moment_all += static_cast<double>(km) * q;
    }
  }
  const double mass_total = mass_all.value();
  const double moment_total = moment_all.value();

  // Row kh splits at t = (m-1) kh: km <= t carries I = +1, km > t carries I = -1
  // (the km == t term has zero weight either way).
  //   sum_km I q = 2 A(t) - A(last),   sum_km I km q = 2 B(t) - B(last)
  CompensatedSum mass_upto, moment_upto, e1, e2;
  PoissonSweep y(in.alpha_rest);
  std::int64_t next_km = 0;
  bool rest_done = false;
  PoissonSweep x(in.alpha_j);
  for (std::int64_t kh = 0; kh <= in.k; ++kh, x.advance()) {
    if (skip && x.exhausted()) break;
    const double p = x.value();
    const std::int64_t split = m1 * kh;
    while (!rest_done && next_km <= split) {
      if (skip && y.exhausted()) {
        rest_done = true;
        break;
      }
      const double q = y.value();
      mass_upto += q;
      moment_upto += static_cast<double>(next_km) * q;
      ++next_km;
      y.advance();
    }
    const double e1_row = 2.0 * mass_upto.value() - mass_total;
    const double e2_row = 2.0 * moment_upto.value() - moment_total;
    e1 += static_cast<double>(kh) * p * e1_row;
    e2 += p * e2_row;
  }
  return (static_cast<double>(m1) * e1.value() - e2.value()) / in.m;
}

int adaptive_truncation(double alpha_j, double alpha_rest, int k) {
  const double s = alpha_j + alpha_rest;
  const double need = std::ceil(s + 12.0 * std::sqrt(s) + 20.0);
  if (need >= static_cast<double>(std::numeric_limits<int>::max())) {
    throw std::invalid_argument("adaptive truncation: rate too large");
  }
  return std::max(k, static_cast<int>(need));
}

double expression_error_bound(double alpha_j, double alpha_rest, int m) {
  return (1.0 - 2.0 / m) * alpha_j + (alpha_j + alpha_rest) / m;
}

MonteCarloEstimate expr_error_monte_carlo(double alpha_j, double alpha_rest, int m, std::int64_t samples,
                                          std::uint64_t seed) {
  ExprErrorInput{alpha_j, alpha_rest, m, 1}.validate();
  if (samples < 1) throw std::invalid_argument("monte carlo: samples must be >= 1");

  Philox4x32 rng(seed, stream_id(StreamTag::monte_carlo, 0));
  using Dist = boost::random::poisson_distribution<std::int64_t, double>;
  std::optional<Dist> own, rest;
  if (alpha_j > 0.0) own.emplace(alpha_j);
  if (alpha_rest > 0.0) rest.emplace(alpha_rest);

  const std::int64_t m1 = m - 1;
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t i = 0; i < samples; ++i) {
    const std::int64_t x = own ? (*own)(rng) : 0;
    const std::int64_t y = rest ? (*rest)(rng) : 0;
    const double d = static_cast<double>(std::llabs(m1 * x - y)) / m;
    const double delta = d - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (d - mean);
  }
  MonteCarloEstimate out;
  out.estimate = mean;
  if (samples > 1) {
    const double var = m2 / static_cast<double>(samples - 1);
    out.std_error = std::sqrt(var / static_cast<double>(samples));
  }
  return out;
}

namespace {

struct RatePairHash {
  std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
    return std::hash<std::uint64_t>{}(p.first * 0x9E3779B97F4A7C15ULL ^ p.second);
  }
};

std::uint64_t bits_of(double v) {
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

}  // namespace

ExpressionErrorTotals total_expression_error(const AlphaField& field, const ExpressionErrorOptions& options) {
  field.validate();
  if (options.k < 1) throw std::invalid_argument("expression error: K must be >= 1");
  const GridGeometry& g = field.geometry;
  const int h = g.h_side;
  const int ms = g.m_side;
  const long long m_ll = g.m();
  if (m_ll > std::numeric_limits<int>::max()) throw std::invalid_argument("expression error: m too large");
  const int m = static_cast<int>(m_ll);

  ExpressionErrorTotals out{0.0, Grid<double>(h, 0.0)};
  if (m == 1) return out;

  // Cells sharing (alpha_ij, alpha_rest) bit-for-bit share a value; empty cells
  // in one MGrid are the common case.
  std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, double, RatePairHash> cache;

  for (int bi = 0; bi < g.n_side; ++bi) {
    for (int bj = 0; bj < g.n_side; ++bj) {
      CompensatedSum block;
      for (int r = bi * ms; r < (bi + 1) * ms; ++r) {
        for (int c = bj * ms; c < (bj + 1) * ms; ++c) block += field.alphas(r, c);
      }
      const double block_sum = block.value();
      for (int r = bi * ms; r < (bi + 1) * ms; ++r) {
        for (int c = bj * ms; c < (bj + 1) * ms; ++c) {
          const double a = field.alphas(r, c);
          const double rest = std::max(0.0, block_sum - a);
          const auto key = std::make_pair(bits_of(a), bits_of(rest));
          double value;
          if (auto it = cache.find(key); it != cache.end()) {
            value = it->second;
          } else {
            const int k = options.adaptive_k ? adaptive_truncation(a, rest, options.k) : options.k;
            value = expr_error_fast(ExprErrorInput{a, rest, m, k}, TailMode::skip_underflow);
            cache.emplace(key, value);
          }
          // The truncated series sits strictly below the bound; allow rounding only.
          const double bound = expression_error_bound(a, rest, m);
          if (value > bound * (1.0 + 1e-12)) {
            throw ConsistencyError("expression error " + std::to_string(value) + " exceeds bound " +
                                   std::to_string(bound) + " at cell (" + std::to_string(r) + "," +
                                   std::to_string(c) + ")");
          }
          out.per_cell(r, c) = value;
        }
      }
    }
  }

  CompensatedSum total;
  for (double v : out.per_cell.values()) total += v;
  out.total = total.value();
  const double aggregate_bound = 2.0 * (1.0 - 1.0 / m) * field.total();
  if (out.total > aggregate_bound * (1.0 + 1e-12)) {
    throw ConsistencyError("total expression error exceeds 2(1-1/m) sum(alpha)");
  }
  return out;
}

std::vector<KScanPoint> scan_k_convergence(const ExprErrorInput& in, std::span<const int> k_values) {
  std::vector<KScanPoint> points;
  int previous = 0;
  for (int k : k_values) {
    if (k <= previous) throw std::invalid_argument("scan_k_convergence: K values must be increasing");
    previous = k;
    ExprErrorInput step = in;
    step.k = k;
    const auto start = std::chrono::steady_clock::now();
    const double value = expr_error_fast(step);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    points.push_back({k, value, elapsed.count()});
  }
  return points;
}

}  // namespace gridsel
