#include "gridsel/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>

#include "gridsel/errors.hpp"
#include "gridsel/expression.hpp"
#include "gridsel/report.hpp"

namespace gridsel {

// ---- Objective --------------------------------------------------------------

Objective::Objective(int max_side) : max_side_(max_side) {
  if (max_side < 1) throw std::invalid_argument("objective domain must contain at least n_side = 1");
}

Probe Objective::probe(int n_side) {
  if (n_side < 1 || n_side > max_side_) {
    throw std::out_of_range("n_side " + std::to_string(n_side) + " outside [1, " + std::to_string(max_side_) + "]");
  }
  if (auto hit = cached(n_side)) return {n_side, *hit, true, 0.0};
  const auto start = std::chrono::steady_clock::now();
  const double e = compute(n_side);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  std::unique_lock lock(mu_);
  const auto [it, inserted] = memo_.emplace(n_side, e);
  if (inserted) ++computed_;
  return {n_side, it->second, !inserted, elapsed.count()};
}

std::optional<double> Objective::cached(int n_side) const {
  std::shared_lock lock(mu_);
  const auto it = memo_.find(n_side);
  if (it == memo_.end()) return std::nullopt;
  return it->second;
}

std::size_t Objective::computations() const {
  std::shared_lock lock(mu_);
  return computed_;
}

CurveObjective::CurveObjective(std::vector<double> values)
    : Objective(static_cast<int>(values.size())), values_(std::move(values)) {}

double CurveObjective::compute(int n_side) { return values_[static_cast<std::size_t>(n_side - 1)]; }

// ---- ExpressionCache ----------------------------------------------------------

std::optional<double> ExpressionCache::find(int n_side) const {
  std::lock_guard lock(mu_);
  const auto it = values_.find(n_side);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void ExpressionCache::store(int n_side, double value) {
  std::lock_guard lock(mu_);
  values_.emplace(n_side, value);
}

// ---- UpperBoundEvaluator -----------------------------------------------------

namespace {

int max_side_for(long long n_ref) {
  if (n_ref < 1) throw std::invalid_argument("N_ref must be >= 1");
  auto s = static_cast<long long>(std::sqrt(static_cast<double>(n_ref)));
  while (s * s > n_ref) --s;
  while ((s + 1) * (s + 1) <= n_ref) ++s;
  return static_cast<int>(s);
}

bool is_test_day(const UpperBoundData& d, std::int64_t day) {
  return std::find(d.test_days.begin(), d.test_days.end(), day) != d.test_days.end();
}

std::vector<CountField> bin_slot(const UpperBoundData& d, const GridGeometry& g, DayRange days) {
  BinOptions opts;
  opts.days = days;
  opts.slot_of_day = d.slot_of_day;
  return bin_events(d.events, d.extent, g, d.slots, opts);
}

DayRange test_span(const UpperBoundData& d) {
  const auto [lo, hi] = std::minmax_element(d.test_days.begin(), d.test_days.end());
  return {*lo, *hi + 1};
}

}  // namespace

UpperBoundEvaluator::UpperBoundEvaluator(std::shared_ptr<const UpperBoundData> data, UpperBoundConfig config,
                                         PredictorFactory factory, std::shared_ptr<ExpressionCache> expression_cache)
    : Objective(max_side_for(config.n_ref)),
      data_(std::move(data)),
      config_(std::move(config)),
      factory_(std::move(factory)),
      expression_cache_(expression_cache ? std::move(expression_cache) : std::make_shared<ExpressionCache>()) {
  if (!data_) throw std::invalid_argument("upper bound evaluator needs data");
  data_->extent.validate();
  data_->slots.validate();
  if (config_.k < 1) throw std::invalid_argument("K must be >= 1");
  if (!config_.mae_table && !factory_) throw std::invalid_argument("upper bound evaluator needs a predictor");
  if (!config_.mae_table || config_.empirical_real) {
    if (data_->test_days.empty()) throw std::invalid_argument("upper bound evaluator needs test days");
  }
}

double UpperBoundEvaluator::model_error(const GridGeometry& g, ErrorReport& rep) {
  if (config_.mae_table) {
    const auto it = config_.mae_table->find(g.n_side);
    if (it == config_.mae_table->end()) throw std::runtime_error("MAE table has no entry for this n_side");
    if (!(it->second >= 0.0)) throw std::runtime_error("MAE table entry is negative");
    return static_cast<double>(g.n()) * it->second;
  }
  const GridGeometry mgrid = GridGeometry::flat(g.n_side);
  const auto train = bin_slot(*data_, mgrid, data_->training);
  std::vector<CountField> test;
  for (auto& f : bin_slot(*data_, mgrid, test_span(*data_))) {
    if (is_test_day(*data_, data_->slots.day_of(f.slot_index))) test.push_back(std::move(f));
  }
  auto predictor = factory_();
  predictor->fit(train);
  const MaeReport mae = compute_mae(*predictor, test);
  rep.slots = mae.slots_evaluated;
  return mae.total_model_error;
}

double UpperBoundEvaluator::expression_error(const GridGeometry& g) {
  if (auto hit = expression_cache_->find(g.n_side)) return *hit;
  const AlphaField alpha =
      rebin_alpha(data_->events, data_->extent, g, data_->slots, data_->slot_of_day, data_->training.last);
  const double total = total_expression_error(alpha, {config_.k, config_.adaptive_k}).total;
  expression_cache_->store(g.n_side, total);
  return total;
}

void UpperBoundEvaluator::measure_real_error(const GridGeometry& g, ErrorReport& rep) {
  const GridGeometry mgrid = GridGeometry::flat(g.n_side);
  auto predictor = factory_();
  predictor->fit(bin_slot(*data_, mgrid, data_->training));
  const DayRange span = test_span(*data_);
  const auto coarse = bin_slot(*data_, mgrid, span);
  const auto fine = bin_slot(*data_, g, span);
  EvaluationSet ev{g, {}};
  for (std::size_t i = 0; i < fine.size(); ++i) {
    if (!is_test_day(*data_, data_->slots.day_of(fine[i].slot_index))) continue;
    ev.pairs.push_back({predictor->predict(coarse[i]), fine[i].counts});
  }
  const EmpiricalErrors emp = empirical_errors(ev);
  rep.e_r_empirical = emp.real;
  rep.e_m_empirical = emp.model;
  rep.e_e_empirical = emp.expression;
}

ErrorReport UpperBoundEvaluator::report(int n_side) {
  {
    std::lock_guard lock(reports_mu_);
    if (auto it = reports_.find(n_side); it != reports_.end()) return it->second;
  }
  if (n_side < 1 || n_side > max_side()) throw std::out_of_range("n_side outside [1, sqrt(N_ref)]");
  const GridGeometry g = GridGeometry::for_partition(n_side, config_.n_ref);
  ErrorReport rep;
  rep.n_side = n_side;
  rep.n = g.n();
  rep.m = g.m();
  rep.k = config_.k;

  try {
    rep.e_m_total = model_error(g, rep);
  } catch (const std::exception& ex) {
    throw StageError("model", n_side, ex.what());
  }
  try {
    rep.e_e_total = expression_error(g);
  } catch (const std::exception& ex) {
    throw StageError("expression", n_side, ex.what());
  }
  rep.e_u_total = rep.e_e_total + rep.e_m_total;
  if (config_.empirical_real) {
    try {
      measure_real_error(g, rep);
    } catch (const std::exception& ex) {
      throw StageError("evaluation", n_side, ex.what());
    }
  }
  std::lock_guard lock(reports_mu_);
  return reports_.emplace(n_side, rep).first->second;
}

std::vector<ErrorReport> UpperBoundEvaluator::reports() const {
  std::lock_guard lock(reports_mu_);
  std::vector<ErrorReport> out;
  for (const auto& [side, rep] : reports_) out.push_back(rep);
  return out;
}

double UpperBoundEvaluator::compute(int n_side) { return report(n_side).e_u_total; }

// ---- searches ----------------------------------------------------------------

std::string to_string(SearchMethod method) {
  switch (method) {
    case SearchMethod::ternary: return "ternary";
    case SearchMethod::iterative: return "iterative";
    case SearchMethod::brute: return "brute";
  }
  return "unknown";
}

SearchMethod parse_search_method(const std::string& text) {
  if (text == "ternary") return SearchMethod::ternary;
  if (text == "iterative") return SearchMethod::iterative;
  if (text == "brute") return SearchMethod::brute;
  throw std::invalid_argument("unknown search method '" + text + "' (expected ternary, iterative or brute)");
}

std::size_t SearchTrace::fresh_evaluations() const {
  return static_cast<std::size_t>(std::count_if(probes.begin(), probes.end(), [](const Probe& p) { return !p.cache_hit; }));
}

namespace {

class Recorder {
 public:
  Recorder(Objective& objective, SearchTrace& trace) : objective_(objective), trace_(trace) {}

  double operator()(int n_side) {
    Probe p;
    try {
      p = objective_.probe(n_side);
    } catch (const std::exception& ex) {
      throw SearchFailure(trace_, ex.what());
    }
    trace_.probes.push_back(p);
    return p.e;
  }

 private:
  Objective& objective_;
  SearchTrace& trace_;
};

void choose(SearchTrace& trace, int side, double e) {
  trace.chosen_side = side;
  trace.chosen_n = static_cast<long long>(side) * side;
  trace.chosen_e = e;
}

}  // namespace

SearchTrace ternary_search(Objective& objective) {
  SearchTrace trace;
  trace.method = SearchMethod::ternary;
  Recorder e(objective, trace);
  int l = 1;
  int r = objective.max_side();
  while (r - l > 2) {
    const int m_l = (r + 2 * l) / 3;
    const int m_r = (2 * r + l + 2) / 3;
    if (e(m_l) > e(m_r)) {
      l = m_l;
    } else {
      r = m_r;
    }
  }
  if (r - l == 2) {
    int best = l;
    double best_e = e(l);
    for (int s : {l + 1, r}) {
      const double v = e(s);
      if (v < best_e) {
        best = s;
        best_e = v;
      }
    }
    choose(trace, best, best_e);
    return trace;
  }
  const double el = e(l);
  const double er = l == r ? el : e(r);
  if (el > er) {
    choose(trace, r, er);
  } else {
    choose(trace, l, el);
  }
  return trace;
}

SearchTrace iterative_search(Objective& objective, int p0, int bound) {
  const int hi = objective.max_side();
  if (p0 < 1 || p0 > hi) throw std::invalid_argument("p0 must lie in [1, sqrt(N_ref)]");
  if (bound < 1) throw std::invalid_argument("bound must be >= 1");
  SearchTrace trace;
  trace.method = SearchMethod::iterative;
  trace.p0 = p0;
  trace.bound = bound;
  Recorder e(objective, trace);

  int p = p0;
  bool moved = true;
  while (moved) {
    moved = false;
    for (int i = bound; i >= 1 && !moved; --i) {
      const bool up_ok = p + i <= hi;
      const bool down_ok = p - i >= 1;
      const double e_up = up_ok ? e(p + i) : 0.0;
      const double e_down = down_ok ? e(p - i) : 0.0;
      const double here = e(p);
      if (up_ok && here > e_up) {
        p += i;
        moved = true;
      } else if (down_ok && here > e_down) {
        p -= i;
        moved = true;
      }
    }
  }
  choose(trace, p, e(p));
  return trace;
}

SearchTrace brute_force_search(Objective& objective, std::optional<std::span<const int>> candidates) {
  SearchTrace trace;
  trace.method = SearchMethod::brute;
  Recorder e(objective, trace);
  std::vector<int> sides;
  if (candidates) {
    sides.assign(candidates->begin(), candidates->end());
  } else {
    for (int s = 1; s <= objective.max_side(); ++s) sides.push_back(s);
  }
  if (sides.empty()) throw std::invalid_argument("brute force search: no candidates");
  int best = 0;
  double best_e = 0.0;
  for (int s : sides) {
    const double v = e(s);
    if (best == 0 || v < best_e || (v == best_e && s < best)) {
      best = s;
      best_e = v;
    }
  }
  choose(trace, best, best_e);
  return trace;
}

double e_ratio(double best_e, double chosen_e) {
  if (chosen_e == 0.0) return 1.0;
  return best_e / chosen_e;
}

std::string to_json(const SearchTrace& trace) {
  nlohmann::ordered_json j;
  j["method"] = to_string(trace.method);
  if (trace.method == SearchMethod::iterative) {
    j["p0"] = trace.p0;
    j["bound"] = trace.bound;
  }
  auto probes = nlohmann::ordered_json::array();
  for (const auto& p : trace.probes) {
    probes.push_back({{"n_side", p.n_side}, {"e", round_sig(p.e)}, {"cache_hit", p.cache_hit},
                      {"seconds", round_sig(p.seconds)}});
  }
  j["probes"] = probes;
  j["fresh_evaluations"] = trace.fresh_evaluations();
  j["chosen_side"] = trace.chosen_side;
  j["chosen_n"] = trace.chosen_n;
  j["chosen_e"] = round_sig(trace.chosen_e);
  return j.dump(2);
}

}  // namespace gridsel
