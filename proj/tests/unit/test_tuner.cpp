#include <catch_amalgamated.hpp>
#include <cmath>
#include <nlohmann/json.hpp>

#include "gridsel/errors.hpp"
#include "gridsel/evaluation.hpp"
#include "gridsel/expression.hpp"
#include "gridsel/rng.hpp"
#include "gridsel/tuner.hpp"
#include "helpers.hpp"

using namespace gridsel;

namespace {

std::vector<double> curve(int max_side, const std::function<double(int)>& f) {
  std::vector<double> v;
  for (int s = 1; s <= max_side; ++s) v.push_back(f(s));
  return v;
}

int ceil_log_1_5(int x) { return static_cast<int>(std::ceil(std::log(static_cast<double>(x)) / std::log(1.5))); }

class FailingObjective : public Objective {
 public:
  FailingObjective() : Objective(50) {}

 protected:
  double compute(int n_side) override {
    if (n_side > 30) throw std::runtime_error("boom");
    return -n_side;
  }
};

}  // namespace

TEST_CASE("ternary search") {
  SECTION("quadratic over [1, 128]") {
    CurveObjective obj(curve(128, [](int s) { return (s - 10.0) * (s - 10.0); }));
    const auto t = ternary_search(obj);
    CHECK(t.chosen_side == 10);
    CHECK(t.chosen_n == 100);
    CHECK(t.chosen_e == 0.0);
    CHECK(obj.computations() <= static_cast<std::size_t>(2 * ceil_log_1_5(128) + 2));
  }

  SECTION("monotone curves pick the ends") {
    CurveObjective up(curve(64, [](int s) { return s; }));
    CHECK(ternary_search(up).chosen_side == 1);
    CurveObjective down(curve(64, [](int s) { return -s; }));
    CHECK(ternary_search(down).chosen_side == 64);
  }

  SECTION("tiny domains") {
    CurveObjective one(std::vector<double>{3.0});
    CHECK(ternary_search(one).chosen_side == 1);
    CurveObjective two(std::vector<double>{3.0, 1.0});
    CHECK(ternary_search(two).chosen_side == 2);
    CurveObjective tie(std::vector<double>{1.0, 1.0});
    CHECK(ternary_search(tie).chosen_side == 1);
    CurveObjective three(std::vector<double>{3.0, 2.0, 1.0});
    CHECK(ternary_search(three).chosen_side == 3);
  }

  SECTION("random strictly unimodal curves match brute force") {
    Philox4x32 rng(4, stream_id(StreamTag::test_fixture, 50));
    for (int trial = 0; trial < 300; ++trial) {
      const int max_side = 2 + static_cast<int>(rng.uniform01() * 63);
      const int opt = 1 + static_cast<int>(rng.uniform01() * max_side);
      std::vector<double> v(static_cast<std::size_t>(max_side));
      v[static_cast<std::size_t>(opt - 1)] = rng.uniform01();
      for (int s = opt - 1; s >= 1; --s) v[s - 1] = v[s] + 0.01 + rng.uniform01();
      for (int s = opt + 1; s <= max_side; ++s) v[s - 1] = v[s - 2] + 0.01 + rng.uniform01();
      CurveObjective a(v), b(v);
      const auto t = ternary_search(a);
      INFO("max_side=" << max_side << " opt=" << opt);
      CHECK(t.chosen_side == brute_force_search(b).chosen_side);
      CHECK(a.computations() <= static_cast<std::size_t>(2 * ceil_log_1_5(max_side) + 2));
    }
  }
}

TEST_CASE("iterative search") {
  SECTION("reaches a unimodal optimum") {
    for (int opt : {3, 16, 29, 60}) {
      CurveObjective obj(curve(64, [opt](int s) { return std::abs(s - opt) + 0.5; }));
      const auto t = iterative_search(obj, 16, 4);
      CHECK(t.chosen_side == opt);
      CHECK(t.p0 == 16);
      CHECK(t.bound == 4);
    }
  }

  SECTION("constant curve stays at p0 after one scan") {
    CurveObjective obj(curve(64, [](int) { return 2.0; }));
    const auto t = iterative_search(obj, 16, 4);
    CHECK(t.chosen_n == 256);
    CHECK(obj.computations() == 9);  // 16 and 16 +- 1..4
  }

  SECTION("boundary probes are skipped") {
    CurveObjective obj(curve(8, [](int s) { return -s; }));
    CHECK(iterative_search(obj, 1, 4).chosen_side == 8);
    CurveObjective obj2(curve(8, [](int s) { return s; }));
    CHECK(iterative_search(obj2, 8, 20).chosen_side == 1);
  }

  SECTION("moves only on strict improvement, so a local minimum can trap it") {
    // Local minimum at 16, global at 40, out of reach of bound 4.
    CurveObjective obj(curve(64, [](int s) { return s <= 25 ? std::abs(s - 16) + 1.0 : std::abs(s - 40) * 0.1; }));
    CHECK(iterative_search(obj, 16, 4).chosen_side == 16);
  }

  SECTION("invalid parameters") {
    CurveObjective obj(curve(8, [](int s) { return s; }));
    CHECK_THROWS_AS(iterative_search(obj, 9, 4), std::invalid_argument);
    CHECK_THROWS_AS(iterative_search(obj, 4, 0), std::invalid_argument);
  }
}

TEST_CASE("brute force search") {
  CurveObjective obj(curve(20, [](int s) { return std::abs(s - 7.5); }));
  const auto all = brute_force_search(obj);
  CHECK(all.chosen_side == 7);  // tie between 7 and 8 goes to the smaller side
  CHECK(all.probes.size() == 20);

  const std::vector<int> one{12};
  CHECK(brute_force_search(obj, std::span<const int>(one)).chosen_side == 12);

  const std::vector<int> some{4, 8, 16};
  const auto t = brute_force_search(obj, std::span<const int>(some));
  CHECK(t.probes.size() == 3);
  CHECK(t.chosen_side == 8);
}

TEST_CASE("memoization across searches") {
  CurveObjective obj(curve(64, [](int s) { return (s - 20.0) * (s - 20.0); }));
  brute_force_search(obj);
  CHECK(obj.computations() == 64);
  const auto t = ternary_search(obj);
  CHECK(obj.computations() == 64);
  CHECK(t.fresh_evaluations() == 0);
  for (const auto& p : t.probes) CHECK(p.cache_hit);
  CHECK_THROWS_AS(obj.probe(65), std::out_of_range);
}

TEST_CASE("failed evaluations carry the partial trace") {
  FailingObjective obj;
  try {
    brute_force_search(obj);
    FAIL("expected SearchFailure");
  } catch (const SearchFailure& f) {
    CHECK(f.trace().probes.size() == 30);
    CHECK(std::string(f.what()) == "boom");
  }
}

TEST_CASE("e ratio") {
  CHECK(e_ratio(2.0, 4.0) == 0.5);
  CHECK(e_ratio(0.0, 0.0) == 1.0);
  CHECK(e_ratio(3.0, 3.0) == 1.0);
}

TEST_CASE("search trace JSON") {
  CurveObjective obj(curve(10, [](int s) { return s; }));
  const auto j = nlohmann::json::parse(to_json(iterative_search(obj, 5, 2)));
  CHECK(j["method"] == "iterative");
  CHECK(j["p0"] == 5);
  CHECK(j["chosen_n"] == 1);
  CHECK(j["probes"].size() > 0);
  CHECK(j["probes"][0].contains("cache_hit"));
  CHECK(parse_search_method("brute") == SearchMethod::brute);
  CHECK_THROWS_AS(parse_search_method("golden"), std::invalid_argument);
}

namespace {

// 8x8 reference grid over the unit square, 12 weekdays of training and 3 test days.
std::shared_ptr<UpperBoundData> small_city(std::uint64_t seed) {
  auto data = std::make_shared<UpperBoundData>();
  data->extent = {0.0, 1.0, 0.0, 1.0};
  data->slot_of_day = 16;
  AlphaField alpha{GridGeometry::flat(8), 16, Grid<double>(8, 0.0)};
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) alpha.alphas(r, c) = (r < 4 && c < 4) ? 6.0 : 0.5 + 0.25 * ((r + c) % 3);
  }
  const auto d0 = testutil::day_of(2024, 1, 1);
  std::vector<std::int64_t> days;
  for (std::int64_t d = d0; d < d0 + 21; ++d) {
    if (data->slots.qualifies(d)) days.push_back(d);
  }
  data->events = synthesize_events(alpha, data->extent, data->slots, days, 16, seed);
  data->test_days = {days[days.size() - 3], days[days.size() - 2], days.back()};
  data->training = {data->test_days.front() - 30, data->test_days.front()};
  return data;
}

PredictorFactory oracle(double noise) {
  return [noise] { return std::make_unique<NoisyOraclePredictor>(noise, 11); };
}

}  // namespace

TEST_CASE("upper bound evaluator") {
  const auto data = small_city(3);
  UpperBoundConfig cfg;
  cfg.n_ref = 64;

  SECTION("m = 1 leaves only the model term") {
    UpperBoundEvaluator ev(data, cfg, oracle(1.0));
    const auto r = ev.report(8);
    CHECK(r.m == 1);
    CHECK(r.e_e_total == 0.0);
    CHECK(r.e_u_total == r.e_m_total);
    CHECK(r.e_m_total > 0.0);
    CHECK(r.slots == 3);
  }

  SECTION("a perfect predictor leaves only the expression term") {
    UpperBoundEvaluator ev(data, cfg, oracle(0.0));
    const auto r = ev.report(2);
    CHECK(r.e_m_total == 0.0);
    CHECK(r.e_u_total == r.e_e_total);
    const auto alpha = rebin_alpha(data->events, data->extent, GridGeometry::for_partition(2, 64), data->slots, 16,
                                   data->training.last);
    CHECK(r.e_e_total == total_expression_error(alpha).total);
  }

  SECTION("empirical real error is bounded by the analytic terms' empirical twins") {
    cfg.empirical_real = true;
    UpperBoundEvaluator ev(data, cfg, oracle(1.0));
    const auto r = ev.report(4);
    REQUIRE(r.e_r_empirical);
    CHECK(*r.e_r_empirical <= *r.e_m_empirical + *r.e_e_empirical);
  }

  SECTION("memoized by n_side and shared expression cache") {
    auto cache = std::make_shared<ExpressionCache>();
    UpperBoundEvaluator a(data, cfg, oracle(1.0), cache);
    UpperBoundEvaluator b(data, cfg, oracle(3.0), cache);
    const auto pa = a.probe(2);
    CHECK_FALSE(pa.cache_hit);
    CHECK(a.probe(2).cache_hit);
    REQUIRE(cache->find(2));
    CHECK(b.report(2).e_e_total == a.report(2).e_e_total);
    CHECK(b.report(2).e_m_total != a.report(2).e_m_total);
  }

  SECTION("dry run with a MAE table") {
    cfg.mae_table = std::map<int, double>{{1, 5.0}, {2, 1.5}};
    UpperBoundEvaluator ev(data, cfg, {});
    CHECK(ev.report(2).e_m_total == 6.0);
    CHECK_THROWS_AS(ev.report(3), StageError);
  }

  SECTION("missing training history names the model stage") {
    auto bad = std::make_shared<UpperBoundData>(*data);
    bad->training = {bad->training.first - 400, bad->training.first - 300};
    UpperBoundEvaluator ev(bad, cfg, [] { return std::make_unique<HistoricalMeanPredictor>(TimeSlotSpec{}); });
    try {
      ev.report(2);
      FAIL("expected StageError");
    } catch (const StageError& e) {
      CHECK(e.stage() == "model");
    }
  }

  SECTION("searches run on the evaluator") {
    UpperBoundEvaluator ev(data, cfg, oracle(1.0));
    const auto brute = brute_force_search(ev);
    const auto tern = ternary_search(ev);
    CHECK(brute.chosen_e <= tern.chosen_e);
    CHECK(ev.reports().size() == 8);
  }
}
