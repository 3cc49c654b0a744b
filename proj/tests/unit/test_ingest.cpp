#include <catch_amalgamated.hpp>
#include <cmath>

#include "gridsel/errors.hpp"
#include "gridsel/evaluation.hpp"
#include "gridsel/ingest.hpp"
#include "gridsel/rng.hpp"
#include "helpers.hpp"

using namespace gridsel;
using testutil::at;
using testutil::day_of;

namespace {

const SpatialExtent kUnit{0.0, 1.0, 0.0, 1.0};

TimeSlotSpec all_days() {
  TimeSlotSpec s;
  s.day_filter = DayFilter::all;
  return s;
}

}  // namespace

TEST_CASE("ISO-8601 timestamps") {
  const auto t = parse_iso8601("2013-05-28T08:15:30Z");
  REQUIRE(t);
  CHECK(format_iso8601(*t) == "2013-05-28T08:15:30Z");
  CHECK(parse_iso8601("2013-05-28 08:15:30") == t);
  CHECK(parse_iso8601("2013-05-28T10:15:30+02:00") == t);
  CHECK(parse_iso8601("2013-05-28T03:15:30.75-05:00") == t);
  CHECK(parse_iso8601("2013-05-28T08:15") == parse_iso8601("2013-05-28T08:15:00Z"));
  CHECK_FALSE(parse_iso8601("2013-02-30T00:00:00Z"));
  CHECK_FALSE(parse_iso8601("yesterday"));
  CHECK_FALSE(parse_iso8601("2013-05-28T08:15:30Zjunk"));
}

TEST_CASE("parse_events filters, reports and fails as configured") {
  testutil::TempDir dir("ingest");

  SECTION("empty file") {
    testutil::write_file(dir / "e.csv", "");
    const auto r = parse_events(dir / "e.csv", kUnit);
    CHECK(r.events.empty());
    CHECK(r.out_of_extent == 0);
  }

  SECTION("three valid rows and one outside the extent") {
    testutil::write_file(dir / "e.csv",
                         "timestamp,lon,lat\n"
                         "2024-01-01T08:00:00Z,0.1,0.1\n"
                         "2024-01-01T08:01:00Z,0.5,0.5\n"
                         "2024-01-01T08:02:00Z,1.5,0.5\n"
                         "2024-01-01T08:03:00Z,1.0,1.0\n");
    const auto r = parse_events(dir / "e.csv", kUnit);
    CHECK(r.events.size() == 3);
    CHECK(r.out_of_extent == 1);
    CHECK(r.malformed.empty());
  }

  SECTION("malformed rows carry line numbers") {
    testutil::write_file(dir / "e.csv",
                         "timestamp,lon,lat\n"
                         "2024-01-01T08:00:00Z,0.1,0.1\n"
                         "not-a-time,0.1,0.1\n"
                         "2024-01-01T08:00:00Z,nan,0.1\n"
                         "2024-01-01T08:00:00Z,0.1\n");
    const auto r = parse_events(dir / "e.csv", kUnit, OnMalformed::skip);
    CHECK(r.events.size() == 1);
    REQUIRE(r.malformed.size() == 3);
    CHECK(r.malformed[0].line == 3);
    CHECK(r.malformed[1].line == 4);
    CHECK(r.malformed[2].line == 5);

    try {
      parse_events(dir / "e.csv", kUnit, OnMalformed::abort);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }

  SECTION("unreadable file") {
    CHECK_THROWS_AS(parse_events(dir / "missing.csv", kUnit), std::runtime_error);
  }

  SECTION("write then parse round trip") {
    std::vector<EventRecord> ev{{at(day_of(2024, 1, 1), 480), 0.123456789, 0.987654321},
                                {at(day_of(2024, 1, 2), 481), 0.5, 0.25}};
    write_events(dir / "w.csv", ev);
    const auto r = parse_events(dir / "w.csv", kUnit);
    REQUIRE(r.events.size() == 2);
    CHECK(r.events[0].timestamp == ev[0].timestamp);
    CHECK(r.events[0].lon == Catch::Approx(ev[0].lon).margin(1e-9));
    CHECK(r.events[1].lat == 0.25);
  }
}

TEST_CASE("slot arithmetic honours the UTC offset") {
  TimeSlotSpec s;
  const auto d = day_of(2024, 1, 1);
  CHECK(s.slot_index(at(d, 8 * 60 + 29)) == d * 48 + 16);
  CHECK(s.slot_of_day(s.slot_index(at(d, 8 * 60 + 30))) == 17);
  s.utc_offset_minutes = 8 * 60;
  // 20:00 UTC is 04:00 the next local day.
  const auto slot = s.slot_index(at(d, 20 * 60));
  CHECK(s.day_of(slot) == d + 1);
  CHECK(s.slot_of_day(slot) == 8);
  CHECK(s.qualifies(day_of(2024, 1, 5)));      // Friday
  CHECK_FALSE(s.qualifies(day_of(2024, 1, 6)));  // Saturday
  TimeSlotSpec bad;
  bad.slot_minutes = 7;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("bin_events") {
  const auto geo = GridGeometry::flat(4);
  const auto d = day_of(2024, 1, 1);

  SECTION("no events gives zero fields for the requested days") {
    BinOptions opts;
    opts.days = DayRange{d, d + 2};
    opts.slot_of_day = 16;
    const auto f = bin_events({}, kUnit, geo, all_days(), opts);
    REQUIRE(f.size() == 2);
    CHECK(f[0].total() == 0);
    CHECK(f[1].slot_index == (d + 1) * 48 + 16);
    CHECK(bin_events({}, kUnit, geo, all_days()).empty());
  }

  SECTION("corner event lands in cell (0,0); max edge clamps into the last cell") {
    std::vector<EventRecord> ev{{at(d, 480), 0.0, 0.0}, {at(d, 481), 1.0, 1.0}, {at(d, 482), 1.0, 0.0}};
    const auto f = bin_events(ev, kUnit, geo, all_days(), {std::nullopt, 16});
    REQUIRE(f.size() == 1);
    CHECK(f[0].counts(0, 0) == 1);
    CHECK(f[0].counts(3, 3) == 1);
    CHECK(f[0].counts(0, 3) == 1);
  }

  SECTION("1000 uniform events are conserved at every resolution") {
    Philox4x32 rng(7, stream_id(StreamTag::test_fixture, 1));
    std::vector<EventRecord> ev;
    for (int i = 0; i < 1000; ++i) {
      const int minute = static_cast<int>(rng.uniform01() * 3 * 1440);
      ev.push_back({at(d, minute), rng.uniform01(), rng.uniform01()});
    }
    for (int side : {1, 3, 8, 17}) {
      std::int64_t total = 0;
      for (const auto& f : bin_events(ev, kUnit, GridGeometry::flat(side), all_days())) total += f.total();
      CHECK(total == 1000);
    }
  }

  SECTION("MGrid sums of a fine field equal direct coarse binning") {
    Philox4x32 rng(9, stream_id(StreamTag::test_fixture, 2));
    std::vector<EventRecord> ev;
    for (int i = 0; i < 2000; ++i) ev.push_back({at(d, 480 + static_cast<int>(rng.uniform01() * 30)), rng.uniform01(), rng.uniform01()});
    const auto g = GridGeometry::for_partition(3, 100);  // m_side 4, h_side 12
    const auto fine = bin_events(ev, kUnit, g, all_days(), {std::nullopt, 16});
    const auto coarse = bin_events(ev, kUnit, GridGeometry::flat(3), all_days(), {std::nullopt, 16});
    REQUIRE(fine.size() == 1);
    CHECK(mgrid_counts(fine[0]).counts == coarse[0].counts);
  }

  SECTION("binning is deterministic") {
    std::vector<EventRecord> ev{{at(d, 480), 0.3, 0.7}, {at(d, 500), 0.9, 0.1}};
    const auto a = bin_events(ev, kUnit, geo, all_days());
    const auto b = bin_events(ev, kUnit, geo, all_days());
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].counts == b[i].counts);
  }
}

namespace {

CountField field_on(std::int64_t day, int slot_of_day, int side, std::int64_t value) {
  return CountField{GridGeometry::flat(side), day * 48 + slot_of_day, Grid<std::int64_t>(side, value)};
}

}  // namespace

TEST_CASE("estimate_alpha") {
  const auto d = day_of(2024, 1, 1);  // Monday

  SECTION("mean of one") {
    std::vector<CountField> h{field_on(d, 16, 2, 5)};
    const auto a = estimate_alpha(h, 16, TimeSlotSpec{});
    CHECK(a.alphas(1, 1) == 5.0);
  }

  SECTION("mean of two") {
    std::vector<CountField> h{field_on(d, 16, 2, 2), field_on(d + 1, 16, 2, 4)};
    CHECK(estimate_alpha(h, 16, TimeSlotSpec{}).alphas(0, 1) == 3.0);
  }

  SECTION("other slots, weekends and days outside the window are ignored") {
    TimeSlotSpec p;
    p.window_days = 8;  // [d, d + 8)
    std::vector<CountField> h{field_on(d, 16, 1, 10),       // Monday, inside
                              field_on(d, 17, 1, 1000),     // other slot
                              field_on(d + 5, 16, 1, 1000), // Saturday
                              field_on(d - 7, 16, 1, 1000), // before the window
                              field_on(d + 7, 16, 1, 20)};  // next Monday
    const auto a = estimate_alpha(h, 16, p, d + 8);
    CHECK(a.alphas(0, 0) == 15.0);
    p.day_filter = DayFilter::all;
    CHECK(estimate_alpha(h, 16, p, d + 8).alphas(0, 0) == Catch::Approx((10.0 + 1000 + 20) / 3));
  }

  SECTION("nothing qualifies") {
    std::vector<CountField> h{field_on(d + 5, 16, 1, 3)};
    CHECK_THROWS_AS(estimate_alpha(h, 16, TimeSlotSpec{}), InsufficientHistory);
    CHECK_THROWS_AS(estimate_alpha({}, 16, TimeSlotSpec{}), InsufficientHistory);
  }

  SECTION("30 days of Poisson(5) estimate alpha within 3 sigma for >= 99% of cells") {
    AlphaField truth{GridGeometry::flat(32), 16, Grid<double>(32, 5.0)};
    const auto draws = generate_poisson_field(truth, 30, 11, d * 48 + 16);
    // Consecutive slot indices stand in for days; the estimator only needs the slot of day.
    std::vector<CountField> h;
    for (std::size_t i = 0; i < draws.size(); ++i) {
      h.push_back(draws[i]);
      h.back().slot_index = (d + static_cast<std::int64_t>(i)) * 48 + 16;
    }
    TimeSlotSpec p;
    p.day_filter = DayFilter::all;
    const auto a = estimate_alpha(h, 16, p);
    const double tol = 3.0 * std::sqrt(5.0 / 30.0);
    int inside = 0;
    for (double v : a.alphas.values()) inside += std::abs(v - 5.0) <= tol;
    CHECK(inside >= 0.99 * 32 * 32);
  }
}

TEST_CASE("rebin_alpha, subdivision and aggregation") {
  const auto d = day_of(2024, 1, 1);
  TimeSlotSpec p;
  p.day_filter = DayFilter::all;

  SECTION("events on a regular lattice give a constant field at any dividing side") {
    std::vector<EventRecord> ev;
    for (int day = 0; day < 2; ++day) {
      for (int i = 0; i < 24; ++i) {
        for (int j = 0; j < 24; ++j) ev.push_back({at(d + day, 485), (j + 0.5) / 24, (i + 0.5) / 24});
      }
    }
    for (int side : {1, 2, 3, 4, 6, 8, 12, 24}) {
      const auto a = rebin_alpha(ev, kUnit, GridGeometry::flat(side), p, 16);
      const double expect = 576.0 / (side * side);
      for (double v : a.alphas.values()) CHECK(v == expect);
    }
  }

  SECTION("merged cells carry the sum of their sub-cells") {
    Philox4x32 rng(3, stream_id(StreamTag::test_fixture, 3));
    std::vector<EventRecord> ev;
    for (int i = 0; i < 3000; ++i) {
      ev.push_back({at(d + static_cast<int>(rng.uniform01() * 4), 480 + static_cast<int>(rng.uniform01() * 30)),
                    rng.uniform01(), rng.uniform01()});
    }
    const auto fine = rebin_alpha(ev, kUnit, GridGeometry::flat(12), p, 16);
    const auto coarse = rebin_alpha(ev, kUnit, GridGeometry::flat(4), p, 16);
    const auto merged = aggregate_alpha(fine, 3);
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) CHECK(merged.alphas(r, c) == Catch::Approx(coarse.alphas(r, c)).epsilon(1e-12));
    }
  }

  SECTION("subdivide spreads alpha evenly and aggregate undoes it") {
    AlphaField a{GridGeometry::flat(2), 0, Grid<double>(2, std::vector<double>{1, 2, 3, 4})};
    const auto s = subdivide_alpha(a, 2);
    CHECK(s.alphas.side() == 4);
    CHECK(s.alphas(0, 0) == 0.25);
    CHECK(s.alphas(3, 3) == 1.0);
    CHECK(aggregate_alpha(s, 2).alphas == a.alphas);
  }
}
