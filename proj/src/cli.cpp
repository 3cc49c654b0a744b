#include "gridsel/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "gridsel/errors.hpp"
#include "gridsel/evaluation.hpp"
#include "gridsel/expression.hpp"
#include "gridsel/field_io.hpp"
#include "gridsel/ingest.hpp"
#include "gridsel/prediction.hpp"
#include "gridsel/report.hpp"
#include "gridsel/tuner.hpp"
#include "gridsel/uniformity.hpp"

namespace gridsel {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// Failure inside a named pipeline stage; reported as "error [stage]: ...".
struct CliFailure : std::runtime_error {
  CliFailure(std::string stage, const std::string& what) : std::runtime_error(what), stage(std::move(stage)) {}
  std::string stage;
};

template <typename F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const CliFailure&) {
    throw;
  } catch (const StageError& ex) {
    throw CliFailure(ex.stage(), ex.what());
  } catch (const std::exception& ex) {
    throw CliFailure(name, ex.what());
  }
}

struct Common {
  std::string extent = "0,0,1,1";
  int slot_minutes = 30;
  int window_days = 30;
  std::string day_filter = "weekdays";
  int utc_offset = 0;
  std::string slot_time = "08:00";
  int nref_side = 128;
  int k = 250;
  bool adaptive_k = false;
  std::uint64_t seed = 1;
  std::string out = ".";
  std::string on_malformed = "skip";

  SpatialExtent spatial() const { return SpatialExtent::parse(extent); }

  TimeSlotSpec slots() const {
    TimeSlotSpec s;
    s.slot_minutes = slot_minutes;
    s.window_days = window_days;
    s.day_filter = day_filter == "all" ? DayFilter::all : DayFilter::weekdays;
    s.utc_offset_minutes = utc_offset;
    s.validate();
    return s;
  }

  int slot_of_day() const {
    int hh = 0, mm = 0;
    char colon = 0;
    std::istringstream in(slot_time);
    if (!(in >> hh >> colon >> mm) || colon != ':' || hh < 0 || hh > 23 || mm < 0 || mm > 59) {
      throw std::invalid_argument("slot time must be HH:MM, got '" + slot_time + "'");
    }
    const int minutes = hh * 60 + mm;
    if (minutes % slot_minutes != 0) throw std::invalid_argument("slot time is not aligned to the slot length");
    return minutes / slot_minutes;
  }

  long long n_ref() const { return static_cast<long long>(nref_side) * nref_side; }

  fs::path out_dir() const {
    fs::create_directories(out);
    return fs::path(out);
  }
};

struct PredictorOptions {
  std::string kind = "mean";
  double noise = 1.0;
  std::string forecasts;
};

std::int64_t parse_date(const std::string& text) {
  const auto t = parse_iso8601(text + "T00:00:00Z");
  if (!t) throw std::invalid_argument("bad date '" + text + "' (expected YYYY-MM-DD)");
  return std::chrono::floor<std::chrono::days>(*t).time_since_epoch().count();
}

std::string format_date(std::int64_t day) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::vector<EventRecord> load_events(const Common& c, const std::string& path, std::ostream& err) {
  return stage("parse", [&] {
    if (!fs::exists(path)) throw std::runtime_error("events file not found: " + path);
    const auto mode = c.on_malformed == "abort" ? OnMalformed::abort : OnMalformed::skip;
    ParseResult res = parse_events(path, c.spatial(), mode);
    for (const auto& issue : res.malformed) {
      err << "warning: " << path << ":" << issue.line << ": " << issue.message << " (skipped)\n";
    }
    if (res.out_of_extent > 0) err << "warning: " << res.out_of_extent << " events outside the extent\n";
    return std::move(res.events);
  });
}

PredictorFactory make_factory(const PredictorOptions& p, const Common& c, std::ostream& err) {
  if (p.kind == "mean") {
    const TimeSlotSpec slots = c.slots();
    return [slots] { return std::make_unique<HistoricalMeanPredictor>(slots); };
  }
  if (p.kind == "oracle") {
    const double noise = p.noise;
    const std::uint64_t seed = c.seed;
    return [noise, seed] { return std::make_unique<NoisyOraclePredictor>(noise, seed); };
  }
  if (p.forecasts.empty()) throw std::invalid_argument("--predictor external needs --forecasts");
  auto blocks = std::make_shared<std::vector<MatrixBlock>>(read_matrix_file(p.forecasts));
  const ExternalForecastPredictor probe(*blocks);
  if (probe.clamped() > 0) err << "warning: clamped " << probe.clamped() << " negative forecasts to 0\n";
  return [blocks] { return std::make_unique<ExternalForecastPredictor>(*blocks); };
}

/// Training window and test days for the tuned slot. Without --test-days the last
/// day carrying events is the test day.
std::shared_ptr<UpperBoundData> make_data(const Common& c, std::vector<EventRecord> events,
                                          const std::vector<std::string>& test_dates) {
  auto data = std::make_shared<UpperBoundData>();
  data->extent = c.spatial();
  data->slots = c.slots();
  data->slot_of_day = c.slot_of_day();
  for (const auto& d : test_dates) data->test_days.push_back(parse_date(d));
  if (data->test_days.empty()) {
    if (events.empty()) throw std::invalid_argument("no events to derive a test day from");
    std::int64_t last = data->slots.local_day(events.front().timestamp);
    for (const auto& e : events) last = std::max(last, data->slots.local_day(e.timestamp));
    data->test_days.push_back(last);
  }
  std::sort(data->test_days.begin(), data->test_days.end());
  const std::int64_t first_test = data->test_days.front();
  data->training = {first_test - c.window_days, first_test};
  data->events = std::move(events);
  return data;
}

std::map<int, double> read_mae_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open MAE table: " + path);
  std::map<int, double> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || line.rfind("n_side", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(line_no, "expected n_side,mae");
    try {
      table[std::stoi(line.substr(0, comma))] = std::stod(line.substr(comma + 1));
    } catch (const std::logic_error&) {
      throw ParseError(line_no, "bad number in MAE table");
    }
  }
  return table;
}

json report_json(const ErrorReport& r) { return json::parse(to_json(r)); }

std::string sig(double v) { return format_sig(v); }

// ---- commands ---------------------------------------------------------------

int cmd_ingest(const Common& c, const std::string& events_path, int side, std::ostream& out, std::ostream& err) {
  const auto mode = c.on_malformed == "abort" ? OnMalformed::abort : OnMalformed::skip;
  const ParseResult res = stage("parse", [&] {
    if (!fs::exists(events_path)) throw std::runtime_error("events file not found: " + events_path);
    return parse_events(events_path, c.spatial(), mode);
  });
  for (const auto& issue : res.malformed) {
    err << "warning: " << events_path << ":" << issue.line << ": " << issue.message << " (skipped)\n";
  }
  const auto fields = stage("bin", [&] { return bin_events(res.events, c.spatial(), GridGeometry::flat(side), c.slots()); });
  std::int64_t binned = 0;
  stage("write", [&] {
    const fs::path dir = c.out_dir();
    std::ofstream archive(dir / "counts.txt");
    if (!archive) throw std::runtime_error("cannot write " + (dir / "counts.txt").string());
    for (const auto& f : fields) {
      write_matrix(archive, f.slot_index, f.counts);
      binned += f.total();
    }
  });
  json summary;
  summary["events"] = res.events.size();
  summary["out_of_extent"] = res.out_of_extent;
  summary["malformed"] = res.malformed.size();
  summary["fields"] = fields.size();
  summary["side"] = side;
  summary["total_count"] = binned;
  stage("write", [&] { write_text(c.out_dir() / "ingest_summary.json", summary.dump(2)); });
  out << summary.dump(2) << '\n';
  return 0;
}

int cmd_alpha(const Common& c, const std::string& events_path, int side, const std::string& end_date,
              std::ostream& out, std::ostream& err) {
  const auto events = load_events(c, events_path, err);
  const AlphaField alpha = stage("alpha", [&] {
    std::optional<std::int64_t> end;
    if (!end_date.empty()) end = parse_date(end_date);
    return rebin_alpha(events, c.spatial(), GridGeometry::flat(side), c.slots(), c.slot_of_day(), end);
  });
  stage("write", [&] {
    std::ofstream f(c.out_dir() / "alpha.txt");
    write_matrix(f, alpha.slot_of_day, alpha.alphas);
  });
  json j;
  j["side"] = side;
  j["slot_of_day"] = alpha.slot_of_day;
  j["alpha_total"] = round_sig(alpha.total());
  out << j.dump(2) << '\n';
  return 0;
}

int cmd_dalpha(const Common& c, const std::string& events_path, const std::vector<int>& sides, double threshold,
               std::ostream& out, std::ostream& err) {
  if (sides.size() < 3) {
    err << "error [usage]: dalpha needs at least 3 candidate sides\n";
    return 2;
  }
  const auto events = load_events(c, events_path, err);
  const DAlphaCurve curve =
      stage("uniformity", [&] { return scan_d_alpha(events, c.spatial(), c.slots(), sides, c.slot_of_day()); });
  const NSelection pick = stage("uniformity", [&] { return select_N(curve, threshold); });
  stage("write", [&] {
    std::ofstream f(c.out_dir() / "dalpha.csv");
    write_curve(f, curve);
  });
  if (!pick.plateau_found) err << "warning: no plateau in the D_alpha curve; using the largest candidate\n";
  json j;
  j["recommended_side"] = pick.side;
  j["recommended_N"] = pick.n_ref;
  j["plateau_found"] = pick.plateau_found;
  auto pts = json::array();
  for (const auto& p : curve.points) pts.push_back({{"N", p.n_ref}, {"d_alpha", round_sig(p.d_alpha)}});
  j["curve"] = pts;
  out << j.dump(2) << '\n';
  return 0;
}

struct EeArgs {
  std::string alpha_file;
  std::string events;
  int n_side = 16;
  std::string single;  // "alpha_j,alpha_rest,m"
  std::string engine = "fast";
  std::vector<int> k_scan;
};

int cmd_ee(const Common& c, const EeArgs& a, std::ostream& out, std::ostream& err) {
  if (!a.single.empty()) {
    ExprErrorInput in;
    {
      std::istringstream s(a.single);
      char c1 = 0, c2 = 0;
      if (!(s >> in.alpha_j >> c1 >> in.alpha_rest >> c2 >> in.m) || c1 != ',' || c2 != ',') {
        err << "error [usage]: --single expects alpha_j,alpha_rest,m\n";
        return 2;
      }
    }
    in.k = c.k;
    json j;
    if (!a.k_scan.empty()) {
      const auto points = stage("expression", [&] { return scan_k_convergence(in, a.k_scan); });
      stage("write", [&] {
        std::ofstream f(c.out_dir() / "k_scan.csv");
        f << "K,value,seconds\n";
        for (const auto& p : points) f << p.k << ',' << format_number(p.value) << ',' << sig(p.seconds) << '\n';
      });
      auto arr = json::array();
      for (const auto& p : points) arr.push_back({{"K", p.k}, {"value", round_sig(p.value)}});
      j["k_scan"] = arr;
    } else {
      const double v = stage("expression", [&] {
        if (a.engine == "reference") return expr_error_reference(in);
        if (a.engine == "naive") return expr_error_naive(in);
        return expr_error_fast(in);
      });
      j["engine"] = a.engine;
      j["K"] = in.k;
      j["e_e"] = round_sig(v);
      j["bound"] = round_sig(in.m >= 2 ? expression_error_bound(in.alpha_j, in.alpha_rest, in.m) : 0.0);
    }
    out << j.dump(2) << '\n';
    return 0;
  }

  const GridGeometry g = stage("geometry", [&] {
    auto geo = GridGeometry::for_partition(a.n_side, c.n_ref());
    geo.validate();
    return geo;
  });
  AlphaField alpha;
  if (!a.alpha_file.empty()) {
    alpha = stage("alpha", [&] {
      const auto blocks = read_matrix_file(a.alpha_file);
      if (blocks.empty()) throw std::runtime_error("alpha file holds no matrix");
      if (blocks.front().values.side() != g.h_side) {
        throw ShapeMismatch("alpha file side " + std::to_string(blocks.front().values.side()) +
                            " does not match h_side " + std::to_string(g.h_side));
      }
      AlphaField f{g, static_cast<int>(blocks.front().slot_index), blocks.front().values};
      f.validate();
      return f;
    });
  } else {
    if (a.events.empty()) {
      err << "error [usage]: ee needs --alpha, --events or --single\n";
      return 2;
    }
    const auto events = load_events(c, a.events, err);
    alpha = stage("alpha", [&] { return rebin_alpha(events, c.spatial(), g, c.slots(), c.slot_of_day()); });
  }
  const auto totals = stage("expression", [&] { return total_expression_error(alpha, {c.k, c.adaptive_k}); });
  stage("write", [&] {
    std::ofstream f(c.out_dir() / "ee_cells.txt");
    write_matrix(f, alpha.slot_of_day, totals.per_cell);
  });
  json j;
  j["n_side"] = g.n_side;
  j["n"] = g.n();
  j["m"] = g.m();
  j["h_side"] = g.h_side;
  j["K"] = c.k;
  j["e_e_total"] = round_sig(totals.total);
  j["aggregate_bound"] = round_sig(2.0 * (1.0 - 1.0 / static_cast<double>(g.m())) * alpha.total());
  out << j.dump(2) << '\n';
  return 0;
}

int cmd_eval(const Common& c, const std::string& events_path, const std::vector<int>& n_sides,
             const PredictorOptions& p, const std::vector<std::string>& test_dates, std::ostream& out,
             std::ostream& err) {
  auto events = load_events(c, events_path, err);
  auto data = stage("setup", [&] { return make_data(c, std::move(events), test_dates); });
  const PredictorFactory factory = stage("model", [&] { return make_factory(p, c, err); });
  UpperBoundConfig cfg;
  cfg.n_ref = c.n_ref();
  cfg.k = c.k;
  cfg.adaptive_k = c.adaptive_k;
  cfg.empirical_real = true;
  UpperBoundEvaluator evaluator(data, cfg, factory);
  auto reports = json::array();
  out << "n_side n m E_e E_m E_u E_r\n";
  for (int s : n_sides) {
    const ErrorReport r = stage("evaluation", [&] { return evaluator.report(s); });
    reports.push_back(report_json(r));
    out << r.n_side << ' ' << r.n << ' ' << r.m << ' ' << sig(r.e_e_total) << ' ' << sig(r.e_m_total) << ' '
        << sig(r.e_u_total) << ' ' << sig(*r.e_r_empirical) << '\n';
  }
  json doc;
  doc["slot_of_day"] = data->slot_of_day;
  auto days = json::array();
  for (auto d : data->test_days) days.push_back(format_date(d));
  doc["test_days"] = days;
  doc["predictor"] = p.kind;
  doc["reports"] = reports;
  stage("write", [&] { write_text(c.out_dir() / "report.json", doc.dump(2)); });
  return 0;
}

struct TuneArgs {
  std::string events;
  std::string method = "ternary";
  int p0 = 16;
  int bound = 4;
  std::vector<int> candidates;
  std::string mae_table;
  bool empirical = false;
};

int cmd_tune(const Common& c, const TuneArgs& a, const PredictorOptions& p, const std::vector<std::string>& test_dates,
             std::ostream& out, std::ostream& err) {
  auto events = load_events(c, a.events, err);
  auto data = stage("setup", [&] { return make_data(c, std::move(events), test_dates); });
  UpperBoundConfig cfg;
  cfg.n_ref = c.n_ref();
  cfg.k = c.k;
  cfg.adaptive_k = c.adaptive_k;
  cfg.empirical_real = a.empirical;
  PredictorFactory factory;
  if (!a.mae_table.empty()) {
    cfg.mae_table = stage("model", [&] { return read_mae_table(a.mae_table); });
  }
  if (a.mae_table.empty() || a.empirical) factory = stage("model", [&] { return make_factory(p, c, err); });
  UpperBoundEvaluator evaluator(data, cfg, factory);

  const SearchMethod method = parse_search_method(a.method);
  SearchTrace trace;
  try {
    switch (method) {
      case SearchMethod::ternary: trace = ternary_search(evaluator); break;
      case SearchMethod::iterative: trace = iterative_search(evaluator, a.p0, a.bound); break;
      case SearchMethod::brute:
        trace = a.candidates.empty() ? brute_force_search(evaluator)
                                     : brute_force_search(evaluator, std::span<const int>(a.candidates));
        break;
    }
  } catch (const SearchFailure& ex) {
    write_text(c.out_dir() / "trace.json", to_json(ex.trace()));
    throw CliFailure("search", ex.what());
  } catch (const std::invalid_argument& ex) {
    throw CliFailure("search", ex.what());
  }
  auto reports = json::array();
  for (const auto& r : evaluator.reports()) reports.push_back(report_json(r));
  stage("write", [&] {
    write_text(c.out_dir() / "trace.json", to_json(trace));
    write_text(c.out_dir() / "reports.json", reports.dump(2));
  });
  json j;
  j["method"] = to_string(trace.method);
  j["chosen_side"] = trace.chosen_side;
  j["chosen_n"] = trace.chosen_n;
  j["chosen_e"] = round_sig(trace.chosen_e);
  j["probes"] = trace.probes.size();
  j["fresh_evaluations"] = trace.fresh_evaluations();
  out << j.dump(2) << '\n';
  return 0;
}

struct SynthArgs {
  std::string alpha_file;
  double uniform = -1.0;
  int side = 0;
  std::string start_date = "2024-01-01";
  int days = 20;
  std::string output;
};

int cmd_synth(const Common& c, const SynthArgs& a, std::ostream& out, std::ostream&) {
  const TimeSlotSpec slots = c.slots();
  const int slot_of_day = c.slot_of_day();
  const AlphaField alpha = stage("alpha", [&] {
    if (!a.alpha_file.empty()) {
      const auto blocks = read_matrix_file(a.alpha_file);
      if (blocks.empty()) throw std::runtime_error("alpha file holds no matrix");
      AlphaField f{GridGeometry::flat(blocks.front().values.side()), slot_of_day, blocks.front().values};
      f.validate();
      return f;
    }
    if (a.uniform < 0.0 || a.side < 1) throw std::invalid_argument("synth needs --alpha or --uniform with --side");
    return AlphaField{GridGeometry::flat(a.side), slot_of_day, Grid<double>(a.side, a.uniform)};
  });
  if (a.days < 1) throw CliFailure("usage", "--days must be >= 1");
  std::vector<std::int64_t> days;
  const std::int64_t first = parse_date(a.start_date);
  for (std::int64_t d = first; d < first + a.days; ++d) {
    if (slots.qualifies(d)) days.push_back(d);
  }
  const auto events =
      stage("synth", [&] { return synthesize_events(alpha, c.spatial(), slots, days, slot_of_day, c.seed); });
  const fs::path path = a.output.empty() ? c.out_dir() / "events.csv" : fs::path(a.output);
  stage("write", [&] { write_events(path, events); });
  json j;
  j["events"] = events.size();
  j["days"] = days.size();
  j["alpha_total"] = round_sig(alpha.total());
  j["path"] = path.string();
  out << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grid-size selection for spatiotemporal event prediction", "gridsel"};
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);
  app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");

  Common c;
  app.add_option("--extent", c.extent, "lonmin,latmin,lonmax,latmax")->capture_default_str();
  app.add_option("--slot-minutes", c.slot_minutes, "slot length in minutes")->capture_default_str();
  app.add_option("--window-days", c.window_days, "alpha estimation window in days")->capture_default_str();
  app.add_option("--day-filter", c.day_filter, "days used for estimation")
      ->check(CLI::IsMember({"weekdays", "all"}))
      ->capture_default_str();
  app.add_option("--utc-offset", c.utc_offset, "local time offset in minutes")->capture_default_str();
  app.add_option("--slot-time", c.slot_time, "start of the tuned slot, HH:MM local")->capture_default_str();
  app.add_option("--nref-side", c.nref_side, "sqrt of the reference HGrid count N")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--k", c.k, "series truncation K")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--adaptive-k", c.adaptive_k, "raise K for large rates");
  app.add_option("--seed", c.seed, "random seed")->capture_default_str();
  app.add_option("--out", c.out, "output directory")->capture_default_str();
  app.add_option("--on-malformed", c.on_malformed, "malformed event rows")
      ->check(CLI::IsMember({"skip", "abort"}))
      ->capture_default_str();

  PredictorOptions pred;
  std::vector<std::string> test_dates;
  auto add_predictor = [&](CLI::App* sub) {
    sub->add_option("--predictor", pred.kind, "mean | oracle | external")
        ->check(CLI::IsMember({"mean", "oracle", "external"}))
        ->capture_default_str();
    sub->add_option("--noise", pred.noise, "noise scale of the oracle predictor")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sub->add_option("--forecasts", pred.forecasts, "forecast matrix file for the external predictor");
    sub->add_option("--test-days", test_dates, "held-out days, YYYY-MM-DD")->delimiter(',');
  };

  std::string events_path;
  int side = 128;

  auto* ingest = app.add_subcommand("ingest", "bin events into per-slot count fields");
  ingest->add_option("--events", events_path, "timestamp,lon,lat CSV")->required();
  ingest->add_option("--side", side, "cells per side")->check(CLI::PositiveNumber)->capture_default_str();

  std::string end_date;
  auto* alpha = app.add_subcommand("alpha", "estimate the alpha field for one slot of day");
  alpha->add_option("--events", events_path, "timestamp,lon,lat CSV")->required();
  alpha->add_option("--side", side, "cells per side")->check(CLI::PositiveNumber)->capture_default_str();
  alpha->add_option("--end-date", end_date, "window ends the day before this date");

  std::vector<int> sides;
  double threshold = 0.02;
  auto* dalpha = app.add_subcommand("dalpha", "D_alpha curve and recommended N");
  dalpha->add_option("--events", events_path, "timestamp,lon,lat CSV")->required();
  dalpha->add_option("--sides", sides, "candidate sides, comma separated")->delimiter(',')->required();
  dalpha->add_option("--threshold", threshold, "relative growth threshold")->capture_default_str();

  EeArgs ee_args;
  auto* ee = app.add_subcommand("ee", "analytic expression error");
  ee->add_option("--alpha", ee_args.alpha_file, "alpha matrix at h_side");
  ee->add_option("--events", ee_args.events, "estimate alpha from events instead");
  ee->add_option("--n-side", ee_args.n_side, "MGrids per side")->check(CLI::PositiveNumber)->capture_default_str();
  ee->add_option("--single", ee_args.single, "one HGrid: alpha_j,alpha_rest,m");
  ee->add_option("--engine", ee_args.engine, "engine for --single")
      ->check(CLI::IsMember({"reference", "naive", "fast"}))
      ->capture_default_str();
  ee->add_option("--k-scan", ee_args.k_scan, "K values for a convergence scan with --single")->delimiter(',');

  std::vector<int> n_sides{16};
  auto* eval = app.add_subcommand("eval", "empirical and analytic errors for given n_side values");
  eval->add_option("--events", events_path, "timestamp,lon,lat CSV")->required();
  eval->add_option("--n-side", n_sides, "MGrids per side, comma separated")->delimiter(',')->capture_default_str();
  add_predictor(eval);

  TuneArgs tune_args;
  auto* tune = app.add_subcommand("tune", "search n minimizing the upper bound");
  tune->add_option("--events", tune_args.events, "timestamp,lon,lat CSV")->required();
  tune->add_option("--method", tune_args.method, "ternary | iterative | brute")
      ->check(CLI::IsMember({"ternary", "iterative", "brute"}))
      ->capture_default_str();
  tune->add_option("--p0", tune_args.p0, "iterative start")->capture_default_str();
  tune->add_option("--bound", tune_args.bound, "iterative bound")->capture_default_str();
  tune->add_option("--candidates", tune_args.candidates, "brute-force sides")->delimiter(',');
  tune->add_option("--mae-table", tune_args.mae_table, "dry run: n_side,mae rows");
  tune->add_flag("--empirical", tune_args.empirical, "also measure the empirical real error");
  add_predictor(tune);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "draw Poisson events from an alpha field");
  synth->add_option("--alpha", synth_args.alpha_file, "alpha matrix file");
  synth->add_option("--uniform", synth_args.uniform, "constant alpha per cell");
  synth->add_option("--side", synth_args.side, "cells per side with --uniform");
  synth->add_option("--start-date", synth_args.start_date, "first day, YYYY-MM-DD")->capture_default_str();
  synth->add_option("--days", synth_args.days, "calendar days to cover")->capture_default_str();
  synth->add_option("--output", synth_args.output, "events file (default OUT/events.csv)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest) return cmd_ingest(c, events_path, side, out, err);
    if (*alpha) return cmd_alpha(c, events_path, side, end_date, out, err);
    if (*dalpha) return cmd_dalpha(c, events_path, sides, threshold, out, err);
    if (*ee) return cmd_ee(c, ee_args, out, err);
    if (*eval) return cmd_eval(c, events_path, n_sides, pred, test_dates, out, err);
    if (*tune) return cmd_tune(c, tune_args, pred, test_dates, out, err);
    if (*synth) return cmd_synth(c, synth_args, out, err);
  } catch (const CliFailure& ex) {
    err << "error [" << ex.stage << "]: " << ex.what() << '\n';
    return 1;
  } catch (const ConsistencyError& ex) {
    err << "error [consistency]: " << ex.what() << '\n';
    return 1;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace gridsel
