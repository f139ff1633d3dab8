#include "gapest/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string_view>

#include <json.hpp>

#include "gapest/error.hpp"

namespace gapest::io {

using Json = nlohmann::ordered_json;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void bad_row(std::size_t line, const std::string& why) {
  fail(ErrorCode::parse, "line " + std::to_string(line) + ": " + why);
}

double number(std::string_view token, std::size_t line) {
  double x = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), x);
  if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size() ||
      !std::isfinite(x))
    bad_row(line, "bad number '" + std::string(token) + "'");
  return x;
}

// Calls row(fields, line) for each data line after checking the header.
template <class F>
void read_rows(std::istream& in, std::string_view header, std::size_t columns, F&& row) {
  std::string text;
  std::size_t line = 0;
  bool seen_header = false;
  while (std::getline(in, text)) {
    ++line;
    auto t = trim(text);
    if (t.empty()) continue;
    if (!seen_header) {
      if (t != header)
        bad_row(line, "expected header '" + std::string(header) + "', found '" + std::string(t) + "'");
      seen_header = true;
      continue;
    }
    auto fields = split_row(t);
    if (fields.size() != columns)
      bad_row(line, "expected " + std::to_string(columns) + " fields, found " +
                        std::to_string(fields.size()));
    row(fields, line);
  }
  if (!seen_header) fail(ErrorCode::parse, "missing header '" + std::string(header) + "'");
}

constexpr std::string_view kPairsHeader = "r,s,censored";
constexpr std::string_view kWindowHeader = "kind,value";
constexpr std::string_view kSegmentsHeader = "kind,length";

Json nullable(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

void write_pairs_csv(std::ostream& out, const std::vector<EquilibriumPair>& pairs) {
  out << kPairsHeader << '\n';
  for (const auto& p : pairs)
    out << format_number(p.r) << ',' << format_number(p.s) << ',' << (p.s_censored ? 1 : 0) << '\n';
}

void write_window_csv(std::ostream& out, const std::vector<WindowObservation>& obs) {
  out << kWindowHeader << '\n';
  for (const auto& o : obs) out << to_string(o.kind) << ',' << format_number(o.value) << '\n';
}

void write_segments_csv(std::ostream& out, const std::vector<Segment>& segments) {
  out << kSegmentsHeader << '\n';
  for (const auto& s : segments) out << to_string(s.kind) << ',' << format_number(s.length) << '\n';
}

std::vector<EquilibriumPair> read_pairs_csv(std::istream& in) {
  std::vector<EquilibriumPair> out;
  read_rows(in, kPairsHeader, 3, [&](const auto& f, std::size_t line) {
    EquilibriumPair p{number(f[0], line), number(f[1], line), false};
    if (f[2] == "1")
      p.s_censored = true;
    else if (f[2] != "0")
      bad_row(line, "censored flag must be 0 or 1");
    if (p.r < 0.0 || p.s < 0.0) bad_row(line, "r and s must be nonnegative");
    if (!p.s_censored && !(p.q() > 0.0)) bad_row(line, "uncensored pair with r + s = 0");
    out.push_back(p);
  });
  return out;
}

std::vector<WindowObservation> read_window_csv(std::istream& in) {
  std::vector<WindowObservation> out;
  read_rows(in, kWindowHeader, 2, [&](const auto& f, std::size_t line) {
    WindowObservation o;
    try {
      o.kind = parse_window_kind(f[0]);
    } catch (const Error& e) {
      bad_row(line, e.what());
    }
    o.value = number(f[1], line);
    if (o.value < 0.0) bad_row(line, "value must be nonnegative");
    out.push_back(o);
  });
  return out;
}

std::vector<Segment> read_segments_csv(std::istream& in) {
  std::vector<Segment> out;
  read_rows(in, kSegmentsHeader, 2, [&](const auto& f, std::size_t line) {
    Segment s;
    try {
      s.kind = parse_segment_kind(f[0]);
    } catch (const Error& e) {
      bad_row(line, e.what());
    }
    s.length = number(f[1], line);
    if (!(s.length > 0.0)) bad_row(line, "length must be positive");
    out.push_back(s);
  });
  return out;
}

ObservationData read_observations_csv(std::istream& in) {
  std::string first;
  std::streampos start = in.tellg();
  while (std::getline(in, first) && trim(first).empty()) {
  }
  auto header = trim(first);
  in.clear();
  in.seekg(start);
  if (header == kPairsHeader) return read_pairs_csv(in);
  if (header == kWindowHeader) return read_window_csv(in);
  if (header == kSegmentsHeader) return read_segments_csv(in);
  fail(ErrorCode::parse, "unrecognized observation file header '" + std::string(header) + "'");
}

void write_observations_csv(std::ostream& out, const ObservationData& data) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::vector<EquilibriumPair>>)
          write_pairs_csv(out, v);
        else if constexpr (std::is_same_v<T, std::vector<WindowObservation>>)
          write_window_csv(out, v);
        else
          write_segments_csv(out, v);
      },
      data);
}

std::optional<double> window_length_hint(const ObservationData& data) {
  if (auto* segs = std::get_if<std::vector<Segment>>(&data)) {
    for (const auto& s : *segs)
      if (s.kind == SegmentKind::residual_censored) return s.length;
  }
  if (auto* obs = std::get_if<std::vector<WindowObservation>>(&data)) {
    for (const auto& o : *obs)
      if (o.kind == WindowKind::empty_window) return o.value;
  }
  return std::nullopt;
}

namespace {

struct StepRow {
  double t, survival, variance, lower, upper;
};

std::vector<StepRow> step_rows(const StepSurvival& est, const BootstrapBand* band) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<StepRow> rows;
  if (band) {
    for (std::size_t k = 0; k < band->grid.size(); ++k) {
      double t = band->grid[k];
      rows.push_back({t, est.value(t), est.variance_at(t), band->lower[k], band->upper[k]});
    }
  } else {
    for (std::size_t k = 0; k < est.size(); ++k)
      rows.push_back({est.jump_times[k], est.survival[k],
                      est.variance.empty() ? nan : est.variance[k], nan, nan});
  }
  return rows;
}

std::string cell(double x) { return std::isfinite(x) ? format_number(x) : std::string(); }

}  // namespace

void write_step_csv(std::ostream& out, const StepSurvival& est, const BootstrapBand* band) {
  out << "t,survival,variance,lower,upper\n";
  for (const auto& r : step_rows(est, band))
    out << format_number(r.t) << ',' << format_number(r.survival) << ',' << cell(r.variance)
        << ',' << cell(r.lower) << ',' << cell(r.upper) << '\n';
}

std::string step_json(const StepSurvival& est, const BootstrapBand* band) {
  Json t = Json::array(), s = Json::array(), v = Json::array(), lo = Json::array(),
       hi = Json::array();
  for (const auto& r : step_rows(est, band)) {
    t.push_back(r.t);
    s.push_back(r.survival);
    v.push_back(nullable(r.variance));
    lo.push_back(nullable(r.lower));
    hi.push_back(nullable(r.upper));
  }
  Json j;
  j["t"] = t;
  j["survival"] = s;
  j["variance"] = v;
  j["lower"] = lo;
  j["upper"] = hi;
  j["n_input"] = est.n_input;
  j["tail_censored"] = est.tail_censored;
  return j.dump(2);
}

std::string em_json(const EmResult& r) {
  Json j;
  j["atoms"] = std::vector<double>(r.distribution.atoms().begin(), r.distribution.atoms().end());
  j["masses"] = std::vector<double>(r.distribution.masses().begin(), r.distribution.masses().end());
  j["birth_rate"] = r.birth_rate;
  j["loglik"] = r.loglik_trace.empty() ? Json(nullptr) : nullable(r.loglik_trace.back());
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  return j.dump(2);
}

std::string report_json(const McReport& report) {
  const auto& c = report.config;
  Json config;
  config["distribution"] = c.distribution;
  config["scheme"] = std::string(to_string(c.scheme));
  config["n"] = c.n;
  config["replicates"] = c.replicates;
  config["seed"] = c.seed;
  Json ests = Json::array();
  for (auto e : c.estimators) ests.push_back(std::string(to_string(e)));
  config["estimators"] = ests;
  config["window_length"] = c.window_length;
  config["birth_rate"] = c.birth_rate;
  config["bin_width"] = c.bin_width;
  config["check_time"] = c.check_time;
  config["bias_tolerance"] = c.bias_tolerance;

  Json j;
  j["config"] = config;
  j["grid"] = report.grid;
  j["truth"] = report.truth;
  Json sums = Json::array();
  for (const auto& s : report.summaries) {
    Json e;
    e["estimator"] = std::string(to_string(s.estimator));
    e["mean"] = s.mean;
    e["bias"] = s.bias;
    e["variance"] = s.variance;
    e["mse"] = s.mse;
    e["variance_at_check"] = s.variance_at_check;
    e["beyond_last_jump"] = s.beyond_last_jump;
    e["replicates_used"] = s.replicates_used;
    e["failures"] = s.failures;
    sums.push_back(e);
  }
  j["estimators"] = sums;
  Json verdicts = Json::array();
  for (const auto& v : report.verdicts)
    verdicts.push_back(Json{{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}});
  j["verdicts"] = verdicts;
  j["passed"] = report.all_passed();
  return j.dump(2);
}

void write_report_csv(std::ostream& out, const McReport& report) {
  out << "estimator,t,bias,variance,mse\n";
  for (const auto& s : report.summaries)
    for (std::size_t g = 0; g < report.grid.size(); ++g)
      out << to_string(s.estimator) << ',' << format_number(report.grid[g]) << ','
          << format_number(s.bias[g]) << ',' << format_number(s.variance[g]) << ','
          << format_number(s.mse[g]) << '\n';
}

std::string tail_json(const TailReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows)
    rows.push_back(Json{{"distribution", r.distribution},
                        {"inverse_moment_finite", r.inverse_moment_finite},
                        {"estimator", std::string(to_string(r.estimator))},
                        {"n", r.n},
                        {"scaled_sup_error", r.scaled_sup_error},
                        {"sd", r.sd}});
  Json j;
  j["eps"] = report.config.eps;
  j["replicates"] = report.config.replicates;
  j["seed"] = report.config.seed;
  j["rows"] = rows;
  return j.dump(2);
}

void write_tail_csv(std::ostream& out, const TailReport& report) {
  out << "distribution,inverse_moment_finite,estimator,n,scaled_sup_error,sd\n";
  for (const auto& r : report.rows)
    out << (r.distribution.find(',') == std::string::npos ? r.distribution
                                                          : '"' + r.distribution + '"')
        << ',' << (r.inverse_moment_finite ? 1 : 0) << ','
        << to_string(r.estimator) << ',' << r.n << ',' << format_number(r.scaled_sup_error)
        << ',' << format_number(r.sd) << '\n';
}

}  // namespace gapest::io
