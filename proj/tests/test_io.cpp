#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gapest/error.hpp"
#include "gapest/io.hpp"

namespace io = gapest::io;
using gapest::SegmentKind;
using gapest::WindowKind;
using nlohmann::json;

namespace {

std::string parse_error(const std::string& text) {
  std::istringstream in(text);
  try {
    io::read_observations_csv(in);
  } catch (const gapest::Error& e) {
    EXPECT_EQ(e.code(), gapest::ErrorCode::parse);
    return e.what();
  }
  ADD_FAILURE() << "no error for: " << text;
  return {};
}

template <class T>
T round_trip(const gapest::ObservationData& data) {
  std::stringstream s;
  io::write_observations_csv(s, data);
  return std::get<T>(io::read_observations_csv(s));
}

}  // namespace

TEST(ObservationCsv, PairsRoundTripExactly) {
  auto pairs = gapest::apply_right_censoring(
      gapest::sample_equilibrium(gapest::GapDistribution::exponential(1.0), 200, 5),
      gapest::GapDistribution::exponential(0.5), 6);
  EXPECT_EQ(round_trip<std::vector<gapest::EquilibriumPair>>(pairs), pairs);
}

TEST(ObservationCsv, WindowAndSegmentsRoundTrip) {
  std::vector<gapest::WindowObservation> w{{WindowKind::complete_gap, 0.1},
                                           {WindowKind::censored_gap, 1.0 / 3.0},
                                           {WindowKind::forward_recurrence, 0.7},
                                           {WindowKind::empty_window, 2.0}};
  EXPECT_EQ(round_trip<decltype(w)>(w), w);
  std::vector<gapest::Segment> s{{SegmentKind::proper_complete, 0.3},
                                 {SegmentKind::proper_censored, 1e-9},
                                 {SegmentKind::residual_complete, 1.25},
                                 {SegmentKind::residual_censored, 2.0}};
  EXPECT_EQ(round_trip<decltype(s)>(s), s);
  EXPECT_EQ(io::window_length_hint(s), 2.0);
  EXPECT_EQ(io::window_length_hint(w), 2.0);
}

TEST(ObservationCsv, TextLayout) {
  std::ostringstream out;
  io::write_segments_csv(out, {{SegmentKind::proper_censored, 0.5}, {SegmentKind::residual_censored, 2}});
  EXPECT_EQ(out.str(), "kind,length\npx,0.5\nrx,2\n");
  out.str("");
  io::write_pairs_csv(out, {{0.25, 1.5, true}});
  EXPECT_EQ(out.str(), "r,s,censored\n0.25,1.5,1\n");
}

TEST(ObservationCsv, ToleratesCrlfAndBlankLines) {
  std::istringstream in("kind,length\r\npc,0.5\r\n\r\nrx,2\r\n");
  auto segs = std::get<std::vector<gapest::Segment>>(io::read_observations_csv(in));
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[1].kind, SegmentKind::residual_censored);
}

TEST(ObservationCsv, ErrorsCarryLineNumbers) {
  EXPECT_NE(parse_error("r,s,censored\n1,2,0\n1,x,0\n").find("line 3"), std::string::npos);
  EXPECT_NE(parse_error("r,s,censored\n1,2\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error("r,s,censored\n1,2,2\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error("r,s,censored\n-1,2,0\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error("kind,value\nfull,1\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error("kind,length\npc,0\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error("a,b\n").find("header"), std::string::npos);
  parse_error("");
}

TEST(StepOutput, CsvColumnsAndEmptyCells) {
  auto km = gapest::kaplan_meier(std::vector<double>{1.0, 2.0}, {false, false});
  std::ostringstream out;
  io::write_step_csv(out, km);
  EXPECT_EQ(out.str(), "t,survival,variance,lower,upper\n1,0.5,,,\n2,0,,,\n");
}

TEST(StepOutput, BandRowsFollowTheBandGrid) {
  auto km = gapest::kaplan_meier(std::vector<double>{1.0, 2.0}, {false, false});
  gapest::BootstrapBand band;
  band.grid = {0.5, 1.5};
  band.lower = {0.9, 0.25};
  band.upper = {1.0, 0.75};
  std::ostringstream out;
  io::write_step_csv(out, km, &band);
  EXPECT_EQ(out.str(), "t,survival,variance,lower,upper\n0.5,1,,0.9,1\n1.5,0.5,,0.25,0.75\n");
  auto j = json::parse(io::step_json(km, &band));
  EXPECT_EQ(j["t"], json({0.5, 1.5}));
  EXPECT_EQ(j["lower"], json({0.9, 0.25}));
  EXPECT_TRUE(j["variance"][0].is_null());
}

TEST(StepOutput, JsonMirrorsCsv) {
  auto km = gapest::kaplan_meier(std::vector<double>{1.0, 2.0, 3.0}, {false, true, false});
  km.variance = {0.1, std::numeric_limits<double>::quiet_NaN()};
  auto j = json::parse(io::step_json(km));
  EXPECT_EQ(j["t"], json({1.0, 3.0}));
  EXPECT_NEAR(j["survival"][0].get<double>(), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(j["survival"][1], 0.0);
  EXPECT_EQ(j["variance"][0], 0.1);
  EXPECT_TRUE(j["variance"][1].is_null());
  EXPECT_TRUE(j["upper"][0].is_null());
  EXPECT_EQ(j["n_input"], 3);
  EXPECT_EQ(j["tail_censored"], false);
}

TEST(EmOutput, Fields) {
  gapest::EmResult r{gapest::DiscreteDistribution({1.0, 2.0}, {0.25, 0.75}), 1.5, {-3.0, -2.0}, 7, true};
  auto j = json::parse(io::em_json(r));
  EXPECT_EQ(j["atoms"], json({1.0, 2.0}));
  EXPECT_EQ(j["masses"], json({0.25, 0.75}));
  EXPECT_EQ(j["birth_rate"], 1.5);
  EXPECT_EQ(j["loglik"], -2.0);
  EXPECT_EQ(j["iterations"], 7);
  EXPECT_EQ(j["converged"], true);
}

TEST(ReportOutput, JsonAndCsv) {
  gapest::McConfig c;
  c.n = 100;
  c.replicates = 3;
  auto r = gapest::mc_compare(c);
  auto j = json::parse(io::report_json(r));
  EXPECT_EQ(j["config"]["n"], 100);
  EXPECT_EQ(j["config"]["scheme"], "equilibrium");
  EXPECT_EQ(j["estimators"].size(), 2u);
  EXPECT_EQ(j["passed"], r.all_passed());
  std::ostringstream out;
  io::write_report_csv(out, r);
  auto text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "estimator,t,bias,variance,mse");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(1 + 2 * r.grid.size()));
}

TEST(TailOutput, JsonAndCsv) {
  gapest::TailConfig c;
  c.sizes = {100, 200};
  c.replicates = 2;
  auto r = gapest::tail_failure_demo(c);
  auto j = json::parse(io::tail_json(r));
  EXPECT_EQ(j["rows"].size(), r.rows.size());
  EXPECT_EQ(j["rows"][0]["distribution"], "exp:1");
  std::ostringstream out;
  io::write_tail_csv(out, r);
  auto text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "distribution,inverse_moment_finite,estimator,n,scaled_sup_error,sd");
  EXPECT_NE(text.find("\nweibull:2:1,1,"), std::string::npos);
  EXPECT_NE(text.find("\nexp:1,0,"), std::string::npos);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(io::format_number(0.1), "0.1");
  EXPECT_EQ(io::format_number(2.0), "2");
  EXPECT_EQ(io::format_number(-std::numeric_limits<double>::infinity()), "-inf");
  double x = 1.0 / 3.0;
  EXPECT_EQ(std::stod(io::format_number(x)), x);
}
