#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "gapest/error.hpp"
#include "gapest/npmle.hpp"
#include "gapest/plim.hpp"
#include "gapest/rng.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using gapest::DiscreteDistribution;
using gapest::EquilibriumPair;
using gapest::LikelihoodFrame;
using gapest::Segment;
using gapest::SegmentKind;

namespace {

constexpr auto pc = SegmentKind::proper_complete;
constexpr auto px = SegmentKind::proper_censored;
constexpr auto rc = SegmentKind::residual_complete;
constexpr auto rx = SegmentKind::residual_censored;

// One textbook E+M step in the window-biased parameterization.
std::vector<double> naive_em_step(const std::vector<double>& atoms, const std::vector<double>& p,
                                  const std::vector<Segment>& segs, double w) {
  const std::size_t J = atoms.size();
  std::vector<double> q(J, 0.0);
  for (const auto& s : segs) {
    std::vector<double> g(J, 0.0);
    for (std::size_t j = 0; j < J; ++j) {
      switch (s.kind) {
        case pc: g[j] = atoms[j] == s.length ? 1.0 : 0.0; break;
        case px:
        case rc: g[j] = atoms[j] > s.length ? p[j] : 0.0; break;
        case rx: g[j] = p[j] * std::max(atoms[j] - w, 0.0); break;
      }
    }
    double z = std::accumulate(g.begin(), g.end(), 0.0);
    for (std::size_t j = 0; j < J; ++j) q[j] += g[j] / z;
  }
  std::vector<double> out(J);
  for (std::size_t j = 0; j < J; ++j) out[j] = q[j] / segs.size() / (w + atoms[j]);
  double z = std::accumulate(out.begin(), out.end(), 0.0);
  for (auto& v : out) v /= z;
  return out;
}

std::vector<double> masses(const DiscreteDistribution& d) {
  return {d.masses().begin(), d.masses().end()};
}

}  // namespace

TEST(CoxVardi, HandExamples) {
  std::vector<double> q{1.0, 2.0};
  auto d = gapest::cox_vardi(q);
  EXPECT_NEAR(d.cdf(1.0), 2.0 / 3, 1e-15);
  EXPECT_NEAR(d.cdf(2.0), 1.0, 1e-15);
  std::vector<double> same{0.7, 0.7, 0.7};
  auto point = gapest::cox_vardi(same);
  ASSERT_EQ(point.size(), 1u);
  EXPECT_EQ(point.atoms()[0], 0.7);
  EXPECT_EQ(point.masses()[0], 1.0);
  std::vector<double> tie{1.0, 1.0, 2.0};
  auto t = gapest::cox_vardi(tie);
  EXPECT_NEAR(t.masses()[0], 0.8, 1e-15);
  EXPECT_NEAR(t.masses()[1], 0.2, 1e-15);
  std::vector<double> bad{1.0, 0.0};
  EXPECT_THROW(gapest::cox_vardi(bad), gapest::Error);
  EXPECT_THROW(gapest::cox_vardi(std::vector<double>{}), gapest::Error);
}

TEST(CoxVardi, FromPairs) {
  std::vector<EquilibriumPair> pairs{{0.4, 0.6, false}, {1.5, 0.5, false}};
  std::vector<double> q{1.0, 2.0};
  EXPECT_EQ(gapest::cox_vardi_from_pairs(pairs), gapest::cox_vardi(q));
  std::vector<EquilibriumPair> flipped{pairs[1], pairs[0]};
  EXPECT_EQ(gapest::cox_vardi_from_pairs(flipped), gapest::cox_vardi(q));
  pairs[1].s_censored = true;
  try {
    gapest::cox_vardi_from_pairs(pairs);
    ADD_FAILURE() << "censored pair accepted";
  } catch (const gapest::Error& e) {
    EXPECT_NE(std::string(e.what()).find("winter_foldes"), std::string::npos);
  }
}

TEST(CoxVardi, RandomAgainstOracleAndInvariants) {
  std::mt19937_64 gen(201);
  std::uniform_real_distribution<double> u(0.05, 4.0), scale(0.1, 10.0);
  std::uniform_int_distribution<int> lat(1, 6);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> q;
    for (int i = 0; i < 1 + rep % 30; ++i) q.push_back(rep % 2 ? u(gen) : 0.5 * lat(gen));
    auto d = gapest::cox_vardi(q);
    auto ref = oracle::cox_vardi(q);
    ASSERT_EQ(std::vector<double>(d.atoms().begin(), d.atoms().end()), ref.times);
    for (std::size_t i = 0; i < ref.times.size(); ++i)
      EXPECT_NEAR(d.survival(ref.times[i]), ref.survival[i], 1e-12);
    EXPECT_NEAR(std::accumulate(d.masses().begin(), d.masses().end(), 0.0), 1.0, 1e-12);
    // scale equivariance
    double c = scale(gen);
    std::vector<double> scaled;
    for (double v : q) scaled.push_back(c * v);
    auto ds = gapest::cox_vardi(scaled);
    ASSERT_EQ(ds.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_NEAR(ds.atoms()[i], c * d.atoms()[i], 1e-12 * c * d.atoms()[i]);
      EXPECT_NEAR(ds.masses()[i], d.masses()[i], 1e-12);
    }
  }
}

TEST(CoxVardi, DependsOnPairsOnlyThroughSums) {
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<EquilibriumPair> a, b;
    for (int i = 0; i < 20; ++i) {
      // sums on a dyadic lattice so both splits add up exactly
      double q = 0.125 * (1 + static_cast<int>(u(gen) * 30));
      double r1 = 0.0625 * static_cast<int>(u(gen) * 16 * q), r2 = 0.0625 * static_cast<int>(u(gen) * 16 * q);
      a.push_back({r1, q - r1, false});
      b.push_back({r2, q - r2, false});
    }
    EXPECT_EQ(gapest::cox_vardi_from_pairs(a), gapest::cox_vardi_from_pairs(b));
  }
}

TEST(SegmentLoglik, RenewalWindowFrameHandValues) {
  DiscreteDistribution d({1.0, 3.0}, {0.5, 0.5});
  auto one = [&](Segment s, double w) {
    std::vector<Segment> v{s};
    return gapest::segment_loglik(d, 1.0, v, w, false, LikelihoodFrame::renewal_window);
  };
  EXPECT_NEAR(one({rc, 2.0}, 2.5), std::log(0.25), 1e-14);
  EXPECT_NEAR(one({rx, 2.0}, 2.0), std::log(0.25), 1e-14);
  EXPECT_NEAR(one({pc, 1.0}, 2.0), std::log(0.5), 1e-14);
  EXPECT_NEAR(one({px, 2.0}, 2.0), std::log(0.5), 1e-14);
}

TEST(SegmentLoglik, LaslettFrameDividesEveryTerm) {
  DiscreteDistribution d({1.0, 3.0}, {0.5, 0.5});
  const double w = 2.0;
  std::vector<Segment> segs{{pc, 1.0}, {px, 2.0}, {rc, 2.0}, {rx, w}};
  double ll = gapest::segment_loglik(d, 1.0, segs, w, false);
  // pc 0.5, px 0.5, rc 0.5, rx 0.5 * 1, each over w + mu = 4
  EXPECT_NEAR(ll, 4.0 * std::log(0.5 / 4.0), 1e-14);
  EXPECT_NEAR(ll, oracle::laslett_loglik({1.0, 3.0}, {0.5, 0.5}, instances::to_oracle(segs), w), 1e-14);
}

TEST(SegmentLoglik, PoissonFactor) {
  DiscreteDistribution d({1.0, 3.0}, {0.5, 0.5});
  const double w = 2.0, rate = 1.5;
  std::vector<Segment> segs{{pc, 1.0}, {rx, w}, {px, 0.5}};
  double lam = rate * (w + 2.0);
  double extra = 3 * std::log(lam) - lam - std::lgamma(4.0);
  EXPECT_NEAR(gapest::segment_loglik(d, rate, segs, w, true) - gapest::segment_loglik(d, rate, segs, w, false),
              extra, 1e-12);
}

TEST(SegmentLoglik, ZeroContributionIsMinusInfinity) {
  DiscreteDistribution d({1.0, 3.0}, {1.0, 0.0});
  std::vector<Segment> segs{{rx, 2.0}};
  EXPECT_EQ(gapest::segment_loglik(d, 1.0, segs, 2.0, false), -INFINITY);
  std::vector<Segment> off{{pc, 1.5}};
  EXPECT_EQ(gapest::segment_loglik(d, 1.0, off, 2.0, false), -INFINITY);
}

TEST(Binning, MidpointsWithLeftOpenBins) {
  std::vector<Segment> segs{{pc, 0.24}, {px, 0.26}, {rc, 1.0}, {rx, 2.0}};
  auto b = gapest::bin_segments(segs, 0.5);
  EXPECT_DOUBLE_EQ(b[0].length, 0.25);
  EXPECT_DOUBLE_EQ(b[1].length, 0.25);
  EXPECT_DOUBLE_EQ(b[2].length, 0.75);
  EXPECT_EQ(b[3].length, 2.0);
  for (std::size_t i = 0; i < segs.size(); ++i) EXPECT_EQ(b[i].kind, segs[i].kind);
}

TEST(Binning, DefaultGridSpansPastTheWindow) {
  std::vector<Segment> segs{{pc, 0.3}, {px, 1.2}};
  auto g = gapest::default_grid(segs, 2.0, 0.5);
  ASSERT_FALSE(g.empty());
  EXPECT_DOUBLE_EQ(g.front(), 0.25);
  EXPECT_GE(g.back() + 0.25, 1.2 + 2.0 - 1e-12);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] - g[i - 1], 0.5, 1e-12);
}

TEST(Binning, FineBinsApproachUnbinnedEstimate) {
  const double w = 2.0;
  auto d = gapest::GapDistribution::weibull(1.5, 1.0);
  auto segs = gapest::sample_segment_windows(2.0, d, w, 30, 203);
  // unbinned grid: every pc length plus a few atoms past the window
  std::vector<double> grid;
  for (const auto& s : segs)
    if (s.kind == pc) grid.push_back(s.length);
  for (double a : {2.3, 2.9, 3.7}) grid.push_back(a);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  gapest::EmOptions opts{200000, 1e-12};
  auto exact = gapest::laslett_em(segs, w, grid, opts);

  const double h = 1e-4;
  auto binned = gapest::bin_segments(segs, h);
  std::vector<Segment> atoms_as_segs;
  for (double a : grid) atoms_as_segs.push_back({pc, a});
  std::vector<double> bgrid;
  for (const auto& s : gapest::bin_segments(atoms_as_segs, h)) bgrid.push_back(s.length);
  bgrid.erase(std::unique(bgrid.begin(), bgrid.end()), bgrid.end());
  auto coarse = gapest::laslett_em(binned, w, bgrid, opts);
  // atoms move by less than h, so compare mass by mass
  ASSERT_EQ(bgrid.size(), grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j)
    EXPECT_NEAR(coarse.distribution.masses()[j], exact.distribution.masses()[j], 1e-3);
  for (double a : grid)
    EXPECT_NEAR(coarse.distribution.cdf(a + 1e-3), exact.distribution.cdf(a + 1e-3), 1e-3);
}

TEST(LaslettEm, ProperCompleteOnly) {
  std::vector<Segment> segs{{pc, 1.0}, {pc, 1.0}, {pc, 2.0}};
  std::vector<double> grid{1.0, 2.0};
  for (double w : {2.0, 3.0, 5.0}) {
    auto r = gapest::laslett_em(segs, w, grid, {100000, 1e-14});
    // p proportional to (empirical share)/(w + a)
    double a1 = (2.0 / 3) / (w + 1.0), a2 = (1.0 / 3) / (w + 2.0);
    EXPECT_NEAR(r.distribution.masses()[0], a1 / (a1 + a2), 1e-9);
    double mu = r.distribution.mean();
    EXPECT_DOUBLE_EQ(r.birth_rate, 3.0 / (w + mu));
    EXPECT_TRUE(r.converged);
  }
}

TEST(LaslettEm, SingleAtomGrid) {
  std::vector<Segment> segs{{px, 0.4}, {rc, 0.9}, {rx, 1.0}};
  std::vector<double> grid{2.5};
  auto r = gapest::laslett_em(segs, 1.0, grid);
  EXPECT_EQ(r.distribution.masses()[0], 1.0);
  EXPECT_LE(r.iterations, 2u);
}

TEST(LaslettEm, Errors) {
  std::vector<double> grid{1.0, 2.0};
  std::vector<Segment> uncovered{{pc, 1.5}};
  EXPECT_THROW(gapest::laslett_em(uncovered, 2.0, grid), gapest::Error);
  std::vector<Segment> impossible{{rx, 3.0}};
  EXPECT_THROW(gapest::laslett_em(impossible, 3.0, grid), gapest::Error);
  std::vector<Segment> cens{{px, 2.5}};
  EXPECT_THROW(gapest::laslett_em(cens, 3.0, grid), gapest::Error);
  EXPECT_THROW(gapest::laslett_em(std::vector<Segment>{}, 3.0, grid), gapest::Error);
}

TEST(LaslettEm, MonotoneTraceAndSelfConsistency) {
  std::mt19937_64 gen(204);
  for (int rep = 0; rep < 100; ++rep) {
    auto inst = instances::random_em_instance(gen, 5, 12);
    auto r = gapest::laslett_em(inst.segments, inst.window_length, inst.grid, {200000, 1e-13});
    for (std::size_t i = 1; i < r.loglik_trace.size(); ++i)
      ASSERT_GE(r.loglik_trace[i] - r.loglik_trace[i - 1], -1e-10) << "instance " << rep;
    EXPECT_NEAR(r.loglik_trace.back(),
                oracle::laslett_loglik(inst.grid, masses(r.distribution),
                                       instances::to_oracle(inst.segments), inst.window_length),
                1e-9);
    auto next = naive_em_step(inst.grid, masses(r.distribution), inst.segments, inst.window_length);
    for (std::size_t j = 0; j < next.size(); ++j)
      EXPECT_NEAR(next[j], r.distribution.masses()[j], 1e-8) << "instance " << rep;
    EXPECT_DOUBLE_EQ(r.birth_rate,
                     inst.segments.size() / (inst.window_length + r.distribution.mean()));
  }
}

TEST(LaslettEm, FirstIterationMatchesNaiveStep) {
  std::mt19937_64 gen(205);
  for (int rep = 0; rep < 30; ++rep) {
    auto inst = instances::random_em_instance(gen, 4, 10);
    auto r = gapest::laslett_em(inst.segments, inst.window_length, inst.grid, {1, 1e-300});
    std::vector<double> uniform(inst.grid.size(), 1.0 / inst.grid.size());
    auto ref = naive_em_step(inst.grid, uniform, inst.segments, inst.window_length);
    for (std::size_t j = 0; j < ref.size(); ++j) EXPECT_NEAR(r.distribution.masses()[j], ref[j], 1e-13);
  }
}

TEST(Oracle, HandTwoAtomInstance) {
  // log p1 + log(1 - p1) - 2 log(5 - 2 p1) is stationary at p1 = 5/8
  std::vector<Segment> segs{{pc, 1.0}, {rx, 2.0}};
  std::vector<double> grid{1.0, 3.0};
  auto d = gapest::npmle_oracle(segs, 2.0, grid);
  EXPECT_NEAR(d.masses()[0], 5.0 / 8, 1e-4);
  auto em = gapest::laslett_em(segs, 2.0, grid, {100000, 1e-14});
  EXPECT_NEAR(em.distribution.masses()[0], 5.0 / 8, 1e-6);
}

TEST(Oracle, ProperCompleteOnlyMatchesClosedForm) {
  std::vector<Segment> segs{{pc, 0.5}, {pc, 0.5}, {pc, 1.5}, {pc, 1.0}};
  std::vector<double> grid{0.5, 1.0, 1.5};
  const double w = 2.0;
  auto d = gapest::npmle_oracle(segs, w, grid);
  std::vector<double> ref{0.5 / 2.5, 0.25 / 3.0, 0.25 / 3.5};
  double z = ref[0] + ref[1] + ref[2];
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(d.masses()[j], ref[j] / z, 1e-4);
}

TEST(Oracle, AgreesWithEmAndBruteForce) {
  std::mt19937_64 gen(206);
  for (int rep = 0; rep < 50; ++rep) {
    auto inst = instances::random_em_instance(gen);
    auto o = gapest::npmle_oracle(inst.segments, inst.window_length, inst.grid);
    auto em = gapest::laslett_em(inst.segments, inst.window_length, inst.grid, {1000000, 1e-15});
    auto segs = instances::to_oracle(inst.segments);
    double ll_o = oracle::laslett_loglik(inst.grid, masses(o), segs, inst.window_length);
    double ll_em = em.loglik_trace.back();
    EXPECT_GE(ll_o, ll_em - 1e-6) << "instance " << rep;
    EXPECT_NEAR(ll_o, ll_em, 1e-6) << "instance " << rep;
    for (std::size_t j = 0; j < inst.grid.size(); ++j)
      EXPECT_NEAR(o.masses()[j], em.distribution.masses()[j], 1e-4) << "instance " << rep;
    // an independent coarse scan never beats the refined optimum
    double coarse = 0.0;
    oracle::grid_argmax(inst.grid, segs, inst.window_length, 200, &coarse);
    EXPECT_LE(coarse, ll_o + 1e-12);
    EXPECT_GT(coarse, ll_o - 0.05);
  }
  EXPECT_THROW(gapest::npmle_oracle(std::vector<Segment>{{pc, 1.0}}, 2.0,
                                    std::vector<double>{1, 2, 3, 4, 5, 6, 7}),
               gapest::Error);
}

TEST(Gof, Examples) {
  DiscreteDistribution a({1.0}, {1.0}), b({2.0}, {1.0});
  EXPECT_EQ(gapest::gof_discrepancy(a, a), 0.0);
  EXPECT_EQ(gapest::gof_discrepancy(a, b), 1.0);
  std::vector<double> t{1.0, 2.0};
  auto km = gapest::kaplan_meier(t, {false, false});
  DiscreteDistribution half({1.0, 2.0}, {0.5, 0.5});
  EXPECT_NEAR(gapest::gof_discrepancy(km, half), 0.0, 1e-15);
  EXPECT_THROW(gapest::gof_discrepancy(gapest::StepSurvival{}, a), gapest::Error);
}

TEST(Gof, CoxVardiAndWinterFoldesAgreeOnLargeSamples) {
  auto d = gapest::GapDistribution::exponential(1.0);
  int close = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto pairs = gapest::sample_equilibrium(d, 5000, gapest::derive_seed(207, seed));
    close += gapest::gof_discrepancy(gapest::winter_foldes(pairs), gapest::cox_vardi_from_pairs(pairs)) < 0.05;
  }
  EXPECT_GE(close, 19);
}

TEST(StepConversion, DiscreteToStepSurvival) {
  DiscreteDistribution d({0.5, 1.0, 2.0}, {0.2, 0.0, 0.8});
  auto s = gapest::to_step_survival(d);
  for (double t : {0.0, 0.5, 0.7, 1.0, 1.9, 2.0, 3.0}) EXPECT_NEAR(s.value(t), d.survival(t), 1e-15);
}
