#include "gapest/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gapest/error.hpp"
#include "gapest/rng.hpp"

namespace gapest {

std::string_view to_string(WindowKind kind) {
  switch (kind) {
    case WindowKind::complete_gap: return "complete";
    case WindowKind::censored_gap: return "censored";
    case WindowKind::forward_recurrence: return "forward";
    case WindowKind::empty_window: return "empty";
  }
  return "?";
}

std::string_view to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::proper_complete: return "pc";
    case SegmentKind::proper_censored: return "px";
    case SegmentKind::residual_complete: return "rc";
    case SegmentKind::residual_censored: return "rx";
  }
  return "?";
}

WindowKind parse_window_kind(std::string_view text) {
  for (auto k : {WindowKind::complete_gap, WindowKind::censored_gap,
                 WindowKind::forward_recurrence, WindowKind::empty_window})
    if (to_string(k) == text) return k;
  fail(ErrorCode::parse, "unknown window observation kind '" + std::string(text) + "'");
}

SegmentKind parse_segment_kind(std::string_view text) {
  for (auto k : {SegmentKind::proper_complete, SegmentKind::proper_censored,
                 SegmentKind::residual_complete, SegmentKind::residual_censored})
    if (to_string(k) == text) return k;
  fail(ErrorCode::parse, "unknown segment kind '" + std::string(text) + "'");
}

namespace {

double draw_gap(const GapDistribution& dist, Rng& rng) {
  if (auto* e = std::get_if<Exponential>(&dist.family()))
    return rng.exponential(e->rate);
  return dist.quantile(rng.uniform_open());
}

double draw_length_biased(const GapDistribution& dist, Rng& rng) {
  // Gamma(2, rate) as a sum of two exponentials
  if (auto* e = std::get_if<Exponential>(&dist.family()))
    return rng.exponential(e->rate) + rng.exponential(e->rate);
  return dist.length_biased_quantile(rng.uniform());
}

// Forward recurrence time of a stationary process: density (1 - F) / mu,
// realized as a uniform fraction of a length-biased gap.
double draw_equilibrium(const GapDistribution& dist, Rng& rng) {
  double q = draw_length_biased(dist, rng);
  return rng.uniform_open() * q;
}

}  // namespace

std::vector<EquilibriumPair> sample_equilibrium(const GapDistribution& dist,
                                                std::size_t n,
                                                std::uint64_t seed) {
  require(n >= 1, "sample_equilibrium: n must be at least 1");
  Rng rng(seed);
  std::vector<EquilibriumPair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double q = draw_length_biased(dist, rng);
    double r = rng.uniform_open() * q;
    pairs.push_back({r, q - r, false});
  }
  return pairs;
}

std::vector<EquilibriumPair> apply_right_censoring(
    std::vector<EquilibriumPair> pairs, const GapDistribution& censoring,
    std::uint64_t seed) {
  Rng rng(seed);
  for (auto& p : pairs) {
    require(!p.s_censored, "apply_right_censoring: input pairs must be uncensored");
    double c = draw_gap(censoring, rng);
    if (c < p.s) {
      p.s = c;
      p.s_censored = true;
    }
  }
  return pairs;
}

std::vector<WindowObservation> sample_window(const GapDistribution& dist,
                                             double t1, double t2,
                                             std::uint64_t seed) {
  require(t1 < t2, "sample_window: need t1 < t2");
  const double w = t2 - t1;
  Rng rng(seed);
  std::vector<WindowObservation> out;
  double first = draw_equilibrium(dist, rng);
  if (first > w) {
    out.push_back({WindowKind::empty_window, w});
    return out;
  }
  out.push_back({WindowKind::forward_recurrence, first});
  double at = first;
  while (true) {
    double gap = draw_gap(dist, rng);
    if (at + gap <= w) {
      out.push_back({WindowKind::complete_gap, gap});
      at += gap;
    } else {
      // a renewal landing exactly on t2 leaves nothing to censor
      if (w - at > 0.0) out.push_back({WindowKind::censored_gap, w - at});
      break;
    }
  }
  return out;
}

std::vector<WindowObservation> sample_windows(const GapDistribution& dist,
                                              double window_length,
                                              std::size_t replicates,
                                              std::uint64_t seed) {
  require(replicates >= 1, "sample_windows: need at least one replicate");
  std::vector<WindowObservation> out;
  for (std::size_t i = 0; i < replicates; ++i) {
    auto one = sample_window(dist, 0.0, window_length, derive_seed(seed, i));
    out.insert(out.end(), one.begin(), one.end());
  }
  return out;
}

std::vector<Segment> sample_segments(double birth_rate,
                                     const GapDistribution& dist, double t1,
                                     double t2, std::uint64_t seed) {
  require(t1 < t2, "sample_segments: need t1 < t2");
  require(std::isfinite(birth_rate) && birth_rate > 0.0,
          "sample_segments: birth rate must be positive");
  const double w = t2 - t1;
  const double lmax = std::min(dist.quantile(1.0 - 1e-9), dist.support_upper());
  Rng rng(seed);
  std::vector<Segment> out;
  // window-relative birth positions, Poisson on (-lmax, w)
  double birth = -lmax + rng.exponential(birth_rate);
  while (birth < w) {
    double life = draw_gap(dist, rng);
    double death = birth + life;
    if (death > 0.0) {
      if (birth >= 0.0) {
        if (death <= w)
          out.push_back({SegmentKind::proper_complete, life});
        else
          out.push_back({SegmentKind::proper_censored, w - birth});
      } else {
        if (death <= w)
          out.push_back({SegmentKind::residual_complete, death});
        else
          out.push_back({SegmentKind::residual_censored, w});
      }
    }
    birth += rng.exponential(birth_rate);
  }
  return out;
}

std::vector<Segment> sample_segment_windows(double birth_rate,
                                            const GapDistribution& dist,
                                            double window_length,
                                            std::size_t replicates,
                                            std::uint64_t seed) {
  require(replicates >= 1, "sample_segment_windows: need at least one replicate");
  std::vector<Segment> out;
  for (std::size_t i = 0; i < replicates; ++i) {
    auto one = sample_segments(birth_rate, dist, 0.0, window_length,
                               derive_seed(seed, i));
    out.insert(out.end(), one.begin(), one.end());
  }
  return out;
}

}  // namespace gapest
