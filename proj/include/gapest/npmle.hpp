#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "gapest/gapdist.hpp"
#include "gapest/plim.hpp"
#include "gapest/sampler.hpp"

namespace gapest {

/// NPMLE from length-biased gaps: mass at q proportional to (multiplicity of
/// q) / q.
DiscreteDistribution cox_vardi(std::span<const double> q_values);

/// cox_vardi on r + s. Censored pairs are rejected; use winter_foldes for
/// right-censored forward recurrence times.
DiscreteDistribution cox_vardi_from_pairs(std::span<const EquilibriumPair> pairs);

/// 1 - F of a discrete distribution as a step function.
StepSurvival to_step_survival(const DiscreteDistribution& dist);

/// Normalization of the per-segment likelihood terms.
///
/// laslett: Poisson births, every term divided by (w + mu_F). This is the
///   likelihood of the observed segments given their number, and equals the
///   full Poisson-process likelihood profiled over the birth rate.
/// renewal_window: the terms of a stationary renewal process seen through a
///   window; only residual terms carry 1 / mu_F.
enum class LikelihoodFrame { laslett, renewal_window };

/// Sum of log contributions: pc x -> log p(x); px c -> log sum_{a > c} p_a;
/// rc x -> log sum_{a > x} p_a; rx -> log sum_a p_a (a - w)^+, normalized as
/// per `frame`. With `include_poisson_factor` the Poisson log-probability of
/// the segment count with mean birth_rate (w + mu_F) is added. Returns -inf
/// when some contribution has probability zero (pc lengths off the atoms
/// included).
double segment_loglik(const DiscreteDistribution& dist, double birth_rate,
                      std::span<const Segment> segments, double window_length,
                      bool include_poisson_factor,
                      LikelihoodFrame frame = LikelihoodFrame::laslett);

/// Maps every length in (k h, (k+1) h] to (k + 1/2) h. Residual-censored
/// segments keep their length (the window length).
std::vector<Segment> bin_segments(std::span<const Segment> segments, double bin_width);

/// Bin midpoints covering (0, max observed length + window_length].
std::vector<double> default_grid(std::span<const Segment> segments,
                                 double window_length, double bin_width);

struct EmOptions {
  std::size_t max_iter = 100000;
  /// Converged once an iteration gains less than tol in log-likelihood and
  /// moves no mass by more than tol.
  double tol = 1e-8;
};

struct EmResult {
  DiscreteDistribution distribution;
  double birth_rate = 0.0;
  /// Laslett-frame log likelihood (no Poisson factor), starting with the
  /// initial uniform iterate.
  std::vector<double> loglik_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

/// EM for the NPMLE of F from segment data on a fixed grid of atoms.
///
/// Each observed segment belongs to a lifetime drawn from the window-biased
/// law q_j ∝ p_j (w + a_j) whose birth is uniform on (-a_j, w). Given the
/// lifetime a, a pc segment of length x has probability I{a = x}(w - a)/(w + a),
/// px at c and rc at x have density I{a > c}/(w + a), and rx has probability
/// (a - w)^+/(w + a). The E-step posteriors are therefore p_j restricted to
/// the compatible atoms (weighted by (a_j - w)^+ for rx); the M-step averages
/// them into q and maps back with p_j ∝ q_j / (w + a_j). The birth rate is
/// the segment count over w + mu_F.
EmResult laslett_em(std::span<const Segment> segments, double window_length,
                    std::span<const double> grid, const EmOptions& opts = {});

/// Brute-force maximizer of the Laslett-frame likelihood over the simplex on
/// at most six atoms: exhaustive lattice scan (spacing 1e-3 for up to three
/// atoms, coarser above so the scan stays near 2e6 points) followed by
/// pairwise mass-transfer refinement down to 1e-7.
DiscreteDistribution npmle_oracle(std::span<const Segment> segments,
                                  double window_length,
                                  std::span<const double> grid);

using CdfEstimate = std::variant<StepSurvival, DiscreteDistribution>;

/// sup_t |F_a(t) - F_b(t)| over the union of jump points.
double gof_discrepancy(const CdfEstimate& a, const CdfEstimate& b);

}  // namespace gapest
