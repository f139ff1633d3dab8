#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gapest/sampler.hpp"

namespace gapest {

/// Right-continuous step estimate of a survival function. The value before
/// the first jump is 1; the value at a jump time is the post-jump value.
struct StepSurvival {
  std::vector<double> jump_times;
  std::vector<double> survival;
  /// Pointwise variance aligned with jump_times; empty when not computed,
  /// NaN where undefined.
  std::vector<double> variance;
  /// Events d and risk-set sizes Y at each jump (product-limit estimators).
  std::vector<std::size_t> events;
  std::vector<std::size_t> at_risk;
  std::size_t n_input = 0;
  /// The largest observation is censored: the curve is reported as-is beyond
  /// the last jump, without redistribution.
  bool tail_censored = false;

  std::size_t size() const noexcept { return jump_times.size(); }
  double value(double t) const;
  /// Left limit S(t-).
  double value_before(double t) const;
  /// Variance at t (right-continuous; 0 before the first jump).
  double variance_at(double t) const;
  /// Survival at the last jump (1 when there are no jumps).
  double terminal_value() const noexcept {
    return survival.empty() ? 1.0 : survival.back();
  }

  friend bool operator==(const StepSurvival&, const StepSurvival&) = default;
};

/// Number at risk Y(t) = #{i : r_i < t <= r_i + s_i}.
std::size_t risk_set(std::span<const EquilibriumPair> pairs, double t);

/// Product-limit estimator with optional delayed entry. Subject i is at risk
/// on (entry_i, time_i]. Ties: events at a common time form one factor
/// (1 - d/Y); censorings tied with an event stay in that event's risk set.
StepSurvival kaplan_meier(std::span<const double> times,
                          const std::vector<bool>& censored,
                          std::optional<std::span<const double>> entry_times = std::nullopt);

/// Product-limit estimator for gaps Q = R + S left-truncated at R. Censored
/// pairs feed the risk sets only.
StepSurvival winter_foldes(std::span<const EquilibriumPair> pairs);

/// Product-limit estimator on the complete and censored gaps of window data;
/// forward recurrences and empty windows are discarded.
StepSurvival window_product_limit(std::span<const WindowObservation> obs);

/// Combined forward/backward product-limit estimator for segment data.
///
/// Read forward in time, a proper lifetime is censored at t2 (px) and a
/// residual one has an unknown start (rc, rx). Read backward, the roles swap:
/// rc becomes a lifetime observed from its end and censored at t1, px is the
/// one with unknown start. Pooling both readings gives every complete proper
/// lifetime twice as an event, px and rc once each as a censored time, and
/// rx never. Lengths above the window are rejected.
StepSurvival palmer_cox(std::span<const Segment> segments, double window_length);

/// Greenwood variance S(t)^2 sum_{q <= t} d / (Y (Y - d)). From a jump with
/// Y = d onward the variance is NaN.
StepSurvival greenwood_variance(StepSurvival est, std::span<const std::size_t> events,
                                std::span<const std::size_t> at_risk);

/// Convenience overload using the counts recorded by the estimator.
StepSurvival greenwood_variance(StepSurvival est);

}  // namespace gapest
