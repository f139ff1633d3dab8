#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "gapest/gapdist.hpp"

namespace gapest {

/// One observation around a fixed time point: backward recurrence time r and
/// forward recurrence time s (possibly right-censored).
struct EquilibriumPair {
  double r = 0.0;
  double s = 0.0;
  bool s_censored = false;

  /// Length-biased gap covering the observation point.
  double q() const noexcept { return r + s; }

  friend bool operator==(const EquilibriumPair&, const EquilibriumPair&) = default;
};

enum class WindowKind { complete_gap, censored_gap, forward_recurrence, empty_window };

/// Elementary observation of a renewal process seen through a window.
struct WindowObservation {
  WindowKind kind = WindowKind::complete_gap;
  double value = 0.0;

  friend bool operator==(const WindowObservation&, const WindowObservation&) = default;
};

/// pc / px / rc / rx: proper or residual lifetime, complete or censored.
enum class SegmentKind { proper_complete, proper_censored, residual_complete, residual_censored };

/// Intersection of one lifetime with the observation window.
struct Segment {
  SegmentKind kind = SegmentKind::proper_complete;
  double length = 0.0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

std::string_view to_string(WindowKind kind);
std::string_view to_string(SegmentKind kind);
WindowKind parse_window_kind(std::string_view text);
SegmentKind parse_segment_kind(std::string_view text);

/// n iid pairs: Q from the length-biased law q f(q) / mu, R uniform on
/// (0, Q), S = Q - R.
std::vector<EquilibriumPair> sample_equilibrium(const GapDistribution& dist,
                                                std::size_t n, std::uint64_t seed);

/// Replaces each s by min(s, c) with c drawn from `censoring`. A censoring
/// time equal to s leaves the pair uncensored.
std::vector<EquilibriumPair> apply_right_censoring(
    std::vector<EquilibriumPair> pairs, const GapDistribution& censoring,
    std::uint64_t seed);

/// One stationary realization seen through [t1, t2]: a forward recurrence
/// (or an empty-window record), the complete gaps inside the window, then the
/// censored final gap.
std::vector<WindowObservation> sample_window(const GapDistribution& dist,
                                             double t1, double t2,
                                             std::uint64_t seed);

/// `replicates` independent windows of length `window_length`, pooled.
/// Replicate i uses derive_seed(seed, i).
std::vector<WindowObservation> sample_windows(const GapDistribution& dist,
                                              double window_length,
                                              std::size_t replicates,
                                              std::uint64_t seed);

/// Poisson(birth_rate) births with iid lifetimes; births are simulated on
/// [t1 - L, t2] with L the 1 - 1e-9 quantile of the lifetime law.
std::vector<Segment> sample_segments(double birth_rate,
                                     const GapDistribution& dist, double t1,
                                     double t2, std::uint64_t seed);

std::vector<Segment> sample_segment_windows(double birth_rate,
                                            const GapDistribution& dist,
                                            double window_length,
                                            std::size_t replicates,
                                            std::uint64_t seed);

}  // namespace gapest
