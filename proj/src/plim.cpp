#include "gapest/plim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gapest/error.hpp"

namespace gapest {

namespace {

std::size_t upper_index(const std::vector<double>& jumps, double t) {
  return static_cast<std::size_t>(
      std::upper_bound(jumps.begin(), jumps.end(), t) - jumps.begin());
}

}  // namespace

double StepSurvival::value(double t) const {
  auto k = upper_index(jump_times, t);
  return k == 0 ? 1.0 : survival[k - 1];
}

double StepSurvival::value_before(double t) const {
  auto k = static_cast<std::size_t>(
      std::lower_bound(jump_times.begin(), jump_times.end(), t) -
      jump_times.begin());
  return k == 0 ? 1.0 : survival[k - 1];
}

double StepSurvival::variance_at(double t) const {
  if (variance.empty()) return std::numeric_limits<double>::quiet_NaN();
  auto k = upper_index(jump_times, t);
  return k == 0 ? 0.0 : variance[k - 1];
}

std::size_t risk_set(std::span<const EquilibriumPair> pairs, double t) {
  return static_cast<std::size_t>(std::count_if(
      pairs.begin(), pairs.end(),
      [t](const EquilibriumPair& p) { return p.r < t && t <= p.r + p.s; }));
}

StepSurvival kaplan_meier(std::span<const double> times,
                          const std::vector<bool>& censored,
                          std::optional<std::span<const double>> entry_times) {
  const std::size_t n = times.size();
  require(censored.size() == n, "kaplan_meier: times and censoring flags differ in length");
  require(!entry_times || entry_times->size() == n,
          "kaplan_meier: times and entry times differ in length");

  std::vector<double> exits(times.begin(), times.end());
  std::vector<double> entries(n, 0.0);
  if (entry_times) std::copy(entry_times->begin(), entry_times->end(), entries.begin());
  std::vector<double> events;
  double last_censored = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    require(std::isfinite(exits[i]) && std::isfinite(entries[i]) && entries[i] >= 0.0,
            "kaplan_meier: times must be finite and entries nonnegative");
    if (!(exits[i] > entries[i]))
      fail(ErrorCode::invalid_argument,
           "kaplan_meier: observation " + std::to_string(i) +
               " has time <= entry time");
    if (censored[i])
      last_censored = std::max(last_censored, exits[i]);
    else
      events.push_back(exits[i]);
  }
  std::sort(exits.begin(), exits.end());
  std::sort(entries.begin(), entries.end());
  std::sort(events.begin(), events.end());

  StepSurvival est;
  est.n_input = n;
  double s = 1.0;
  for (std::size_t k = 0; k < events.size();) {
    const double q = events[k];
    std::size_t d = 0;
    while (k < events.size() && events[k] == q) ++d, ++k;
    // Y(q) = #{exit >= q} - #{entry >= q}; entry < exit for every subject
    auto exiting = static_cast<std::size_t>(
        exits.end() - std::lower_bound(exits.begin(), exits.end(), q));
    auto not_entered = static_cast<std::size_t>(
        entries.end() - std::lower_bound(entries.begin(), entries.end(), q));
    std::size_t y = exiting - not_entered;
    s *= 1.0 - static_cast<double>(d) / static_cast<double>(y);
    est.jump_times.push_back(q);
    est.survival.push_back(s);
    est.events.push_back(d);
    est.at_risk.push_back(y);
  }
  est.tail_censored = !events.empty() ? last_censored >= events.back()
                                      : last_censored > 0.0;
  return est;
}

StepSurvival winter_foldes(std::span<const EquilibriumPair> pairs) {
  if (pairs.empty()) fail(ErrorCode::no_data, "winter_foldes: no pairs");
  if (std::all_of(pairs.begin(), pairs.end(),
                  [](const EquilibriumPair& p) { return p.s_censored; }))
    fail(ErrorCode::no_data, "winter_foldes: every pair is censored");
  std::vector<double> q, r;
  std::vector<bool> cens;
  q.reserve(pairs.size());
  r.reserve(pairs.size());
  for (const auto& p : pairs) {
    q.push_back(p.q());
    r.push_back(p.r);
    cens.push_back(p.s_censored);
  }
  return kaplan_meier(q, cens, std::span<const double>(r));
}

StepSurvival window_product_limit(std::span<const WindowObservation> obs) {
  std::vector<double> times;
  std::vector<bool> cens;
  bool any_complete = false;
  for (const auto& o : obs) {
    if (o.kind == WindowKind::complete_gap) {
      times.push_back(o.value);
      cens.push_back(false);
      any_complete = true;
    } else if (o.kind == WindowKind::censored_gap) {
      times.push_back(o.value);
      cens.push_back(true);
    }
  }
  if (!any_complete)
    fail(ErrorCode::no_data, "window_product_limit: no complete gaps in the data");
  return kaplan_meier(times, cens);
}

StepSurvival palmer_cox(std::span<const Segment> segments, double window_length) {
  require(window_length > 0.0, "palmer_cox: window length must be positive");
  std::vector<double> times;
  std::vector<bool> cens;
  for (const auto& s : segments) {
    require(s.length > 0.0, "palmer_cox: segment lengths must be positive");
    if (s.kind != SegmentKind::residual_censored && s.length > window_length)
      fail(ErrorCode::invalid_argument,
           "palmer_cox: segment length exceeds the window length");
    switch (s.kind) {
      case SegmentKind::proper_complete:
        times.insert(times.end(), {s.length, s.length});
        cens.insert(cens.end(), {false, false});
        break;
      case SegmentKind::proper_censored:
      case SegmentKind::residual_complete:
        times.push_back(s.length);
        cens.push_back(true);
        break;
      case SegmentKind::residual_censored:
        break;
    }
  }
  if (times.empty())
    fail(ErrorCode::no_data, "palmer_cox: every segment is doubly censored");
  return kaplan_meier(times, cens);
}

StepSurvival greenwood_variance(StepSurvival est, std::span<const std::size_t> events,
                                std::span<const std::size_t> at_risk) {
  require(events.size() == est.size() && at_risk.size() == est.size(),
          "greenwood_variance: counts do not align with the jump times");
  est.variance.assign(est.size(), std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  for (std::size_t k = 0; k < est.size(); ++k) {
    auto d = static_cast<double>(events[k]);
    auto y = static_cast<double>(at_risk[k]);
    if (!(y > d)) break;
    sum += d / (y * (y - d));
    est.variance[k] = est.survival[k] * est.survival[k] * sum;
  }
  return est;
}

StepSurvival greenwood_variance(StepSurvival est) {
  auto events = est.events;
  auto at_risk = est.at_risk;
  return greenwood_variance(std::move(est), events, at_risk);
}

}  // namespace gapest
