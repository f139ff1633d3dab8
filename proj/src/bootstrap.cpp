#include "gapest/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "gapest/error.hpp"
#include "gapest/npmle.hpp"
#include "gapest/rng.hpp"

namespace gapest {

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::winter_foldes: return "wf";
    case Estimator::window_pl: return "pl";
    case Estimator::palmer_cox: return "pc";
    case Estimator::cox_vardi: return "cv";
    case Estimator::laslett_em: return "em";
  }
  return "?";
}

Estimator parse_estimator(std::string_view tag) {
  for (auto e : {Estimator::winter_foldes, Estimator::window_pl, Estimator::palmer_cox,
                 Estimator::cox_vardi, Estimator::laslett_em})
    if (to_string(e) == tag) return e;
  if (tag == "winter_foldes") return Estimator::winter_foldes;
  if (tag == "window_pl") return Estimator::window_pl;
  if (tag == "palmer_cox") return Estimator::palmer_cox;
  if (tag == "cox_vardi") return Estimator::cox_vardi;
  if (tag == "laslett_em") return Estimator::laslett_em;
  fail(ErrorCode::parse, "unknown estimator '" + std::string(tag) + "'");
}

bool applies_to(const ObservationData& data, Estimator est) {
  switch (est) {
    case Estimator::winter_foldes:
    case Estimator::cox_vardi:
      return std::holds_alternative<std::vector<EquilibriumPair>>(data);
    case Estimator::window_pl:
      return std::holds_alternative<std::vector<WindowObservation>>(data);
    case Estimator::palmer_cox:
    case Estimator::laslett_em:
      return std::holds_alternative<std::vector<Segment>>(data);
  }
  return false;
}

StepSurvival run_survival_estimator(const ObservationData& data, Estimator est,
                                    double window_length) {
  auto mismatch = [&]() -> StepSurvival {
    fail(ErrorCode::invalid_argument,
         "estimator '" + std::string(to_string(est)) +
             "' does not apply to this sampling frame");
  };
  switch (est) {
    case Estimator::winter_foldes:
      if (auto* p = std::get_if<std::vector<EquilibriumPair>>(&data))
        return winter_foldes(*p);
      return mismatch();
    case Estimator::cox_vardi:
      if (auto* p = std::get_if<std::vector<EquilibriumPair>>(&data))
        return to_step_survival(cox_vardi_from_pairs(*p));
      return mismatch();
    case Estimator::window_pl:
      if (auto* o = std::get_if<std::vector<WindowObservation>>(&data))
        return window_product_limit(*o);
      return mismatch();
    case Estimator::palmer_cox:
      if (auto* s = std::get_if<std::vector<Segment>>(&data))
        return palmer_cox(*s, window_length);
      return mismatch();
    case Estimator::laslett_em:
      return mismatch();
  }
  return mismatch();
}

double sorted_quantile(const std::vector<double>& sorted, double p) {
  require(!sorted.empty(), "quantile of an empty sample");
  double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

template <class T>
std::vector<T> resample(const std::vector<T>& units, Rng& rng) {
  std::vector<T> out;
  out.reserve(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) out.push_back(units[rng.index(units.size())]);
  return out;
}

}  // namespace

BootstrapBand bootstrap_band(const ObservationData& data, Estimator est,
                             const BootstrapOptions& opts) {
  require(opts.replicates >= 1, "bootstrap_band: need at least one replicate");
  require(opts.level > 0.0 && opts.level < 1.0, "bootstrap_band: level must lie in (0, 1)");
  std::visit([](const auto& v) {
    if (v.empty()) fail(ErrorCode::no_data, "bootstrap_band: no observations");
  }, data);
  if (!applies_to(data, est))
    fail(ErrorCode::invalid_argument, "bootstrap_band: estimator '" +
                                          std::string(to_string(est)) +
                                          "' does not apply to this sampling frame");

  const std::size_t B = opts.replicates;
  std::vector<StepSurvival> fits(B);
  std::vector<std::size_t> redraws(B, 0);

  auto run_one = [&](std::size_t b) {
    const auto base = derive_seed(opts.seed, b);
    for (std::size_t attempt = 0;; ++attempt) {
      Rng rng(attempt == 0 ? base : derive_seed(base, attempt));
      ObservationData sample = std::visit(
          [&](const auto& v) { return ObservationData(resample(v, rng)); }, data);
      try {
        fits[b] = run_survival_estimator(sample, est, opts.window_length);
        redraws[b] = attempt;
        return;
      } catch (const Error& e) {
        if (attempt + 1 >= opts.max_redraws)
          fail(ErrorCode::no_data,
               "bootstrap_band: estimator failed on every redraw: " + std::string(e.what()));
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(opts.threads, 1, B);
  if (threads == 1) {
    for (std::size_t b = 0; b < B; ++b) run_one(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t b; (b = next++) < B;) {
          try {
            run_one(b);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }

  BootstrapBand band;
  band.grid = opts.grid;
  if (band.grid.empty()) {
    for (const auto& f : fits) band.grid.insert(band.grid.end(), f.jump_times.begin(), f.jump_times.end());
    std::sort(band.grid.begin(), band.grid.end());
    band.grid.erase(std::unique(band.grid.begin(), band.grid.end()), band.grid.end());
  }
  for (auto r : redraws) band.failures += r;

  const double lo_p = 0.5 * (1.0 - opts.level), hi_p = 0.5 * (1.0 + opts.level);
  band.lower.reserve(band.grid.size());
  band.upper.reserve(band.grid.size());
  std::vector<double> values(B);
  for (double t : band.grid) {
    for (std::size_t b = 0; b < B; ++b) values[b] = fits[b].value(t);
    std::sort(values.begin(), values.end());
    band.lower.push_back(sorted_quantile(values, lo_p));
    band.upper.push_back(sorted_quantile(values, hi_p));
  }
  return band;
}

}  // namespace gapest
