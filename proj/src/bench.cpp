#include "gapest/bench.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "gapest/error.hpp"
#include "gapest/npmle.hpp"
#include "gapest/rng.hpp"

namespace gapest {

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::equilibrium: return "equilibrium";
    case Scheme::window: return "window";
    case Scheme::segments: return "segments";
  }
  return "?";
}

Scheme parse_scheme(std::string_view text) {
  for (auto s : {Scheme::equilibrium, Scheme::window, Scheme::segments})
    if (to_string(s) == text) return s;
  fail(ErrorCode::parse, "unknown scheme '" + std::string(text) + "'");
}

bool McReport::all_passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(),
                     [](const Verdict& v) { return v.passed; });
}

namespace {

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < count;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::vector<Estimator> applicable(Scheme s) {
  switch (s) {
    case Scheme::equilibrium: return {Estimator::winter_foldes, Estimator::cox_vardi};
    case Scheme::window: return {Estimator::window_pl};
    case Scheme::segments: return {Estimator::palmer_cox, Estimator::laslett_em};
  }
  return {};
}

ObservationData simulate(const McConfig& c, const GapDistribution& dist, std::uint64_t seed) {
  switch (c.scheme) {
    case Scheme::equilibrium: return sample_equilibrium(dist, c.n, seed);
    case Scheme::window: return sample_windows(dist, c.window_length, c.n, seed);
    case Scheme::segments:
      return sample_segment_windows(c.birth_rate, dist, c.window_length, c.n, seed);
  }
  return {};
}

// CDF estimate on the grid plus the last jump time; empty on failure.
struct Fit {
  std::vector<double> cdf;
  double at_check = 0.0;
  double last_jump = 0.0;
};

std::optional<Fit> fit_one(const ObservationData& data, Estimator est, const McConfig& c,
                           const std::vector<double>& grid) {
  try {
    Fit fit;
    if (est == Estimator::laslett_em) {
      const auto& segs = std::get<std::vector<Segment>>(data);
      auto binned = bin_segments(segs, c.bin_width);
      auto atoms = default_grid(binned, c.window_length, c.bin_width);
      auto em = laslett_em(binned, c.window_length, atoms);
      const auto& d = em.distribution;
      for (double t : grid) fit.cdf.push_back(d.cdf(t));
      fit.at_check = d.cdf(c.check_time);
      fit.last_jump = d.atoms().back();
      return fit;
    }
    auto s = run_survival_estimator(data, est, c.window_length);
    for (double t : grid) fit.cdf.push_back(1.0 - s.value(t));
    fit.at_check = 1.0 - s.value(c.check_time);
    fit.last_jump = s.jump_times.empty() ? 0.0 : s.jump_times.back();
    return fit;
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

McReport mc_compare(const McConfig& config) {
  require(config.n >= 1 && config.replicates >= 1, "mc_compare: n and replicates must be positive");
  const auto dist = GapDistribution::parse(config.distribution);
  const auto allowed = applicable(config.scheme);
  auto estimators = config.estimators.empty() ? allowed : config.estimators;
  for (auto e : estimators)
    if (std::find(allowed.begin(), allowed.end(), e) == allowed.end())
      fail(ErrorCode::invalid_argument,
           "mc_compare: estimator '" + std::string(to_string(e)) +
               "' does not apply to the " + std::string(to_string(config.scheme)) + " scheme");

  McReport report;
  report.config = config;
  report.config.estimators = estimators;
  report.grid = config.grid;
  if (report.grid.empty()) {
    double lo = dist.quantile(0.05), hi = dist.quantile(0.95);
    // windowed data carry no information about F beyond the window length
    if (config.scheme != Scheme::equilibrium) {
      hi = std::min(hi, 0.95 * config.window_length);
      lo = std::min(lo, 0.5 * hi);
    }
    for (int k = 0; k < 40; ++k) report.grid.push_back(lo + (hi - lo) * k / 39.0);
  }
  for (double t : report.grid) report.truth.push_back(dist.cdf(t));

  const std::size_t R = config.replicates, E = estimators.size();
  std::vector<std::vector<std::optional<Fit>>> fits(R, std::vector<std::optional<Fit>>(E));
  parallel_for(R, config.threads, [&](std::size_t r) {
    auto data = simulate(config, dist, derive_seed(config.seed, r));
    for (std::size_t e = 0; e < E; ++e) fits[r][e] = fit_one(data, estimators[e], config, report.grid);
  });

  const std::size_t G = report.grid.size();
  for (std::size_t e = 0; e < E; ++e) {
    EstimatorSummary s;
    s.estimator = estimators[e];
    s.mean.assign(G, 0.0);
    s.variance.assign(G, 0.0);
    s.mse.assign(G, 0.0);
    double check_mean = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      if (!fits[r][e]) {
        ++s.failures;
        continue;
      }
      ++s.replicates_used;
      const auto& f = *fits[r][e];
      for (std::size_t g = 0; g < G; ++g) {
        s.mean[g] += f.cdf[g];
        if (report.grid[g] > f.last_jump) ++s.beyond_last_jump;
      }
      check_mean += f.at_check;
    }
    const auto used = static_cast<double>(s.replicates_used);
    if (s.replicates_used > 0) {
      for (auto& m : s.mean) m /= used;
      check_mean /= used;
      for (std::size_t r = 0; r < R; ++r) {
        if (!fits[r][e]) continue;
        const auto& f = *fits[r][e];
        for (std::size_t g = 0; g < G; ++g) {
          s.variance[g] += (f.cdf[g] - s.mean[g]) * (f.cdf[g] - s.mean[g]);
          s.mse[g] += (f.cdf[g] - report.truth[g]) * (f.cdf[g] - report.truth[g]);
        }
        s.variance_at_check += (f.at_check - check_mean) * (f.at_check - check_mean);
      }
      for (std::size_t g = 0; g < G; ++g) {
        s.variance[g] /= used;
        s.mse[g] /= used;
      }
      s.variance_at_check /= used;
    }
    s.bias.resize(G);
    for (std::size_t g = 0; g < G; ++g) s.bias[g] = s.mean[g] - report.truth[g];

    double worst = 0.0;
    for (double b : s.bias) worst = std::max(worst, std::abs(b));
    report.verdicts.push_back(
        {"max_abs_bias[" + std::string(to_string(s.estimator)) + "]",
         s.replicates_used > 0 && worst <= config.bias_tolerance,
         "sup |bias| = " + std::to_string(worst) + ", tolerance " +
             std::to_string(config.bias_tolerance) + ", failed replicates " +
             std::to_string(s.failures)});
    report.summaries.push_back(std::move(s));
  }

  auto find = [&](Estimator e) -> const EstimatorSummary* {
    for (const auto& s : report.summaries)
      if (s.estimator == e) return &s;
    return nullptr;
  };
  if (auto *cv = find(Estimator::cox_vardi), *wf = find(Estimator::winter_foldes); cv && wf) {
    report.verdicts.push_back(
        {"variance_cv_le_wf", cv->variance_at_check <= wf->variance_at_check,
         "t = " + std::to_string(config.check_time) + ": var(cv) = " +
             std::to_string(cv->variance_at_check) +
             ", var(wf) = " + std::to_string(wf->variance_at_check)});
  }
  return report;
}

double sup_cdf_error(const StepSurvival& est, const GapDistribution& truth, double eps) {
  double sup = 0.0;
  for (std::size_t k = 0; k < est.size() && est.jump_times[k] <= eps; ++k) {
    const double t = est.jump_times[k];
    const double f = truth.cdf(t);
    sup = std::max({sup, std::abs(1.0 - est.survival[k] - f),
                    std::abs(1.0 - est.value_before(t) - f)});
  }
  return std::max(sup, std::abs(1.0 - est.value(eps) - truth.cdf(eps)));
}

TailReport tail_failure_demo(const TailConfig& config) {
  require(config.replicates >= 1, "tail_failure_demo: need at least one replicate");
  require(config.eps > 0.0, "tail_failure_demo: eps must be positive");
  const std::vector<std::string> specs{config.divergent, config.finite};
  std::vector<GapDistribution> dists;
  std::vector<bool> finite;
  for (const auto& s : specs) {
    dists.push_back(GapDistribution::parse(s));
    finite.push_back(integrability_diagnostic(dists.back(), config.eps).finite);
  }
  if (finite[0] == finite[1])
    fail(ErrorCode::invalid_argument,
         "tail_failure_demo: the integrability diagnostic does not separate the two distributions");

  TailReport report;
  report.config = config;
  const std::vector<Estimator> estimators{Estimator::winter_foldes, Estimator::cox_vardi};
  for (std::size_t d = 0; d < dists.size(); ++d) {
    for (std::size_t ni = 0; ni < config.sizes.size(); ++ni) {
      const std::size_t n = config.sizes[ni];
      const std::size_t R = config.replicates;
      std::vector<std::array<double, 2>> errs(R);
      const auto cell_seed = derive_seed(derive_seed(config.seed, d), ni);
      parallel_for(R, config.threads, [&](std::size_t r) {
        ObservationData data = sample_equilibrium(dists[d], n, derive_seed(cell_seed, r));
        for (std::size_t e = 0; e < 2; ++e) {
          auto est = run_survival_estimator(data, estimators[e]);
          errs[r][e] = std::sqrt(static_cast<double>(n)) * sup_cdf_error(est, dists[d], config.eps);
        }
      });
      for (std::size_t e = 0; e < 2; ++e) {
        double m = 0.0, v = 0.0;
        for (const auto& x : errs) m += x[e];
        m /= static_cast<double>(R);
        for (const auto& x : errs) v += (x[e] - m) * (x[e] - m);
        TailRow row;
        row.distribution = dists[d].spec();
        row.inverse_moment_finite = finite[d];
        row.estimator = estimators[e];
        row.n = n;
        row.scaled_sup_error = m;
        row.sd = R > 1 ? std::sqrt(v / static_cast<double>(R - 1)) : 0.0;
        report.rows.push_back(row);
      }
    }
  }
  // group rows by (distribution, estimator) so each cell is contiguous
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const TailRow& a, const TailRow& b) {
    return a.inverse_moment_finite != b.inverse_moment_finite
               ? !a.inverse_moment_finite
               : a.estimator < b.estimator;
  });
  return report;
}

}  // namespace gapest
