#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gapest/bootstrap.hpp"

namespace gapest {

enum class Scheme { equilibrium, window, segments };

std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view text);

/// Monte Carlo comparison of estimators against the true F.
struct McConfig {
  std::string distribution = "exp:1";
  Scheme scheme = Scheme::equilibrium;
  /// Pairs per replicate (equilibrium) or windows per replicate (window,
  /// segments).
  std::size_t n = 2000;
  std::size_t replicates = 200;
  std::uint64_t seed = 20100201;
  /// Empty: every estimator applicable to the scheme.
  std::vector<Estimator> estimators;
  double window_length = 1.0;
  double birth_rate = 1.0;
  /// Bin width for the EM estimator.
  double bin_width = 0.1;
  /// Empty: 40 equispaced points over the 5% to 95% quantiles of F, capped
  /// at 0.95 * window_length for the windowed schemes.
  std::vector<double> grid;
  /// Time of the variance-ordering verdict (equilibrium scheme).
  double check_time = 1.0;
  /// Tolerance on sup |bias| over the grid.
  double bias_tolerance = 0.05;
  std::size_t threads = 1;
};

struct EstimatorSummary {
  Estimator estimator = Estimator::winter_foldes;
  std::vector<double> mean;  // mean CDF estimate
  std::vector<double> bias;
  std::vector<double> variance;
  std::vector<double> mse;
  /// Monte Carlo variance of the CDF estimate at check_time.
  double variance_at_check = 0.0;
  /// (replicate, grid point) pairs past the estimate's last jump.
  std::size_t beyond_last_jump = 0;
  std::size_t replicates_used = 0;
  std::size_t failures = 0;
};

struct Verdict {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct McReport {
  McConfig config;
  std::vector<double> grid;
  std::vector<double> truth;  // F on the grid
  std::vector<EstimatorSummary> summaries;
  std::vector<Verdict> verdicts;

  bool all_passed() const;
};

/// Replicate i simulates with derive_seed(seed, i). Statistics are sums over
/// replicates in index order, so reports are identical for any thread count.
McReport mc_compare(const McConfig& config);

struct TailConfig {
  std::string divergent = "exp:1";
  std::string finite = "weibull:2:1";
  std::vector<std::size_t> sizes{500, 1000, 2000, 4000};
  std::size_t replicates = 50;
  double eps = 0.1;
  std::uint64_t seed = 20100201;
  std::size_t threads = 1;
};

struct TailRow {
  std::string distribution;
  bool inverse_moment_finite = false;
  Estimator estimator = Estimator::winter_foldes;
  std::size_t n = 0;
  /// Mean over replicates of sqrt(n) sup_{t <= eps} |F_hat(t) - F(t)|.
  double scaled_sup_error = 0.0;
  double sd = 0.0;
};

struct TailReport {
  TailConfig config;
  std::vector<TailRow> rows;
};

/// Near-zero behaviour of Winter-Foldes and Cox-Vardi for one distribution
/// with E(1/X) = inf and one with E(1/X) < inf. Throws when the
/// integrability diagnostic does not separate the two.
TailReport tail_failure_demo(const TailConfig& config);

/// sup over t in [0, eps] of |(1 - est(t)) - F(t)| for continuous F.
double sup_cdf_error(const StepSurvival& est, const GapDistribution& truth, double eps);

}  // namespace gapest
