#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "gapest/plim.hpp"
#include "gapest/sampler.hpp"

namespace gapest {

enum class Estimator { winter_foldes, window_pl, palmer_cox, cox_vardi, laslett_em };

/// Short tags used by the CLI: wf, pl, pc, cv, em.
std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view tag);

using ObservationData =
    std::variant<std::vector<EquilibriumPair>, std::vector<WindowObservation>,
                 std::vector<Segment>>;

/// Whether the estimator is defined for the data's sampling frame.
bool applies_to(const ObservationData& data, Estimator est);

/// Runs a product-limit or Cox-Vardi estimator and returns 1 - F as a step
/// function. Throws ErrorCode::invalid_argument when the estimator does not
/// apply to the data's sampling frame.
StepSurvival run_survival_estimator(const ObservationData& data, Estimator est,
                                    double window_length = 0.0);

struct BootstrapOptions {
  std::size_t replicates = 1000;
  std::uint64_t seed = 20100201;
  double level = 0.95;
  /// Evaluation times; empty means the pooled jump times of all replicates.
  std::vector<double> grid;
  /// Needed by palmer_cox.
  double window_length = 0.0;
  std::size_t threads = 1;
  /// Redraws allowed per replicate when the estimator fails on a resample.
  std::size_t max_redraws = 100;
};

struct BootstrapBand {
  std::vector<double> grid;
  std::vector<double> lower;
  std::vector<double> upper;
  /// Resamples that were redrawn after an estimator failure.
  std::size_t failures = 0;
};

/// Pointwise percentile bands from resampling observation units (pairs,
/// window records or segments) with replacement. Palmer-Cox doubling is
/// applied to each resample. Replicate b uses derive_seed(seed, b); its k-th
/// redraw uses derive_seed(derive_seed(seed, b), k).
BootstrapBand bootstrap_band(const ObservationData& data, Estimator est,
                             const BootstrapOptions& opts);

/// Type-7 (linear interpolation) empirical quantile of sorted values.
double sorted_quantile(const std::vector<double>& sorted, double p);

}  // namespace gapest
