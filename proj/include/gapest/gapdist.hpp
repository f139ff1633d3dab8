#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gapest {

/// Probability distribution on finitely many positive atoms. Output type of
/// the NPMLE routines and one of the gap-distribution families.
///
/// The CDF is right-continuous: cdf(a_j) includes the mass at a_j.
class DiscreteDistribution {
 public:
  DiscreteDistribution(std::vector<double> atoms, std::vector<double> masses);

  std::span<const double> atoms() const noexcept { return atoms_; }
  std::span<const double> masses() const noexcept { return masses_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  double cdf(double t) const;
  double survival(double t) const { return 1.0 - cdf(t); }
  /// Left limit S(t-) = P(X >= t).
  double survival_before(double t) const;
  /// Probability mass located exactly at t (0 off the atoms).
  double mass_at(double t) const;
  double mean() const;
  /// Integral of S over [t, inf) = sum_j p_j (a_j - t)^+.
  double tail_integral(double t) const;
  /// Smallest p-quantile: first atom with cdf >= p.
  double quantile(double p) const;

  friend bool operator==(const DiscreteDistribution&,
                         const DiscreteDistribution&) = default;

 private:
  std::vector<double> atoms_;
  std::vector<double> masses_;
  std::vector<double> cumulative_;
};

struct Exponential {
  double rate;
};

struct Weibull {
  double shape;
  double scale;
};

/// Uniform on (lower, upper) with 0 <= lower < upper.
struct UniformInterval {
  double lower;
  double upper;
};

enum class FamilyTag { exponential, weibull, uniform_interval, discrete_atoms };

/// Gap-time distribution F of a renewal process.
///
/// Every functional needed by the equilibrium theory is available in closed
/// form (special functions for the Weibull tail); the quadrature routes in
/// this header compute the same quantities numerically so the two can be
/// cross-checked.
class GapDistribution {
 public:
  using Family =
      std::variant<Exponential, Weibull, UniformInterval, DiscreteDistribution>;

  static GapDistribution exponential(double rate);
  static GapDistribution weibull(double shape, double scale);
  static GapDistribution uniform(double lower, double upper);
  static GapDistribution discrete(DiscreteDistribution dist);

  /// Parses `exp:<rate>`, `weibull:<shape>:<scale>`, `uniform:<a>:<b>` or
  /// `atoms:<a1>=<p1>,<a2>=<p2>,...`. Atom masses within 1e-6 of summing to
  /// one are renormalized.
  static GapDistribution parse(std::string_view spec);
  /// Inverse of parse() (shortest round-trip decimal formatting).
  std::string spec() const;

  FamilyTag tag() const noexcept;
  const Family& family() const noexcept { return family_; }
  bool is_discrete() const noexcept { return tag() == FamilyTag::discrete_atoms; }

  double cdf(double t) const;
  double survival(double t) const { return 1.0 - cdf(t); }
  /// Lebesgue density for continuous families, point mass for atoms.
  double density(double t) const;
  double cum_hazard(double t) const;
  double quantile(double p) const;
  double mean() const;
  /// Integral of (1 - F) over [t, inf).
  double tail_integral(double t) const;
  /// Inverse CDF of the length-biased law with density q f(q) / mu.
  double length_biased_quantile(double u) const;

  double support_lower() const;
  /// +inf for unbounded families.
  double support_upper() const;
  /// Point beyond which the neglected integral of 1 - F is below 1e-12.
  double truncation_point() const;

 private:
  explicit GapDistribution(Family family) : family_(std::move(family)) {}
  Family family_;
};

struct Evaluation {
  double cdf = 0.0;
  double density = 0.0;
  double survival = 1.0;
  /// Hazard; empty where the survival function has reached zero.
  std::optional<double> beta;
  double cum_hazard = 0.0;
};

Evaluation evaluate(const GapDistribution& dist, double t);

inline double mean(const GapDistribution& dist) { return dist.mean(); }

/// Marginal hazard of the backward recurrence time:
/// alpha(t) = (1 - F(t)) / int_t^inf (1 - F). Empty when the denominator is 0.
std::optional<double> alpha(const GapDistribution& dist, double t);

/// State probabilities of the 0 -> 1 -> 2 process around a fixed point
/// (before entry / at risk / exited).
struct Occupation {
  double p0 = 1.0;
  double p1 = 0.0;
  double p2 = 0.0;
};

Occupation occupation(const GapDistribution& dist, double t);

/// alpha(t) * p0(t) / p1(t). Equals 1/t for every F; computed through the
/// occupation probabilities, not from the closed form.
std::optional<double> backward_alpha(const GapDistribution& dist, double t);

struct DivergenceOptions {
  int halvings = 60;
  double threshold = 1e-3;
};

struct Integrability {
  bool finite = false;
  /// E(1/X); +inf when divergent.
  double inverse_moment = 0.0;
  /// int_0^eps beta(t) / P{U(t) = 1} dt; +inf when divergent.
  double local_value = 0.0;
};

/// Finiteness of E(1/X). The lower limit of int f(x)/x dx is halved
/// repeatedly below eps; the integral is declared divergent when the last
/// three halvings each add more than `threshold`.
Integrability integrability_diagnostic(const GapDistribution& dist, double eps,
                                       const DivergenceOptions& opts = {});

/// Quadrature routes, independent of the closed forms above.
namespace numeric {

double mean_from_density(const GapDistribution& dist);
double mean_from_survival(const GapDistribution& dist);
double tail_integral(const GapDistribution& dist, double t);
/// Mean by quadrature of 1 - F; throws ErrorCode::divergent when the two
/// quadrature routes disagree by more than 1e-6 or the error estimate is
/// not small.
double mean(const GapDistribution& dist);

}  // namespace numeric

}  // namespace gapest
