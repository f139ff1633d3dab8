#include "gapest/gapdist.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "gapest/error.hpp"
#include "gapest/quadrature.hpp"

namespace gapest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace

// --- DiscreteDistribution ---------------------------------------------------

DiscreteDistribution::DiscreteDistribution(std::vector<double> atoms,
                                           std::vector<double> masses)
    : atoms_(std::move(atoms)), masses_(std::move(masses)) {
  require(!atoms_.empty(), "discrete distribution needs at least one atom");
  require(atoms_.size() == masses_.size(),
          "discrete distribution: atoms and masses differ in length");
  double total = 0.0;
  for (std::size_t j = 0; j < atoms_.size(); ++j) {
    require(std::isfinite(atoms_[j]) && atoms_[j] > 0.0,
            "discrete distribution: atoms must be positive and finite");
    require(j == 0 || atoms_[j] > atoms_[j - 1],
            "discrete distribution: atoms must be strictly increasing");
    require(std::isfinite(masses_[j]) && masses_[j] >= 0.0,
            "discrete distribution: masses must be nonnegative");
    total += masses_[j];
  }
  require(std::abs(total - 1.0) <= 1e-10,
          "discrete distribution: masses must sum to 1");
  cumulative_.resize(masses_.size());
  std::partial_sum(masses_.begin(), masses_.end(), cumulative_.begin());
  cumulative_.back() = 1.0;
}

double DiscreteDistribution::cdf(double t) const {
  auto it = std::upper_bound(atoms_.begin(), atoms_.end(), t);
  if (it == atoms_.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
}

double DiscreteDistribution::survival_before(double t) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), t);
  if (it == atoms_.begin()) return 1.0;
  return 1.0 - cumulative_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
}

double DiscreteDistribution::mass_at(double t) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), t);
  if (it == atoms_.end() || *it != t) return 0.0;
  return masses_[static_cast<std::size_t>(it - atoms_.begin())];
}

double DiscreteDistribution::mean() const {
  return std::inner_product(atoms_.begin(), atoms_.end(), masses_.begin(), 0.0);
}

double DiscreteDistribution::tail_integral(double t) const {
  double s = 0.0;
  for (std::size_t j = 0; j < atoms_.size(); ++j)
    if (atoms_[j] > t) s += masses_[j] * (atoms_[j] - t);
  return s;
}

double DiscreteDistribution::quantile(double p) const {
  auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), p);
  if (it == cumulative_.end()) return atoms_.back();
  return atoms_[static_cast<std::size_t>(it - cumulative_.begin())];
}

// --- GapDistribution --------------------------------------------------------

GapDistribution GapDistribution::exponential(double rate) {
  require(std::isfinite(rate) && rate > 0.0, "exponential rate must be positive");
  return GapDistribution(Exponential{rate});
}

GapDistribution GapDistribution::weibull(double shape, double scale) {
  require(std::isfinite(shape) && shape > 0.0 && std::isfinite(scale) &&
              scale > 0.0,
          "weibull shape and scale must be positive");
  return GapDistribution(Weibull{shape, scale});
}

GapDistribution GapDistribution::uniform(double lower, double upper) {
  require(std::isfinite(lower) && std::isfinite(upper) && lower >= 0.0 &&
              upper > lower,
          "uniform interval needs 0 <= a < b");
  return GapDistribution(UniformInterval{lower, upper});
}

GapDistribution GapDistribution::discrete(DiscreteDistribution dist) {
  return GapDistribution(std::move(dist));
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view token, std::string_view spec) {
  double x = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), x);
  if (token.empty() || res.ec != std::errc() ||
      res.ptr != token.data() + token.size() || !std::isfinite(x))
    fail(ErrorCode::parse, "invalid distribution spec '" + std::string(spec) +
                               "': bad number '" + std::string(token) + "'");
  return x;
}

}  // namespace

GapDistribution GapDistribution::parse(std::string_view spec) {
  const auto bad = [&](const std::string& why) -> GapDistribution {
    fail(ErrorCode::parse,
         "invalid distribution spec '" + std::string(spec) + "': " + why);
  };
  auto colon = spec.find(':');
  if (colon == std::string_view::npos) return bad("expected <family>:<params>");
  auto family = spec.substr(0, colon);
  auto rest = spec.substr(colon + 1);
  try {
    if (family == "exp") {
      auto parts = split(rest, ':');
      if (parts.size() != 1) return bad("expected exp:<rate>");
      return exponential(parse_number(parts[0], spec));
    }
    if (family == "weibull") {
      auto parts = split(rest, ':');
      if (parts.size() != 2) return bad("expected weibull:<shape>:<scale>");
      return weibull(parse_number(parts[0], spec), parse_number(parts[1], spec));
    }
    if (family == "uniform") {
      auto parts = split(rest, ':');
      if (parts.size() != 2) return bad("expected uniform:<a>:<b>");
      return uniform(parse_number(parts[0], spec), parse_number(parts[1], spec));
    }
    if (family == "atoms") {
      std::vector<std::pair<double, double>> pairs;
      for (auto item : split(rest, ',')) {
        auto eq = item.find('=');
        if (eq == std::string_view::npos) return bad("expected <atom>=<mass>");
        pairs.emplace_back(parse_number(item.substr(0, eq), spec),
                           parse_number(item.substr(eq + 1), spec));
      }
      std::sort(pairs.begin(), pairs.end());
      std::vector<double> atoms, masses;
      double total = 0.0;
      for (auto [a, p] : pairs) {
        atoms.push_back(a);
        masses.push_back(p);
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-6) return bad("masses must sum to 1");
      for (auto& p : masses) p /= total;
      return discrete(DiscreteDistribution(std::move(atoms), std::move(masses)));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::parse) throw;
    return bad(e.what());
  }
  return bad("unknown family '" + std::string(family) + "'");
}

std::string GapDistribution::spec() const {
  return std::visit(
      overloaded{
          [](const Exponential& d) { return "exp:" + format_double(d.rate); },
          [](const Weibull& d) {
            return "weibull:" + format_double(d.shape) + ":" +
                   format_double(d.scale);
          },
          [](const UniformInterval& d) {
            return "uniform:" + format_double(d.lower) + ":" +
                   format_double(d.upper);
          },
          [](const DiscreteDistribution& d) {
            std::string s = "atoms:";
            for (std::size_t j = 0; j < d.size(); ++j) {
              if (j) s += ',';
              s += format_double(d.atoms()[j]) + "=" +
                   format_double(d.masses()[j]);
            }
            return s;
          },
      },
      family_);
}

FamilyTag GapDistribution::tag() const noexcept {
  return static_cast<FamilyTag>(family_.index());
}

double GapDistribution::cdf(double t) const {
  if (t <= 0.0) return 0.0;
  return std::visit(
      overloaded{
          [t](const Exponential& d) { return -std::expm1(-d.rate * t); },
          [t](const Weibull& d) {
            return -std::expm1(-std::pow(t / d.scale, d.shape));
          },
          [t](const UniformInterval& d) {
            return std::clamp((t - d.lower) / (d.upper - d.lower), 0.0, 1.0);
          },
          [t](const DiscreteDistribution& d) { return d.cdf(t); },
      },
      family_);
}

double GapDistribution::density(double t) const {
  if (t < 0.0) return 0.0;
  return std::visit(
      overloaded{
          [t](const Exponential& d) { return d.rate * std::exp(-d.rate * t); },
          [t](const Weibull& d) {
            if (t == 0.0)
              return d.shape < 1.0 ? kInf : (d.shape == 1.0 ? 1.0 / d.scale : 0.0);
            double z = t / d.scale;
            return d.shape / d.scale * std::pow(z, d.shape - 1.0) *
                   std::exp(-std::pow(z, d.shape));
          },
          [t](const UniformInterval& d) {
            return (t > d.lower && t < d.upper) ? 1.0 / (d.upper - d.lower) : 0.0;
          },
          [t](const DiscreteDistribution& d) { return d.mass_at(t); },
      },
      family_);
}

double GapDistribution::cum_hazard(double t) const {
  if (t <= 0.0) return 0.0;
  return std::visit(
      overloaded{
          [t](const Exponential& d) { return d.rate * t; },
          [t](const Weibull& d) { return std::pow(t / d.scale, d.shape); },
          [t](const UniformInterval& d) {
            if (t <= d.lower) return 0.0;
            if (t >= d.upper) return kInf;
            return -std::log((d.upper - t) / (d.upper - d.lower));
          },
          [t](const DiscreteDistribution& d) {
            // sum of discrete hazards p_j / S(a_j-) over atoms <= t
            double h = 0.0, surv = 1.0;
            for (std::size_t j = 0; j < d.size() && d.atoms()[j] <= t; ++j) {
              if (surv <= 0.0) break;
              h += d.masses()[j] / surv;
              surv -= d.masses()[j];
            }
            return h;
          },
      },
      family_);
}

double GapDistribution::quantile(double p) const {
  require(p >= 0.0 && p <= 1.0, "quantile level must lie in [0, 1]");
  return std::visit(
      overloaded{
          [p](const Exponential& d) { return -std::log1p(-p) / d.rate; },
          [p](const Weibull& d) {
            return d.scale * std::pow(-std::log1p(-p), 1.0 / d.shape);
          },
          [p](const UniformInterval& d) {
            return d.lower + p * (d.upper - d.lower);
          },
          [p](const DiscreteDistribution& d) { return d.quantile(p); },
      },
      family_);
}

double GapDistribution::mean() const {
  return std::visit(
      overloaded{
          [](const Exponential& d) { return 1.0 / d.rate; },
          [](const Weibull& d) {
            return d.scale * boost::math::tgamma(1.0 + 1.0 / d.shape);
          },
          [](const UniformInterval& d) { return 0.5 * (d.lower + d.upper); },
          [](const DiscreteDistribution& d) { return d.mean(); },
      },
      family_);
}

double GapDistribution::tail_integral(double t) const {
  if (t < 0.0) return -t + tail_integral(0.0);
  return std::visit(
      overloaded{
          [t](const Exponential& d) { return std::exp(-d.rate * t) / d.rate; },
          [t](const Weibull& d) {
            double a = 1.0 / d.shape;
            double x = std::pow(t / d.scale, d.shape);
            return d.scale * boost::math::tgamma(1.0 + a) *
                   boost::math::gamma_q(a, x);
          },
          [t](const UniformInterval& d) {
            if (t >= d.upper) return 0.0;
            double width = d.upper - d.lower;
            if (t <= d.lower) return (d.lower - t) + 0.5 * width;
            return 0.5 * (d.upper - t) * (d.upper - t) / width;
          },
          [t](const DiscreteDistribution& d) { return d.tail_integral(t); },
      },
      family_);
}

double GapDistribution::length_biased_quantile(double u) const {
  require(u >= 0.0 && u < 1.0, "length-biased quantile level must lie in [0, 1)");
  return std::visit(
      overloaded{
          [u](const Exponential& d) {
            return boost::math::gamma_p_inv(2.0, u) / d.rate;
          },
          [u](const Weibull& d) {
            double g = boost::math::gamma_p_inv(1.0 + 1.0 / d.shape, u);
            return d.scale * std::pow(g, 1.0 / d.shape);
          },
          [u](const UniformInterval& d) {
            double a2 = d.lower * d.lower, b2 = d.upper * d.upper;
            return std::sqrt(a2 + u * (b2 - a2));
          },
          [u](const DiscreteDistribution& d) {
            double mu = d.mean(), acc = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) {
              acc += d.atoms()[j] * d.masses()[j] / mu;
              if (u < acc) return d.atoms()[j];
            }
            return d.atoms().back();
          },
      },
      family_);
}

double GapDistribution::support_lower() const {
  if (auto* u = std::get_if<UniformInterval>(&family_)) return u->lower;
  if (auto* d = std::get_if<DiscreteDistribution>(&family_)) return d->atoms().front();
  return 0.0;
}

double GapDistribution::support_upper() const {
  if (auto* u = std::get_if<UniformInterval>(&family_)) return u->upper;
  if (auto* d = std::get_if<DiscreteDistribution>(&family_)) return d->atoms().back();
  return kInf;
}

double GapDistribution::truncation_point() const {
  double upper = support_upper();
  if (std::isfinite(upper)) return upper;
  // the integral of S beyond the 1 - 1e-15 quantile is below 1e-12 for
  // every Weibull shape >= 0.5
  return quantile(1.0 - 1e-15);
}

// --- equilibrium theory -----------------------------------------------------

Evaluation evaluate(const GapDistribution& dist, double t) {
  require(t >= 0.0, "evaluate: t must be nonnegative");
  Evaluation e;
  e.cdf = dist.cdf(t);
  e.survival = 1.0 - e.cdf;
  e.density = dist.density(t);
  e.cum_hazard = dist.cum_hazard(t);
  if (dist.is_discrete()) {
    const auto& d = std::get<DiscreteDistribution>(dist.family());
    double before = d.survival_before(t);
    if (before > 0.0) e.beta = e.density / before;
  } else if (e.survival > 0.0) {
    e.beta = e.density / e.survival;
  }
  return e;
}

std::optional<double> alpha(const GapDistribution& dist, double t) {
  require(t >= 0.0, "alpha: t must be nonnegative");
  double tail = dist.tail_integral(t);
  if (!(tail > 0.0)) return std::nullopt;
  return dist.survival(t) / tail;
}

Occupation occupation(const GapDistribution& dist, double t) {
  require(t >= 0.0, "occupation: t must be nonnegative");
  double mu = dist.mean();
  Occupation o;
  o.p0 = std::min(1.0, dist.tail_integral(t) / mu);
  o.p1 = t * dist.survival(t) / mu;
  o.p2 = std::max(0.0, 1.0 - o.p0 - o.p1);
  return o;
}

std::optional<double> backward_alpha(const GapDistribution& dist, double t) {
  require(t > 0.0, "backward_alpha: t must be positive");
  auto a = alpha(dist, t);
  auto occ = occupation(dist, t);
  if (!a || !(occ.p1 > 0.0)) return std::nullopt;
  return *a * occ.p0 / occ.p1;
}

namespace {

// Integral of g over (0, eps] by dyadic pieces (eps 2^-k-1, eps 2^-k].
// Returns the accumulated value and whether the last three pieces each
// exceeded the threshold.
std::pair<double, bool> dyadic_integral(const std::function<double(double)>& g,
                                        double eps, const DivergenceOptions& opts) {
  double total = 0.0, hi = eps;
  int run = 0;
  for (int k = 0; k < opts.halvings; ++k) {
    double lo = 0.5 * hi;
    // mapped onto [1/2, 1] so the pieces stay well scaled as hi shrinks
    auto scaled = [&](double u) { return hi * g(hi * u); };
    double piece = quad::integrate(scaled, 0.5, 1.0).value;
    total += piece;
    run = piece > opts.threshold ? run + 1 : 0;
    hi = lo;
  }
  return {total, run >= 3};
}

}  // namespace

Integrability integrability_diagnostic(const GapDistribution& dist, double eps,
                                       const DivergenceOptions& opts) {
  require(eps > 0.0, "integrability_diagnostic: eps must be positive");
  Integrability out;
  double mu = dist.mean();
  if (dist.is_discrete()) {
    const auto& d = std::get<DiscreteDistribution>(dist.family());
    double inv = 0.0, local = 0.0, surv = 1.0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      double a = d.atoms()[j], p = d.masses()[j];
      inv += p / a;
      // discrete hazard over nu_2 evaluated at the left limit
      if (a <= eps && surv > 0.0) local += (p / surv) / (a * surv / mu);
      surv -= p;
    }
    out.finite = true;
    out.inverse_moment = inv;
    out.local_value = local;
    return out;
  }

  // split at the support endpoints so the integrand is smooth on each piece
  double lo_support = dist.support_lower();
  double upper = dist.truncation_point();
  auto f_over_x = [&](double x) { return dist.density(x) / x; };
  auto local_integrand = [&](double x) {
    double s = dist.survival(x);
    if (!(s > 0.0)) return 0.0;
    return mu * dist.density(x) / (x * s * s);
  };

  auto outer = [&](const std::function<double(double)>& g, double from,
                   double to) {
    double v = 0.0;
    if (lo_support > from && lo_support < to) {
      v += quad::integrate(g, from, lo_support).value;
      from = lo_support;
    }
    return v + quad::integrate(g, from, to).value;
  };

  double near_eps = std::min(eps, upper);
  auto [inner_inv, div_inv] = dyadic_integral(f_over_x, near_eps, opts);
  out.finite = !div_inv;
  out.inverse_moment = div_inv ? kInf : inner_inv + outer(f_over_x, near_eps, upper);

  auto [inner_local, div_local] = dyadic_integral(local_integrand, near_eps, opts);
  out.local_value = div_local ? kInf : inner_local;
  return out;
}

namespace numeric {

namespace {

double integrate_split(const GapDistribution& dist,
                       const std::function<double(double)>& g, double from,
                       double to, double* err = nullptr) {
  // break at the support start and at tail quantiles so each piece is smooth
  // and of moderate scale
  std::vector<double> cuts{from};
  double lo = dist.support_lower();
  if (lo > from && lo < to) cuts.push_back(lo);
  if (!dist.is_discrete())
    for (double p : {0.5, 0.9, 0.99, 1e-3, 1e-5, 1e-7, 1e-9, 1e-11, 1e-13}) {
      double c = dist.quantile(p < 0.5 ? 1.0 - p : p);
      if (c > cuts.back() && c < to) cuts.push_back(c);
    }
  cuts.push_back(to);
  double v = 0.0, e = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    auto r = quad::integrate(g, cuts[i - 1], cuts[i]);
    v += r.value;
    e += r.error;
  }
  if (err) *err = e;
  return v;
}

}  // namespace

double mean_from_density(const GapDistribution& dist) {
  if (dist.is_discrete())
    return std::get<DiscreteDistribution>(dist.family()).mean();
  return integrate_split(
      dist, [&](double u) { return u * dist.density(u); }, 0.0,
      dist.truncation_point());
}

double mean_from_survival(const GapDistribution& dist) {
  return tail_integral(dist, 0.0);
}

double tail_integral(const GapDistribution& dist, double t) {
  double upper = dist.truncation_point();
  if (t >= upper) return 0.0;
  if (dist.is_discrete()) {
    // piecewise constant survival: exact on each inter-atom cell
    const auto& d = std::get<DiscreteDistribution>(dist.family());
    double total = 0.0, from = t;
    for (double a : d.atoms()) {
      if (a <= from) continue;
      total += (a - from) * d.survival(from);
      from = a;
    }
    return total;
  }
  return integrate_split(dist, [&](double u) { return dist.survival(u); }, t,
                         upper);
}

double mean(const GapDistribution& dist) {
  double err = 0.0;
  double by_survival =
      dist.is_discrete()
          ? tail_integral(dist, 0.0)
          : integrate_split(dist, [&](double u) { return dist.survival(u); },
                            0.0, dist.truncation_point(), &err);
  double by_density = mean_from_density(dist);
  if (!std::isfinite(by_survival) || err > 1e-6 ||
      std::abs(by_survival - by_density) > 1e-6)
    fail(ErrorCode::divergent, "mean: quadrature of the survival tail failed to converge");
  return by_survival;
}

}  // namespace numeric

}  // namespace gapest
