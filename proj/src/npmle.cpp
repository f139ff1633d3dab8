#include "gapest/npmle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>

#include "gapest/error.hpp"

namespace gapest {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool same_atom(double x, double a) {
  return std::abs(x - a) <= 1e-9 * std::max(1.0, std::abs(a));
}

// Index of the atom matching x, or atoms.size().
std::size_t find_atom(std::span<const double> atoms, double x) {
  auto it = std::lower_bound(atoms.begin(), atoms.end(),
                             x - 1e-9 * std::max(1.0, std::abs(x)));
  if (it != atoms.end() && same_atom(x, *it))
    return static_cast<std::size_t>(it - atoms.begin());
  return atoms.size();
}

void check_grid(std::span<const double> grid) {
  require(!grid.empty(), "npmle: empty grid");
  for (std::size_t j = 0; j < grid.size(); ++j)
    require(std::isfinite(grid[j]) && grid[j] > 0.0 &&
                (j == 0 || grid[j] > grid[j - 1]),
            "npmle: grid atoms must be positive and strictly increasing");
}

// Segment data reduced to sufficient counts against a fixed grid.
struct CompiledSegments {
  std::vector<double> atoms;
  std::vector<double> pc_count;    // per atom
  std::vector<double> cens_count;  // px/rc by first atom strictly above
  std::vector<double> excess;      // (a_j - w)^+
  double rx_count = 0.0;
  double total = 0.0;
  double window = 0.0;

  CompiledSegments(std::span<const Segment> segments, double w,
                   std::span<const double> grid)
      : atoms(grid.begin(), grid.end()),
        pc_count(grid.size(), 0.0),
        cens_count(grid.size(), 0.0),
        excess(grid.size(), 0.0),
        window(w) {
    for (std::size_t j = 0; j < atoms.size(); ++j)
      excess[j] = std::max(0.0, atoms[j] - w);
    for (const auto& s : segments) {
      switch (s.kind) {
        case SegmentKind::proper_complete: {
          auto j = find_atom(atoms, s.length);
          if (j == atoms.size())
            fail(ErrorCode::invalid_argument,
                 "npmle: grid does not contain the complete length " +
                     std::to_string(s.length));
          pc_count[j] += 1.0;
          break;
        }
        case SegmentKind::proper_censored:
        case SegmentKind::residual_complete: {
          auto k = static_cast<std::size_t>(
              std::upper_bound(atoms.begin(), atoms.end(), s.length) -
              atoms.begin());
          if (k == atoms.size())
            fail(ErrorCode::domain,
                 "npmle: no grid atom exceeds the censored length " +
                     std::to_string(s.length));
          cens_count[k] += 1.0;
          break;
        }
        case SegmentKind::residual_censored:
          rx_count += 1.0;
          break;
      }
      total += 1.0;
    }
    if (rx_count > 0.0 &&
        std::all_of(excess.begin(), excess.end(), [](double e) { return e == 0.0; }))
      fail(ErrorCode::domain, "npmle: no grid atom exceeds the window length");
  }

  double loglik(std::span<const double> p) const {
    const std::size_t J = atoms.size();
    double ll = 0.0, suffix = 0.0, mu = 0.0, rx_mass = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      mu += atoms[j] * p[j];
      rx_mass += p[j] * excess[j];
      if (pc_count[j] > 0.0) ll += pc_count[j] * std::log(p[j]);
    }
    for (std::size_t k = J; k-- > 0;) {
      suffix += p[k];
      if (cens_count[k] > 0.0) ll += cens_count[k] * std::log(suffix);
    }
    if (rx_count > 0.0) ll += rx_count * std::log(rx_mass);
    ll -= total * std::log(window + mu);
    return std::isnan(ll) ? kNegInf : ll;
  }
};

}  // namespace

DiscreteDistribution cox_vardi(std::span<const double> q_values) {
  if (q_values.empty()) fail(ErrorCode::no_data, "cox_vardi: no observations");
  std::map<double, double> weight;
  for (double q : q_values) {
    require(std::isfinite(q) && q > 0.0, "cox_vardi: gap lengths must be positive");
    weight[q] += 1.0 / q;
  }
  double total = 0.0;
  for (const auto& [q, w] : weight) total += w;
  std::vector<double> atoms, masses;
  for (const auto& [q, w] : weight) {
    atoms.push_back(q);
    masses.push_back(w / total);
  }
  // absorb rounding so the masses sum to 1
  double drift = 1.0 - std::accumulate(masses.begin(), masses.end(), 0.0);
  masses.back() += drift;
  return DiscreteDistribution(std::move(atoms), std::move(masses));
}

DiscreteDistribution cox_vardi_from_pairs(std::span<const EquilibriumPair> pairs) {
  std::vector<double> q;
  q.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.s_censored)
      fail(ErrorCode::invalid_argument,
           "cox_vardi_from_pairs: censored pair present; use winter_foldes for "
           "right-censored forward recurrence times");
    q.push_back(p.q());
  }
  return cox_vardi(q);
}

StepSurvival to_step_survival(const DiscreteDistribution& dist) {
  StepSurvival est;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    if (dist.masses()[j] <= 0.0) continue;
    est.jump_times.push_back(dist.atoms()[j]);
    est.survival.push_back(std::max(0.0, dist.survival(dist.atoms()[j])));
  }
  est.n_input = dist.size();
  return est;
}

double segment_loglik(const DiscreteDistribution& dist, double birth_rate,
                      std::span<const Segment> segments, double window_length,
                      bool include_poisson_factor, LikelihoodFrame frame) {
  require(window_length > 0.0, "segment_loglik: window length must be positive");
  require(!include_poisson_factor || birth_rate > 0.0,
          "segment_loglik: birth rate must be positive");
  const auto atoms = dist.atoms();
  const auto masses = dist.masses();
  const double w = window_length;
  const double mu = dist.mean();
  const double proper_norm = frame == LikelihoodFrame::laslett ? w + mu : 1.0;
  const double residual_norm = frame == LikelihoodFrame::laslett ? w + mu : mu;

  auto above = [&](double c) {
    double s = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j)
      if (atoms[j] > c) s += masses[j];
    return s;
  };

  double ll = 0.0;
  for (const auto& s : segments) {
    double term = 0.0;
    switch (s.kind) {
      case SegmentKind::proper_complete: {
        auto j = find_atom(atoms, s.length);
        term = j == atoms.size() ? 0.0 : masses[j] / proper_norm;
        break;
      }
      case SegmentKind::proper_censored:
        term = above(s.length) / proper_norm;
        break;
      case SegmentKind::residual_complete:
        term = above(s.length) / residual_norm;
        break;
      case SegmentKind::residual_censored: {
        double e = 0.0;
        for (std::size_t j = 0; j < atoms.size(); ++j)
          e += masses[j] * std::max(0.0, atoms[j] - w);
        term = e / residual_norm;
        break;
      }
    }
    if (!(term > 0.0)) return kNegInf;
    ll += std::log(term);
  }
  if (include_poisson_factor) {
    const double n = static_cast<double>(segments.size());
    const double lambda = birth_rate * (w + mu);
    ll += n * std::log(lambda) - lambda - std::lgamma(n + 1.0);
  }
  return ll;
}

std::vector<Segment> bin_segments(std::span<const Segment> segments, double bin_width) {
  require(std::isfinite(bin_width) && bin_width > 0.0,
          "bin_segments: bin width must be positive");
  std::vector<Segment> out(segments.begin(), segments.end());
  for (auto& s : out) {
    if (s.kind == SegmentKind::residual_censored) continue;
    double k = std::ceil(s.length / bin_width) - 1.0;
    s.length = (std::max(k, 0.0) + 0.5) * bin_width;
  }
  return out;
}

std::vector<double> default_grid(std::span<const Segment> segments,
                                 double window_length, double bin_width) {
  require(std::isfinite(bin_width) && bin_width > 0.0,
          "default_grid: bin width must be positive");
  double longest = 0.0;
  for (const auto& s : segments) longest = std::max(longest, s.length);
  const double top = longest + window_length;
  const auto bins = static_cast<std::size_t>(std::ceil(top / bin_width));
  std::vector<double> grid;
  grid.reserve(bins);
  for (std::size_t k = 0; k < bins; ++k)
    grid.push_back((static_cast<double>(k) + 0.5) * bin_width);
  return grid;
}

EmResult laslett_em(std::span<const Segment> segments, double window_length,
                    std::span<const double> grid, const EmOptions& opts) {
  require(window_length > 0.0, "laslett_em: window length must be positive");
  require(opts.max_iter >= 1, "laslett_em: max_iter must be at least 1");
  require(opts.tol > 0.0, "laslett_em: tol must be positive");
  if (segments.empty()) fail(ErrorCode::no_data, "laslett_em: no segments");
  check_grid(grid);

  const CompiledSegments data(segments, window_length, grid);
  const std::size_t J = grid.size();
  const double w = window_length;
  std::vector<double> p(J, 1.0 / static_cast<double>(J));
  std::vector<double> expected(J), suffix(J), previous(J);

  EmResult result{DiscreteDistribution({grid.front()}, {1.0}), 0.0, {}, 0, false};
  double ll = data.loglik(p);
  result.loglik_trace.push_back(ll);

  for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
    // E-step: expected lifetime counts per atom
    double acc = 0.0;
    for (std::size_t k = J; k-- > 0;) suffix[k] = (acc += p[k]);
    double rx_mass = 0.0;
    for (std::size_t j = 0; j < J; ++j) rx_mass += p[j] * data.excess[j];
    double running = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      if (data.cens_count[j] > 0.0) {
        if (!(suffix[j] > 0.0))
          fail(ErrorCode::domain, "laslett_em: observation with zero posterior weight");
        running += data.cens_count[j] / suffix[j];
      }
      expected[j] = data.pc_count[j] + p[j] * running;
      if (data.rx_count > 0.0) expected[j] += data.rx_count * p[j] * data.excess[j] / rx_mass;
    }
    if (data.rx_count > 0.0 && !(rx_mass > 0.0))
      fail(ErrorCode::domain, "laslett_em: observation with zero posterior weight");

    // M-step in the window-biased parameterization, then back to p
    double norm = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      previous[j] = p[j];
      p[j] = expected[j] / data.total / (w + grid[j]);
      norm += p[j];
    }
    double step = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      p[j] /= norm;
      step = std::max(step, std::abs(p[j] - previous[j]));
    }

    double next = data.loglik(p);
    result.loglik_trace.push_back(next);
    result.iterations = iter + 1;
    double gain = next - ll;
    ll = next;
    // a flat likelihood can stall while masses still drift
    if (gain < opts.tol && step < opts.tol) {
      result.converged = true;
      break;
    }
  }

  double drift = 1.0 - std::accumulate(p.begin(), p.end(), 0.0);
  *std::max_element(p.begin(), p.end()) += drift;
  result.distribution = DiscreteDistribution(std::vector<double>(grid.begin(), grid.end()), p);
  result.birth_rate = data.total / (w + result.distribution.mean());
  return result;
}

namespace {

double oracle_objective(std::span<const Segment> segments, double w,
                        std::span<const double> grid, const std::vector<double>& p) {
  std::vector<double> masses = p;
  double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  for (auto& m : masses) m /= total;
  DiscreteDistribution dist(std::vector<double>(grid.begin(), grid.end()), masses);
  return segment_loglik(dist, 1.0, segments, w, false, LikelihoodFrame::laslett);
}

}  // namespace

DiscreteDistribution npmle_oracle(std::span<const Segment> segments,
                                  double window_length,
                                  std::span<const double> grid) {
  check_grid(grid);
  require(grid.size() <= 6, "npmle_oracle: at most 6 grid atoms");
  require(window_length > 0.0, "npmle_oracle: window length must be positive");
  const std::size_t J = grid.size();

  // lattice resolution: 1e-3 if the scan stays below ~2e6 points
  auto lattice_size = [J](std::size_t m) {
    double c = 1.0;
    for (std::size_t i = 1; i < J; ++i)
      c *= static_cast<double>(m + i) / static_cast<double>(i);
    return c;
  };
  std::size_t m = 1000;
  while (m > 4 && lattice_size(m) > 2e6) m = m * 9 / 10;

  std::vector<std::size_t> counts(J, 0);
  std::vector<double> p(J), best_p;
  double best = -std::numeric_limits<double>::infinity();
  // enumerate compositions of m into J parts in lexicographic order; the
  // first maximizer wins ties
  std::function<void(std::size_t, std::size_t)> scan = [&](std::size_t i, std::size_t left) {
    if (i + 1 == J) {
      counts[i] = left;
      for (std::size_t j = 0; j < J; ++j)
        p[j] = static_cast<double>(counts[j]) / static_cast<double>(m);
      double v = oracle_objective(segments, window_length, grid, p);
      if (v > best) {
        best = v;
        best_p = p;
      }
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      counts[i] = c;
      scan(i + 1, left - c);
    }
  };
  scan(0, m);
  if (best_p.empty() || !std::isfinite(best))
    fail(ErrorCode::domain, "npmle_oracle: likelihood is zero on the whole simplex");

  p = best_p;
  for (double step = 1.0 / static_cast<double>(m); step >= 1e-7;) {
    bool improved = false;
    for (std::size_t from = 0; from < J; ++from) {
      for (std::size_t to = 0; to < J; ++to) {
        if (from == to || p[from] <= 0.0) continue;
        auto trial = p;
        double move = std::min(step, trial[from]);
        trial[from] -= move;
        trial[to] += move;
        double v = oracle_objective(segments, window_length, grid, trial);
        if (v > best) {
          best = v;
          p = std::move(trial);
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= total;
  return DiscreteDistribution(std::vector<double>(grid.begin(), grid.end()), p);
}

double gof_discrepancy(const CdfEstimate& a, const CdfEstimate& b) {
  auto points = [](const CdfEstimate& e) {
    if (auto* s = std::get_if<StepSurvival>(&e)) return s->jump_times;
    auto atoms = std::get<DiscreteDistribution>(e).atoms();
    return std::vector<double>(atoms.begin(), atoms.end());
  };
  auto cdf = [](const CdfEstimate& e, double t) {
    if (auto* s = std::get_if<StepSurvival>(&e)) return 1.0 - s->value(t);
    return std::get<DiscreteDistribution>(e).cdf(t);
  };
  auto pa = points(a), pb = points(b);
  if (pa.empty() || pb.empty())
    fail(ErrorCode::no_data, "gof_discrepancy: an estimate has no support points");
  std::vector<double> all;
  all.reserve(pa.size() + pb.size());
  std::merge(pa.begin(), pa.end(), pb.begin(), pb.end(), std::back_inserter(all));
  double sup = 0.0;
  for (double t : all) sup = std::max(sup, std::abs(cdf(a, t) - cdf(b, t)));
  return sup;
}

}  // namespace gapest
