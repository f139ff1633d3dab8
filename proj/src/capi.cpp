#include "gapest/gapest.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gapest/bench.hpp"
#include "gapest/bootstrap.hpp"
#include "gapest/error.hpp"
#include "gapest/gapdist.hpp"
#include "gapest/io.hpp"
#include "gapest/npmle.hpp"

struct gapest_distribution {
  gapest::GapDistribution dist;
};

struct gapest_dataset {
  gapest::ObservationData data;
};

struct gapest_estimate {
  std::optional<gapest::StepSurvival> step;
  std::optional<gapest::DiscreteDistribution> discrete;  // cox_vardi, laslett_em
  std::optional<gapest::BootstrapBand> band;
  std::optional<gapest::EmResult> em;
};

namespace {

thread_local std::string last_error;

gapest_status status_of(gapest::ErrorCode code) {
  return static_cast<gapest_status>(static_cast<int>(code));
}

template <class F>
gapest_status guarded(F&& body) {
  try {
    body();
    return GAPEST_OK;
  } catch (const gapest::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return GAPEST_ERR_PARSE;
  } catch (const std::domain_error& e) {
    last_error = e.what();
    return GAPEST_ERR_DOMAIN;
  } catch (const std::exception& e) {
    last_error = e.what();
    return GAPEST_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return GAPEST_ERR_INTERNAL;
  }
}

template <class T>
T& deref(T* p, const char* what) {
  if (!p) gapest::fail(gapest::ErrorCode::invalid_argument, std::string("null ") + what);
  return *p;
}

const char* text(const char* p, const char* what) {
  if (!p) gapest::fail(gapest::ErrorCode::invalid_argument, std::string("null ") + what);
  return p;
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

gapest::Estimator to_cpp(gapest_estimator e) {
  switch (e) {
    case GAPEST_WINTER_FOLDES: return gapest::Estimator::winter_foldes;
    case GAPEST_WINDOW_PL: return gapest::Estimator::window_pl;
    case GAPEST_PALMER_COX: return gapest::Estimator::palmer_cox;
    case GAPEST_COX_VARDI: return gapest::Estimator::cox_vardi;
    case GAPEST_LASLETT_EM: return gapest::Estimator::laslett_em;
  }
  gapest::fail(gapest::ErrorCode::invalid_argument, "unknown estimator");
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known) {
  if (!j.is_object()) gapest::fail(gapest::ErrorCode::parse, "config must be a JSON object");
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      gapest::fail(gapest::ErrorCode::parse, "unknown config key '" + key + "'");
}

}  // namespace

extern "C" {

const char* gapest_last_error(void) { return last_error.c_str(); }

const char* gapest_version(void) { return "1.0.0"; }

void gapest_string_free(char* s) { delete[] s; }

gapest_status gapest_distribution_parse(const char* spec, gapest_distribution** out) {
  return guarded([&] {
    deref(out, "output pointer") = new gapest_distribution{
        gapest::GapDistribution::parse(text(spec, "spec"))};
  });
}

void gapest_distribution_free(gapest_distribution* dist) { delete dist; }

gapest_status gapest_distribution_spec(const gapest_distribution* dist, char** out) {
  return guarded([&] { deref(out, "output pointer") = copy_string(deref(dist, "distribution").dist.spec()); });
}

gapest_status gapest_distribution_evaluate(const gapest_distribution* dist, double t,
                                           gapest_evaluation* out) {
  return guarded([&] {
    auto e = gapest::evaluate(deref(dist, "distribution").dist, t);
    auto& o = deref(out, "output pointer");
    o.cdf = e.cdf;
    o.density = e.density;
    o.survival = e.survival;
    o.beta_defined = e.beta.has_value();
    o.beta = e.beta.value_or(std::numeric_limits<double>::quiet_NaN());
    o.cum_hazard = e.cum_hazard;
  });
}

gapest_status gapest_distribution_mean(const gapest_distribution* dist, double* out) {
  return guarded([&] { deref(out, "output pointer") = deref(dist, "distribution").dist.mean(); });
}

gapest_status gapest_distribution_alpha(const gapest_distribution* dist, double t, double* out) {
  return guarded([&] {
    auto a = gapest::alpha(deref(dist, "distribution").dist, t);
    if (!a) gapest::fail(gapest::ErrorCode::domain, "alpha is undefined at this t");
    deref(out, "output pointer") = *a;
  });
}

gapest_status gapest_distribution_occupation(const gapest_distribution* dist, double t,
                                             gapest_occupation* out) {
  return guarded([&] {
    auto o = gapest::occupation(deref(dist, "distribution").dist, t);
    deref(out, "output pointer") = {o.p0, o.p1, o.p2};
  });
}

gapest_status gapest_distribution_backward_alpha(const gapest_distribution* dist, double t,
                                                 double* out) {
  return guarded([&] {
    auto a = gapest::backward_alpha(deref(dist, "distribution").dist, t);
    if (!a) gapest::fail(gapest::ErrorCode::domain, "backward alpha is undefined at this t");
    deref(out, "output pointer") = *a;
  });
}

gapest_status gapest_distribution_integrability(const gapest_distribution* dist, double eps,
                                                gapest_integrability* out) {
  return guarded([&] {
    auto r = gapest::integrability_diagnostic(deref(dist, "distribution").dist, eps);
    deref(out, "output pointer") = {r.finite ? 1 : 0, r.inverse_moment, r.local_value};
  });
}

gapest_status gapest_sample_equilibrium(const gapest_distribution* dist, size_t n, uint64_t seed,
                                        gapest_dataset** out) {
  return guarded([&] {
    auto pairs = gapest::sample_equilibrium(deref(dist, "distribution").dist, n, seed);
    deref(out, "output pointer") = new gapest_dataset{std::move(pairs)};
  });
}

gapest_status gapest_dataset_censor(gapest_dataset* data, const gapest_distribution* censoring,
                                    uint64_t seed) {
  return guarded([&] {
    auto* pairs = std::get_if<std::vector<gapest::EquilibriumPair>>(&deref(data, "dataset").data);
    if (!pairs)
      gapest::fail(gapest::ErrorCode::invalid_argument, "censoring applies to equilibrium pairs only");
    *pairs = gapest::apply_right_censoring(std::move(*pairs), deref(censoring, "distribution").dist,
                                           seed);
  });
}

gapest_status gapest_sample_windows(const gapest_distribution* dist, double window_length,
                                    size_t replicates, uint64_t seed, gapest_dataset** out) {
  return guarded([&] {
    auto obs = gapest::sample_windows(deref(dist, "distribution").dist, window_length,
                                      replicates, seed);
    deref(out, "output pointer") = new gapest_dataset{std::move(obs)};
  });
}

gapest_status gapest_sample_segments(double birth_rate, const gapest_distribution* dist,
                                     double window_length, size_t replicates, uint64_t seed,
                                     gapest_dataset** out) {
  return guarded([&] {
    auto segs = gapest::sample_segment_windows(birth_rate, deref(dist, "distribution").dist,
                                               window_length, replicates, seed);
    deref(out, "output pointer") = new gapest_dataset{std::move(segs)};
  });
}

gapest_status gapest_dataset_read_csv(const char* path, gapest_dataset** out) {
  return guarded([&] {
    std::ifstream in(text(path, "path"));
    if (!in) gapest::fail(gapest::ErrorCode::io, std::string("cannot open '") + path + "'");
    auto data = gapest::io::read_observations_csv(in);
    deref(out, "output pointer") = new gapest_dataset{std::move(data)};
  });
}

gapest_status gapest_dataset_write_csv(const gapest_dataset* data, const char* path) {
  return guarded([&] {
    std::ofstream out(text(path, "path"));
    if (!out) gapest::fail(gapest::ErrorCode::io, std::string("cannot write '") + path + "'");
    gapest::io::write_observations_csv(out, deref(data, "dataset").data);
    if (!out) gapest::fail(gapest::ErrorCode::io, std::string("write failed for '") + path + "'");
  });
}

void gapest_dataset_free(gapest_dataset* data) { delete data; }

size_t gapest_dataset_size(const gapest_dataset* data) {
  if (!data) return 0;
  return std::visit([](const auto& v) { return v.size(); }, data->data);
}

gapest_scheme gapest_dataset_scheme(const gapest_dataset* data) {
  if (!data) return GAPEST_SCHEME_EQUILIBRIUM;
  return static_cast<gapest_scheme>(data->data.index());
}

gapest_status gapest_dataset_window_hint(const gapest_dataset* data, double* out) {
  return guarded([&] {
    auto w = gapest::io::window_length_hint(deref(data, "dataset").data);
    if (!w) gapest::fail(gapest::ErrorCode::no_data, "the data does not record a window length");
    deref(out, "output pointer") = *w;
  });
}

void gapest_estimate_options_init(gapest_estimate_options* opts) {
  if (!opts) return;
  *opts = gapest_estimate_options{};
  opts->level = 0.95;
  opts->seed = 20100201;
  opts->threads = 1;
  opts->windows = 1;
}

gapest_status gapest_estimate_run(const gapest_dataset* data, gapest_estimator est,
                                  const gapest_estimate_options* opts, gapest_estimate** out) {
  return guarded([&] {
    const auto& obs = deref(data, "dataset").data;
    gapest_estimate_options o;
    gapest_estimate_options_init(&o);
    if (opts) o = *opts;
    const auto which = to_cpp(est);
    if (!gapest::applies_to(obs, which))
      gapest::fail(gapest::ErrorCode::invalid_argument,
                   "estimator '" + std::string(gapest::to_string(which)) +
                       "' does not apply to this data file's sampling frame");
    double w = o.window_length;
    if (!(w > 0.0)) w = gapest::io::window_length_hint(obs).value_or(0.0);

    auto result = std::make_unique<gapest_estimate>();
    if (which == gapest::Estimator::laslett_em) {
      if (!(w > 0.0))
        gapest::fail(gapest::ErrorCode::invalid_argument,
                     "laslett_em needs a window length (no rx segment records one)");
      if (o.bootstrap > 0)
        gapest::fail(gapest::ErrorCode::invalid_argument, "bootstrap bands are not available for laslett_em");
      auto segs = std::get<std::vector<gapest::Segment>>(obs);
      if (o.bin_width > 0.0) segs = gapest::bin_segments(segs, o.bin_width);
      std::vector<double> grid;
      if (o.grid && o.grid_size > 0)
        grid.assign(o.grid, o.grid + o.grid_size);
      else if (o.bin_width > 0.0)
        grid = gapest::default_grid(segs, w, o.bin_width);
      else
        gapest::fail(gapest::ErrorCode::invalid_argument, "laslett_em needs grid atoms or a bin width");
      gapest::EmOptions em_opts;
      if (o.max_iter > 0) em_opts.max_iter = o.max_iter;
      if (o.tol > 0.0) em_opts.tol = o.tol;
      result->em = gapest::laslett_em(segs, w, grid, em_opts);
      if (o.windows > 1) result->em->birth_rate /= static_cast<double>(o.windows);
      result->discrete = result->em->distribution;
      result->step = gapest::to_step_survival(*result->discrete);
    } else {
      if (which == gapest::Estimator::cox_vardi) {
        result->discrete =
            gapest::cox_vardi_from_pairs(std::get<std::vector<gapest::EquilibriumPair>>(obs));
        result->step = gapest::to_step_survival(*result->discrete);
      } else {
        result->step = gapest::run_survival_estimator(obs, which, w);
        if (o.greenwood) result->step = gapest::greenwood_variance(std::move(*result->step));
      }
      if (o.bootstrap > 0) {
        gapest::BootstrapOptions b;
        b.replicates = o.bootstrap;
        b.seed = o.seed;
        b.level = o.level > 0.0 ? o.level : 0.95;
        b.window_length = w;
        b.threads = o.threads > 0 ? o.threads : 1;
        result->band = gapest::bootstrap_band(obs, which, b);
      }
    }
    deref(out, "output pointer") = result.release();
  });
}

void gapest_estimate_free(gapest_estimate* est) { delete est; }

gapest_status gapest_estimate_render(const gapest_estimate* est, gapest_format fmt, char** out) {
  return guarded([&] {
    const auto& e = deref(est, "estimate");
    std::string rendered;
    if (e.em) {
      if (fmt != GAPEST_FORMAT_JSON)
        gapest::fail(gapest::ErrorCode::invalid_argument, "EM results are written as JSON");
      rendered = gapest::io::em_json(*e.em);
    } else {
      const auto* band = e.band ? &*e.band : nullptr;
      if (fmt == GAPEST_FORMAT_JSON) {
        rendered = gapest::io::step_json(*e.step, band);
      } else {
        std::ostringstream os;
        gapest::io::write_step_csv(os, *e.step, band);
        rendered = os.str();
      }
    }
    deref(out, "output pointer") = copy_string(rendered);
  });
}

gapest_status gapest_estimate_survival_at(const gapest_estimate* est, double t, double* out) {
  return guarded([&] {
    const auto& e = deref(est, "estimate");
    deref(out, "output pointer") = e.discrete ? e.discrete->survival(t) : e.step->value(t);
  });
}

gapest_status gapest_gof_discrepancy(const gapest_estimate* a, const gapest_estimate* b,
                                     double* out) {
  return guarded([&] {
    auto as = [](const gapest_estimate& e) -> gapest::CdfEstimate {
      if (e.discrete) return *e.discrete;
      return *e.step;
    };
    deref(out, "output pointer") =
        gapest::gof_discrepancy(as(deref(a, "estimate")), as(deref(b, "estimate")));
  });
}

gapest_status gapest_bench_compare(const char* config_json, gapest_format fmt, char** report,
                                   int* passed) {
  return guarded([&] {
    auto j = nlohmann::json::parse(text(config_json, "config"));
    reject_unknown_keys(j, {"distribution", "scheme", "n", "replicates", "seed", "estimators",
                            "window_length", "birth_rate", "bin_width", "check_time",
                            "bias_tolerance", "threads", "grid"});
    gapest::McConfig c;
    if (!j.contains("distribution"))
      gapest::fail(gapest::ErrorCode::invalid_argument, "config needs a distribution");
    c.distribution = j.at("distribution").get<std::string>();
    if (j.contains("scheme")) c.scheme = gapest::parse_scheme(j["scheme"].get<std::string>());
    c.n = j.value("n", c.n);
    c.replicates = j.value("replicates", c.replicates);
    c.seed = j.value("seed", c.seed);
    if (j.contains("estimators"))
      for (const auto& e : j["estimators"]) c.estimators.push_back(gapest::parse_estimator(e.get<std::string>()));
    c.window_length = j.value("window_length", c.window_length);
    c.birth_rate = j.value("birth_rate", c.birth_rate);
    c.bin_width = j.value("bin_width", c.bin_width);
    c.check_time = j.value("check_time", c.check_time);
    c.bias_tolerance = j.value("bias_tolerance", c.bias_tolerance);
    c.threads = j.value("threads", c.threads);
    if (j.contains("grid")) c.grid = j["grid"].get<std::vector<double>>();
    auto r = gapest::mc_compare(c);
    std::string rendered;
    if (fmt == GAPEST_FORMAT_JSON) {
      rendered = gapest::io::report_json(r);
    } else {
      std::ostringstream os;
      gapest::io::write_report_csv(os, r);
      rendered = os.str();
    }
    if (passed) *passed = r.all_passed() ? 1 : 0;
    deref(report, "output pointer") = copy_string(rendered);
  });
}

gapest_status gapest_bench_tails(const char* config_json, gapest_format fmt, char** report) {
  return guarded([&] {
    auto j = nlohmann::json::parse(text(config_json, "config"));
    reject_unknown_keys(j, {"divergent", "finite", "sizes", "replicates", "eps", "seed", "threads"});
    gapest::TailConfig c;
    c.divergent = j.value("divergent", c.divergent);
    c.finite = j.value("finite", c.finite);
    if (j.contains("sizes")) c.sizes = j["sizes"].get<std::vector<std::size_t>>();
    c.replicates = j.value("replicates", c.replicates);
    c.eps = j.value("eps", c.eps);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    auto r = gapest::tail_failure_demo(c);
    std::string rendered;
    if (fmt == GAPEST_FORMAT_JSON) {
      rendered = gapest::io::tail_json(r);
    } else {
      std::ostringstream os;
      gapest::io::write_tail_csv(os, r);
      rendered = os.str();
    }
    deref(report, "output pointer") = copy_string(rendered);
  });
}

}  // extern "C"
