// gapest: simulate renewal data, estimate gap distributions, run the Monte
// Carlo harness. Talks to the library only through the C API.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gapest/gapest.h"

namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kDefaultSeed = 20100201;

struct RuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(gapest_status s) {
  if (s != GAPEST_OK) throw RuntimeError(gapest_last_error());
}

struct DistFree {
  void operator()(gapest_distribution* d) const { gapest_distribution_free(d); }
};
struct DataFree {
  void operator()(gapest_dataset* d) const { gapest_dataset_free(d); }
};
struct EstimateFree {
  void operator()(gapest_estimate* e) const { gapest_estimate_free(e); }
};
using DistPtr = std::unique_ptr<gapest_distribution, DistFree>;
using DataPtr = std::unique_ptr<gapest_dataset, DataFree>;
using EstimatePtr = std::unique_ptr<gapest_estimate, EstimateFree>;

DistPtr parse_dist(const std::string& spec) {
  gapest_distribution* d = nullptr;
  check(gapest_distribution_parse(spec.c_str(), &d));
  return DistPtr(d);
}

std::string take(char* s) {
  std::string out(s);
  gapest_string_free(s);
  return out;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write '" + path + "'");
  out << text;
  if (!out) throw RuntimeError("write failed for '" + path + "'");
}

// Configuration of a simulate run. The JSON sidecar written next to the data
// file is this struct's textual form and can be fed back through --config.
struct SimulateConfig {
  std::string scheme = "equilibrium";
  std::string distribution;
  std::size_t n = 1000;
  std::uint64_t seed = kDefaultSeed;
  double window_length = 1.0;
  double birth_rate = 1.0;
  std::string censoring;  // empty: no censoring

  json to_json() const {
    json j;
    j["subcommand"] = "simulate";
    j["scheme"] = scheme;
    j["distribution"] = distribution;
    j["n"] = n;
    j["seed"] = seed;
    j["window_length"] = window_length;
    j["birth_rate"] = birth_rate;
    j["censoring"] = censoring.empty() ? json(nullptr) : json(censoring);
    return j;
  }

  static SimulateConfig from_json(const json& j) {
    static const std::set<std::string> known{"subcommand", "scheme",      "distribution",
                                             "n",          "seed",        "window_length",
                                             "birth_rate", "censoring"};
    if (!j.is_object()) throw RuntimeError("config must be a JSON object");
    for (const auto& [key, value] : j.items())
      if (!known.count(key)) throw RuntimeError("unknown config key '" + key + "'");
    if (j.contains("subcommand") && j["subcommand"] != "simulate")
      throw RuntimeError("config is not a simulate config");
    SimulateConfig c;
    c.scheme = j.value("scheme", c.scheme);
    c.distribution = j.value("distribution", c.distribution);
    c.n = j.value("n", c.n);
    c.seed = j.value("seed", c.seed);
    c.window_length = j.value("window_length", c.window_length);
    c.birth_rate = j.value("birth_rate", c.birth_rate);
    if (j.contains("censoring") && !j["censoring"].is_null())
      c.censoring = j["censoring"].get<std::string>();
    return c;
  }
};

void run_simulate(const SimulateConfig& c, const std::string& out) {
  auto dist = parse_dist(c.distribution);
  gapest_dataset* raw = nullptr;
  if (c.scheme == "equilibrium") {
    check(gapest_sample_equilibrium(dist.get(), c.n, c.seed, &raw));
  } else if (c.scheme == "window") {
    check(gapest_sample_windows(dist.get(), c.window_length, c.n, c.seed, &raw));
  } else if (c.scheme == "segments") {
    check(gapest_sample_segments(c.birth_rate, dist.get(), c.window_length, c.n, c.seed, &raw));
  } else {
    throw RuntimeError("unknown scheme '" + c.scheme + "'");
  }
  DataPtr data(raw);
  if (!c.censoring.empty()) {
    if (c.scheme != "equilibrium") throw RuntimeError("--censor applies to the equilibrium scheme only");
    auto cens = parse_dist(c.censoring);
    // A separate stream so censoring does not disturb the (R, S) draws.
    check(gapest_dataset_censor(data.get(), cens.get(), c.seed ^ 0x9e3779b97f4a7c15ULL));
  }
  check(gapest_dataset_write_csv(data.get(), out.c_str()));
  emit(c.to_json().dump(2) + "\n", out + ".json");
}

gapest_estimator parse_estimator(const std::string& tag) {
  if (tag == "wf" || tag == "winter_foldes") return GAPEST_WINTER_FOLDES;
  if (tag == "pl" || tag == "window_pl") return GAPEST_WINDOW_PL;
  if (tag == "pc" || tag == "palmer_cox") return GAPEST_PALMER_COX;
  if (tag == "cv" || tag == "cox_vardi") return GAPEST_COX_VARDI;
  if (tag == "em" || tag == "laslett_em") return GAPEST_LASLETT_EM;
  throw RuntimeError("unknown estimator '" + tag + "'");
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw RuntimeError("bad number '" + item + "' in '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw RuntimeError("empty number list");
  return out;
}

struct EstimateArgs {
  std::string estimator;
  std::string in;
  std::string out;
  std::string format;
  std::string grid;
  double window_length = 0.0;
  std::size_t bootstrap = 0;
  double level = 0.95;
  bool greenwood = false;
  std::uint64_t seed = kDefaultSeed;
  std::size_t threads = 1;
  std::size_t max_iter = 0;
  double tol = 0.0;
};

void run_estimate(const EstimateArgs& a) {
  const auto est = parse_estimator(a.estimator);
  gapest_dataset* raw = nullptr;
  check(gapest_dataset_read_csv(a.in.c_str(), &raw));
  DataPtr data(raw);

  gapest_estimate_options o;
  gapest_estimate_options_init(&o);
  o.window_length = a.window_length;
  // simulate leaves the window length and window count in its sidecar
  std::ifstream side(a.in + ".json");
  if (side) {
    auto j = json::parse(side, nullptr, false);
    if (j.is_object() && j.value("scheme", "") != "equilibrium") {
      if (!(o.window_length > 0.0) && j.contains("window_length") && j["window_length"].is_number())
        o.window_length = j["window_length"].get<double>();
      if (j.value("scheme", "") == "segments" && j.contains("n") && j["n"].is_number_unsigned())
        o.windows = j["n"].get<std::size_t>();
    }
  }
  std::vector<double> atoms;
  if (!a.grid.empty()) {
    if (a.grid.rfind("width=", 0) == 0) {
      o.bin_width = parse_number_list(a.grid.substr(6)).at(0);
    } else if (a.grid.rfind("atoms=", 0) == 0) {
      atoms = parse_number_list(a.grid.substr(6));
      o.grid = atoms.data();
      o.grid_size = atoms.size();
    } else {
      throw RuntimeError("bad grid spec '" + a.grid + "' (expected width=<h> or atoms=<a1,...>)");
    }
  } else if (est == GAPEST_LASLETT_EM) {
    o.bin_width = 0.1;
  }

  gapest_estimate* raw_est = nullptr;
  check(gapest_estimate_run(data.get(), est, &o, &raw_est));
  EstimatePtr result(raw_est);

  std::string format = a.format;
  if (format.empty()) format = est == GAPEST_LASLETT_EM ? "json" : "csv";
  char* text = nullptr;
  check(gapest_estimate_render(result.get(),
                               format == "json" ? GAPEST_FORMAT_JSON : GAPEST_FORMAT_CSV, &text));
  emit(take(text), a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gap-time estimation for stationary renewal processes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gapest_version()));

  // simulate
  SimulateConfig sim;
  std::string sim_out, sim_config;
  auto* simulate = app.add_subcommand("simulate", "draw data under one sampling scheme");
  simulate->add_option("--config", sim_config, "JSON sidecar from an earlier run; flags override it");
  simulate->add_option("--scheme", sim.scheme, "equilibrium | window | segments")
      ->check(CLI::IsMember({"equilibrium", "window", "segments"}));
  simulate->add_option("--dist", sim.distribution, "gap distribution spec");
  simulate->add_option("--n", sim.n, "pairs, windows, or observation windows");
  simulate->add_option("--seed", sim.seed, "random seed (default 20100201)");
  simulate->add_option("--window", sim.window_length, "window length")->check(CLI::PositiveNumber);
  simulate->add_option("--rate", sim.birth_rate, "birth rate for the segments scheme")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--censor", sim.censoring, "censoring distribution spec (equilibrium only)");
  simulate->add_option("--out", sim_out, "output CSV path")->required();

  // estimate
  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "estimate the gap distribution from a data file");
  estimate->add_option("--estimator", est.estimator, "wf | cv | pl | pc | em")
      ->required()
      ->check(CLI::IsMember({"wf", "cv", "pl", "pc", "em", "winter_foldes", "cox_vardi",
                             "window_pl", "palmer_cox", "laslett_em"}));
  estimate->add_option("--in", est.in, "input CSV")->required();
  estimate->add_option("--out", est.out, "output path (default stdout)");
  estimate->add_option("--format", est.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  estimate->add_option("--grid", est.grid, "width=<h> or atoms=<a1,a2,...> (em)");
  estimate->add_option("--window", est.window_length, "window length (pc, em)")
      ->check(CLI::PositiveNumber);
  estimate->add_option("--bootstrap", est.bootstrap, "bootstrap replicates for pointwise bands");
  estimate->add_option("--level", est.level, "band level")->check(CLI::Range(0.0, 1.0));
  estimate->add_flag("--greenwood", est.greenwood, "attach Greenwood variances");
  estimate->add_option("--seed", est.seed, "bootstrap seed (default 20100201)");
  estimate->add_option("--threads", est.threads, "worker threads")->check(CLI::PositiveNumber);
  estimate->add_option("--max-iter", est.max_iter, "EM iteration cap");
  estimate->add_option("--tol", est.tol, "EM log-likelihood tolerance");

  // bench
  auto* bench = app.add_subcommand("bench", "Monte Carlo comparisons");
  bench->require_subcommand(1);

  std::string cmp_scheme = "equilibrium", cmp_dist, cmp_out, cmp_format = "json", cmp_estimators,
              cmp_grid;
  std::size_t cmp_n = 2000, cmp_reps = 200, cmp_threads = 1;
  std::uint64_t cmp_seed = kDefaultSeed;
  double cmp_window = 1.0, cmp_rate = 1.0, cmp_bin = 0.1, cmp_check = 1.0, cmp_tol = 0.05;
  auto* compare = bench->add_subcommand("compare", "bias, variance and MSE of competing estimators");
  compare->add_option("--scheme", cmp_scheme, "equilibrium | window | segments")
      ->check(CLI::IsMember({"equilibrium", "window", "segments"}));
  compare->add_option("--dist", cmp_dist, "gap distribution spec")->required();
  compare->add_option("--n", cmp_n, "sample size per replicate");
  compare->add_option("--reps", cmp_reps, "Monte Carlo replicates");
  compare->add_option("--seed", cmp_seed, "random seed (default 20100201)");
  compare->add_option("--estimators", cmp_estimators, "comma-separated tags (default: all applicable)");
  compare->add_option("--window", cmp_window, "window length")->check(CLI::PositiveNumber);
  compare->add_option("--rate", cmp_rate, "birth rate")->check(CLI::PositiveNumber);
  compare->add_option("--bin-width", cmp_bin, "EM bin width")->check(CLI::PositiveNumber);
  compare->add_option("--grid", cmp_grid, "comma-separated evaluation times");
  compare->add_option("--check-time", cmp_check, "time for the variance comparison");
  compare->add_option("--bias-tolerance", cmp_tol, "largest acceptable |mean bias|");
  compare->add_option("--threads", cmp_threads, "worker threads")->check(CLI::PositiveNumber);
  compare->add_option("--format", cmp_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  compare->add_option("--out", cmp_out, "output path (default stdout)");

  std::string tails_div = "exp:1", tails_fin = "weibull:2:1", tails_out, tails_format = "csv",
              tails_sizes = "500,1000,2000,4000";
  std::size_t tails_reps = 50, tails_threads = 1;
  std::uint64_t tails_seed = kDefaultSeed;
  double tails_eps = 0.1;
  auto* tails = bench->add_subcommand("tails", "sqrt(n) sup-error near zero as n grows");
  tails->add_option("--divergent", tails_div, "distribution with infinite E(1/X)");
  tails->add_option("--finite", tails_fin, "distribution with finite E(1/X)");
  tails->add_option("--sizes", tails_sizes, "comma-separated sample sizes");
  tails->add_option("--reps", tails_reps, "replicates per size");
  tails->add_option("--eps", tails_eps, "sup is taken over t <= eps")->check(CLI::PositiveNumber);
  tails->add_option("--seed", tails_seed, "random seed (default 20100201)");
  tails->add_option("--threads", tails_threads, "worker threads")->check(CLI::PositiveNumber);
  tails->add_option("--format", tails_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  tails->add_option("--out", tails_out, "output path (default stdout)");

  // diagnose
  std::string diag_dist;
  double diag_eps = 0.1;
  auto* diagnose = app.add_subcommand("diagnose", "integrability of 1/X near zero");
  diagnose->add_option("--dist", diag_dist, "gap distribution spec")->required();
  diagnose->add_option("--eps", diag_eps, "upper end of the local integral")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*simulate) {
      SimulateConfig c = sim;
      if (!sim_config.empty()) {
        std::ifstream in(sim_config);
        if (!in) throw RuntimeError("cannot open '" + sim_config + "'");
        c = SimulateConfig::from_json(json::parse(in));
        for (const auto* opt : simulate->get_options()) {
          if (opt->count() == 0) continue;
          const auto& name = opt->get_name();
          if (name == "--scheme") c.scheme = sim.scheme;
          if (name == "--dist") c.distribution = sim.distribution;
          if (name == "--n") c.n = sim.n;
          if (name == "--seed") c.seed = sim.seed;
          if (name == "--window") c.window_length = sim.window_length;
          if (name == "--rate") c.birth_rate = sim.birth_rate;
          if (name == "--censor") c.censoring = sim.censoring;
        }
      }
      if (c.distribution.empty()) {
        std::cerr << "simulate: --dist is required\n" << simulate->help();
        return 2;
      }
      run_simulate(c, sim_out);
    } else if (*estimate) {
      run_estimate(est);
    } else if (*compare) {
      json cfg;
      cfg["distribution"] = cmp_dist;
      cfg["scheme"] = cmp_scheme;
      cfg["n"] = cmp_n;
      cfg["replicates"] = cmp_reps;
      cfg["seed"] = cmp_seed;
      if (!cmp_estimators.empty()) {
        json tags = json::array();
        std::stringstream ss(cmp_estimators);
        std::string tag;
        while (std::getline(ss, tag, ',')) tags.push_back(tag);
        cfg["estimators"] = tags;
      }
      cfg["window_length"] = cmp_window;
      cfg["birth_rate"] = cmp_rate;
      cfg["bin_width"] = cmp_bin;
      cfg["check_time"] = cmp_check;
      cfg["bias_tolerance"] = cmp_tol;
      cfg["threads"] = cmp_threads;
      if (!cmp_grid.empty()) cfg["grid"] = parse_number_list(cmp_grid);
      char* text = nullptr;
      int passed = 0;
      check(gapest_bench_compare(cfg.dump().c_str(),
                                 cmp_format == "json" ? GAPEST_FORMAT_JSON : GAPEST_FORMAT_CSV,
                                 &text, &passed));
      emit(take(text), cmp_out);
      if (!passed) {
        std::cerr << "bench compare: at least one verdict failed\n";
        return 1;
      }
    } else if (*tails) {
      json cfg;
      cfg["divergent"] = tails_div;
      cfg["finite"] = tails_fin;
      json sizes = json::array();
      for (double s : parse_number_list(tails_sizes)) {
        if (!(s >= 1.0) || s != static_cast<double>(static_cast<std::size_t>(s)))
          throw RuntimeError("sample sizes must be positive integers");
        sizes.push_back(static_cast<std::size_t>(s));
      }
      cfg["sizes"] = sizes;
      cfg["replicates"] = tails_reps;
      cfg["eps"] = tails_eps;
      cfg["seed"] = tails_seed;
      cfg["threads"] = tails_threads;
      char* text = nullptr;
      check(gapest_bench_tails(cfg.dump().c_str(),
                               tails_format == "json" ? GAPEST_FORMAT_JSON : GAPEST_FORMAT_CSV, &text));
      emit(take(text), tails_out);
    } else if (*diagnose) {
      auto dist = parse_dist(diag_dist);
      gapest_integrability r;
      check(gapest_distribution_integrability(dist.get(), diag_eps, &r));
      double mu = 0.0;
      check(gapest_distribution_mean(dist.get(), &mu));
      char* spec = nullptr;
      check(gapest_distribution_spec(dist.get(), &spec));
      json j;
      j["distribution"] = take(spec);
      j["mean"] = mu;
      j["eps"] = diag_eps;
      j["inverse_moment_finite"] = r.finite != 0;
      j["inverse_moment"] = r.finite ? json(r.inverse_moment) : json(nullptr);
      j["local_value"] = r.finite ? json(r.local_value) : json(nullptr);
      std::cout << j.dump(2) << "\n";
    }
  } catch (const RuntimeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
