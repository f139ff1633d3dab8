/*
 * gapest: gap-time distribution estimation for stationary renewal processes
 * and Poisson line-segment processes.
 *
 * C interface. Objects are opaque handles created by gapest_* functions and
 * released with the matching *_free function. Every fallible call returns a
 * gapest_status; on failure gapest_last_error() describes the problem (the
 * message is thread-local and valid until the next failing call on the same
 * thread). Strings returned through char** are owned by the caller and must be
 * released with gapest_string_free().
 */
#ifndef GAPEST_H
#define GAPEST_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GAPEST_API __declspec(dllexport)
#else
#define GAPEST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gapest_status {
  GAPEST_OK = 0,
  GAPEST_ERR_INVALID_ARGUMENT = 1,
  GAPEST_ERR_PARSE = 2,
  GAPEST_ERR_DOMAIN = 3,
  GAPEST_ERR_NO_DATA = 4,
  GAPEST_ERR_DIVERGENT = 5,
  GAPEST_ERR_IO = 6,
  GAPEST_ERR_INTERNAL = 99
} gapest_status;

typedef enum gapest_scheme {
  GAPEST_SCHEME_EQUILIBRIUM = 0,
  GAPEST_SCHEME_WINDOW = 1,
  GAPEST_SCHEME_SEGMENTS = 2
} gapest_scheme;

typedef enum gapest_estimator {
  GAPEST_WINTER_FOLDES = 0,
  GAPEST_WINDOW_PL = 1,
  GAPEST_PALMER_COX = 2,
  GAPEST_COX_VARDI = 3,
  GAPEST_LASLETT_EM = 4
} gapest_estimator;

typedef enum gapest_format { GAPEST_FORMAT_CSV = 0, GAPEST_FORMAT_JSON = 1 } gapest_format;

typedef struct gapest_distribution gapest_distribution;
typedef struct gapest_dataset gapest_dataset;
typedef struct gapest_estimate gapest_estimate;

GAPEST_API const char* gapest_last_error(void);
GAPEST_API const char* gapest_version(void);
GAPEST_API void gapest_string_free(char* s);

/* ---- gap distributions ------------------------------------------------- */

typedef struct gapest_evaluation {
  double cdf;
  double density;
  double survival;
  double beta; /* NaN where undefined */
  int beta_defined;
  double cum_hazard;
} gapest_evaluation;

typedef struct gapest_occupation {
  double p0, p1, p2;
} gapest_occupation;

typedef struct gapest_integrability {
  int finite;
  double inverse_moment; /* +inf when divergent */
  double local_value;    /* +inf when divergent */
} gapest_integrability;

/* Parses exp:<rate>, weibull:<shape>:<scale>, uniform:<a>:<b>,
 * atoms:<a1>=<p1>,... */
GAPEST_API gapest_status gapest_distribution_parse(const char* spec, gapest_distribution** out);
GAPEST_API void gapest_distribution_free(gapest_distribution* dist);
GAPEST_API gapest_status gapest_distribution_spec(const gapest_distribution* dist, char** out);
GAPEST_API gapest_status gapest_distribution_evaluate(const gapest_distribution* dist, double t,
                                                      gapest_evaluation* out);
GAPEST_API gapest_status gapest_distribution_mean(const gapest_distribution* dist, double* out);
/* GAPEST_ERR_DOMAIN when alpha / backward alpha is undefined at t. */
GAPEST_API gapest_status gapest_distribution_alpha(const gapest_distribution* dist, double t,
                                                   double* out);
GAPEST_API gapest_status gapest_distribution_occupation(const gapest_distribution* dist, double t,
                                                        gapest_occupation* out);
GAPEST_API gapest_status gapest_distribution_backward_alpha(const gapest_distribution* dist,
                                                            double t, double* out);
GAPEST_API gapest_status gapest_distribution_integrability(const gapest_distribution* dist,
                                                           double eps, gapest_integrability* out);

/* ---- observation data --------------------------------------------------- */

GAPEST_API gapest_status gapest_sample_equilibrium(const gapest_distribution* dist, size_t n,
                                                   uint64_t seed, gapest_dataset** out);
/* Right-censors the forward recurrence times of an uncensored equilibrium
 * dataset in place. */
GAPEST_API gapest_status gapest_dataset_censor(gapest_dataset* data,
                                               const gapest_distribution* censoring,
                                               uint64_t seed);
GAPEST_API gapest_status gapest_sample_windows(const gapest_distribution* dist,
                                               double window_length, size_t replicates,
                                               uint64_t seed, gapest_dataset** out);
GAPEST_API gapest_status gapest_sample_segments(double birth_rate,
                                                const gapest_distribution* dist,
                                                double window_length, size_t replicates,
                                                uint64_t seed, gapest_dataset** out);
/* Reads a CSV observation file; the scheme is taken from its header. */
GAPEST_API gapest_status gapest_dataset_read_csv(const char* path, gapest_dataset** out);
GAPEST_API gapest_status gapest_dataset_write_csv(const gapest_dataset* data, const char* path);
GAPEST_API void gapest_dataset_free(gapest_dataset* data);
GAPEST_API size_t gapest_dataset_size(const gapest_dataset* data);
GAPEST_API gapest_scheme gapest_dataset_scheme(const gapest_dataset* data);
/* Window length recorded in the data (empty-window value or rx length).
 * GAPEST_ERR_NO_DATA when the data carries none. */
GAPEST_API gapest_status gapest_dataset_window_hint(const gapest_dataset* data, double* out);

/* ---- estimation --------------------------------------------------------- */

typedef struct gapest_estimate_options {
  double window_length;   /* palmer_cox / laslett_em; <= 0 means use the data hint */
  double bin_width;       /* laslett_em; <= 0 means no binning */
  const double* grid;     /* laslett_em atoms; NULL means default_grid(bin_width) */
  size_t grid_size;
  size_t max_iter;        /* laslett_em; 0 means default */
  double tol;             /* laslett_em; <= 0 means default */
  int greenwood;          /* attach Greenwood variance to product-limit estimates */
  size_t bootstrap;       /* replicates for pointwise bands; 0 disables */
  double level;           /* band level; <= 0 means 0.95 */
  uint64_t seed;
  size_t threads;
  size_t windows;         /* laslett_em: windows pooled in the data; birth rate is per window */
} gapest_estimate_options;

GAPEST_API void gapest_estimate_options_init(gapest_estimate_options* opts);
GAPEST_API gapest_status gapest_estimate_run(const gapest_dataset* data, gapest_estimator est,
                                             const gapest_estimate_options* opts,
                                             gapest_estimate** out);
GAPEST_API void gapest_estimate_free(gapest_estimate* est);
/* CSV (StepSurvival table) or JSON (StepSurvival mirror, or EmResult for
 * laslett_em). EM results only support JSON. */
GAPEST_API gapest_status gapest_estimate_render(const gapest_estimate* est, gapest_format fmt,
                                                char** out);
/* Estimated survival 1 - F(t). */
GAPEST_API gapest_status gapest_estimate_survival_at(const gapest_estimate* est, double t,
                                                     double* out);
GAPEST_API gapest_status gapest_gof_discrepancy(const gapest_estimate* a, const gapest_estimate* b,
                                                double* out);

/* ---- Monte Carlo harness ------------------------------------------------ */

/* config_json fields mirror the CLI flags: distribution, scheme, n,
 * replicates, seed, estimators, window_length, birth_rate, bin_width,
 * check_time, bias_tolerance, threads. passed is set to 1 when every
 * verdict holds. */
GAPEST_API gapest_status gapest_bench_compare(const char* config_json, gapest_format fmt,
                                              char** report, int* passed);
/* config_json fields: divergent, finite, sizes, replicates, eps, seed,
 * threads. */
GAPEST_API gapest_status gapest_bench_tails(const char* config_json, gapest_format fmt,
                                            char** report);

#ifdef __cplusplus
}
#endif

#endif /* GAPEST_H */
