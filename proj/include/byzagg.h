#ifndef BYZAGG_H
#define BYZAGG_H

/* C interface to the Byzantine-robust aggregation library. All entry points
 * return an error code; on failure byzagg_last_error() describes the cause
 * for the calling thread. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define BYZAGG_API __declspec(dllexport)
#else
#define BYZAGG_API __attribute__((visibility("default")))
#endif

/* Error codes; the CLI forwards these as process exit codes. */
enum {
    BYZAGG_OK = 0,
    BYZAGG_ERR_CONFIG = 2, /* bad config text, key, or argument */
    BYZAGG_ERR_RUNTIME = 3 /* failure while running or writing output */
};

/* Library version string, static storage. */
BYZAGG_API const char* byzagg_version(void);

/* Message for the last failing call on this thread; empty string if none. */
BYZAGG_API const char* byzagg_last_error(void);

/* Default experiment config as INI text, static storage. */
BYZAGG_API const char* byzagg_default_config(void);

/* ---- experiment handle ---------------------------------------------- */

typedef struct byzagg_experiment byzagg_experiment;

/* Parse INI config text into a new handle. On success *out owns the
 * experiment and must be released with byzagg_experiment_destroy. */
BYZAGG_API int byzagg_experiment_create(const char* config_text,
                                        byzagg_experiment** out);

/* Same, reading the config from a file. */
BYZAGG_API int byzagg_experiment_create_from_file(const char* path,
                                                  byzagg_experiment** out);

/* Override the seed before running. */
BYZAGG_API int byzagg_experiment_set_seed(byzagg_experiment* exp, uint64_t seed);

/* Run all configured rounds. Idempotent per handle: a second call re-runs
 * from scratch with the same seed and produces identical results. */
BYZAGG_API int byzagg_experiment_run(byzagg_experiment* exp);

/* Number of completed rounds (0 before byzagg_experiment_run). */
BYZAGG_API size_t byzagg_experiment_rounds(const byzagg_experiment* exp);

/* Fetch one metric for one round. Valid names: "param_err", "agg_err",
 * "loss", "grad_norm", "converged", "elapsed_ms". */
BYZAGG_API int byzagg_experiment_metric(const byzagg_experiment* exp, size_t round,
                                        const char* name, double* value);

/* Model dimension d. */
BYZAGG_API size_t byzagg_experiment_dim(const byzagg_experiment* exp);

/* Copy the final iterate into buf (capacity len >= d). */
BYZAGG_API int byzagg_experiment_final_params(const byzagg_experiment* exp,
                                              double* buf, size_t len);

/* Write the metrics CSV for a completed run to path (atomic replace). */
BYZAGG_API int byzagg_experiment_write_csv(const byzagg_experiment* exp,
                                           const char* path);

/* Null-safe. */
BYZAGG_API void byzagg_experiment_destroy(byzagg_experiment* exp);

/* ---- one-shot commands (what the CLI calls) -------------------------- */

/* Run a config and write <out_dir>/<run-id>/{metrics.csv,manifest.json}.
 * out_dir NULL means BYZAGG_OUT or "out". has_seed != 0 applies seed. */
BYZAGG_API int byzagg_run(const char* config_path, const char* out_dir,
                          int has_seed, uint64_t seed);

/* Sweep one config axis over values x seeds; writes per-run artifacts plus
 * an aggregate sweep.csv under out_dir. */
BYZAGG_API int byzagg_sweep(const char* config_path, const char* out_dir,
                            const char* axis, const double* values,
                            size_t value_count, size_t seeds, size_t jobs);

/* Run acceptance criteria; ids like "A1". count == 0 runs all. Prints one
 * PASS/FAIL line per criterion to stdout. Returns BYZAGG_OK only if every
 * selected criterion passes; 1 on measured failure. */
BYZAGG_API int byzagg_accept(const char* const* suite_ids, size_t count);

/* ---- direct aggregation on raw arrays -------------------------------- */

/* Zero-initialize, then override fields as needed; zeros select defaults. */
typedef struct byzagg_agg_opts {
    double epsilon;            /* corrupted fraction, [0, 1/2) */
    double sigma;              /* noise scale (default 1) */
    double eta_t;              /* step size the updates were taken with (default 1) */
    size_t samples_per_client; /* n (default 1) */
    double delta;              /* confidence (default 0.05) */
    const char* threshold;     /* "eq1","eq1-alt","eq2","eq4","eq5","eq6","eq7","manual" */
    double manual_xi;          /* used when threshold == "manual" */
    double trim_beta;          /* trimmed-mean fraction per side (default 0.1) */
    size_t krum_f;             /* Krum / Bulyan f */
    size_t bucket_count;       /* bucketing k; 0 derives from epsilon, m, delta */
    uint64_t seed;             /* randomized stages (eigen restarts, bucketing) */
} byzagg_agg_opts;

/* Aggregate m row-major d-vectors with the named estimator ("mean",
 * "coord-median", "coord-trimmed-mean", "geometric-median", "krum",
 * "bulyan", "filtering", "no-regret", "bucketing"). opts may be NULL for
 * all-defaults. Writes the d-vector estimate to out. */
BYZAGG_API int byzagg_aggregate(const char* estimator, const double* updates,
                                size_t m, size_t d, const byzagg_agg_opts* opts,
                                double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BYZAGG_H */
