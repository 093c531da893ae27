// Copyright 2026 The ddmm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to libddmm. Every function returns a ddmm_status; on failure
 * ddmm_last_error() holds a message for the calling thread. Handles are
 * opaque and released with the matching *_destroy function. Arrays are
 * caller-owned; matrices are row-major. */

#ifndef DDMM_DDMM_H
#define DDMM_DDMM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DDMM_BUILDING)
#    define DDMM_API __declspec(dllexport)
#  else
#    define DDMM_API __declspec(dllimport)
#  endif
#else
#  define DDMM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define DDMM_ABI_VERSION 1

typedef enum ddmm_status {
    DDMM_OK = 0,
    DDMM_INVALID_ARGUMENT = 1,
    DDMM_NESTEDNESS_VIOLATION = 2,
    DDMM_INVALID_ALLOCATION = 3,
    DDMM_CONDITIONS_NOT_MET = 4,
    DDMM_MODEL_ORDER_VIOLATION = 5,
    DDMM_INVALID_SPECTRUM = 6,
    DDMM_DEGENERATE_VARIANCE = 7,
    DDMM_SERIES_DIVERGED = 8,
    DDMM_OUT_OF_SUPPORT = 9,
    DDMM_NON_FINITE_INTEGRAND = 10,
    DDMM_NOT_POSITIVE_DEFINITE = 11,
    DDMM_ZERO_VARIANCE = 12,
    DDMM_ROOT_BRACKET_FAILURE = 13,
    DDMM_DESIGN_TOO_SMALL = 14,
    DDMM_EXTRAPOLATION_REFUSED = 15,
    DDMM_CP_NON_CONVERGENCE = 16,
    DDMM_EMPTY_CONFIDENCE_WINDOW = 17,
    DDMM_GP_FIT_FAILURE = 18,
    DDMM_RISK_FIT_FAILURE = 19,
    DDMM_DEGENERATE_DATA = 20,
    DDMM_ZERO_OUTPUT_VARIANCE = 21,
    DDMM_IO_ERROR = 22,
    DDMM_FORMAT_ERROR = 23,
    DDMM_NULL_ARGUMENT = 98,
    DDMM_INTERNAL_ERROR = 99
} ddmm_status;

DDMM_API int ddmm_abi_version(void);
DDMM_API const char* ddmm_status_name(ddmm_status status);
/* Message of the last failure on this thread; empty after a success. */
DDMM_API const char* ddmm_last_error(void);

/* level 0 = info, 1 = warning. NULL restores the default stderr sink. */
typedef void (*ddmm_log_fn)(int level, const char* message, void* user);
DDMM_API void ddmm_set_log_callback(ddmm_log_fn fn, void* user);

/* ---- MFMC ---------------------------------------------------------------- */

/* Either sigma and rho0 (rho0[i-1] = corr(0, i)) or a full covariance. */
typedef struct ddmm_covariance {
    size_t models;
    const double* sigma;       /* models entries, or NULL when full is set */
    const double* rho0;        /* models - 1 entries */
    const double* full;        /* models x models, or NULL */
} ddmm_covariance;

typedef struct ddmm_ensemble {
    size_t models;
    const double* costs;
    double budget;
} ddmm_ensemble;

/* n and order hold models entries, beta models - 1; all caller-owned. */
typedef struct ddmm_allocation {
    double* n;
    double* beta;
    size_t* order;
    int pooled;
    int closed_form;           /* closed-form optimality conditions held */
    double variance;
    double hifi_mc_variance;
    double variance_reduction_ratio;
} ddmm_allocation;

DDMM_API ddmm_status ddmm_allocate(const ddmm_covariance* cov, const ddmm_ensemble* ensemble, ddmm_allocation* out);
DDMM_API ddmm_status ddmm_discrepancy(const ddmm_covariance* used, const ddmm_covariance* truth,
                                      const ddmm_ensemble* ensemble, double* out);
/* Sample standard deviations and correlation of paired draws. */
DDMM_API ddmm_status ddmm_sample_moments(const double* x, const double* y, size_t n, double* sigma0, double* sigma1,
                                         double* rho);

/* ---- confidence intervals ------------------------------------------------ */

typedef struct ddmm_ci_surrogate ddmm_ci_surrogate;

DDMM_API ddmm_status ddmm_ci_exact(double r, double alpha, int n_pilot, double* lower, double* upper);
/* cache_dir may be NULL (no caching). */
DDMM_API ddmm_status ddmm_ci_surrogate_create(int n_pilot, const char* cache_dir, int rebuild, unsigned threads,
                                              ddmm_ci_surrogate** out);
DDMM_API ddmm_status ddmm_ci_surrogate_query(const ddmm_ci_surrogate* s, double r, double alpha, double* lower,
                                             double* upper);
DDMM_API void ddmm_ci_surrogate_destroy(ddmm_ci_surrogate* s);

/* ---- expected discrepancy grid ------------------------------------------- */

typedef struct ddmm_grid ddmm_grid;

typedef struct ddmm_grid_options {
    double theta0_range[2];
    double theta1_range[2];
    double rho_range[2];
    size_t coarse_dims[3];
    size_t fine_dims[3];
    int cp_rank;
    int cp_max_iterations;
    double cp_tolerance;
    int accept_unconverged_cp;
    int quadrature_order;
    uint64_t seed;
    unsigned threads;
} ddmm_grid_options;

typedef struct ddmm_grid_info {
    int n_pilot;
    size_t dims[3];
    double costs[2];
    int cp_rank;               /* 0 for a directly computed grid */
    int cp_iterations;
    double reconstruction_error;
} ddmm_grid_info;

DDMM_API void ddmm_grid_options_init(ddmm_grid_options* options);
/* Two-model ensemble. Loads from cache_dir when a matching file exists
 * (unless rebuild), otherwise builds and stores it. cache_dir may be NULL. */
DDMM_API ddmm_status ddmm_grid_create(int n_pilot, const ddmm_ensemble* ensemble, const ddmm_grid_options* options,
                                      const char* cache_dir, int rebuild, ddmm_grid** out);
DDMM_API ddmm_status ddmm_grid_load(const char* path, ddmm_grid** out);
DDMM_API ddmm_status ddmm_grid_save(const ddmm_grid* grid, const char* path);
DDMM_API ddmm_status ddmm_grid_get_info(const ddmm_grid* grid, ddmm_grid_info* out);
DDMM_API void ddmm_grid_destroy(ddmm_grid* grid);

/* ---- adjustment ---------------------------------------------------------- */

typedef struct ddmm_solution {
    double observed_r;
    double adjusted_rho;
    double theta0;
    double theta1;
    double ci_lower;
    double ci_upper;
    double worst_case_expected_discrepancy;
    double alpha;
    int snapped;               /* no grid column inside the interval */
} ddmm_solution;

/* ci may be NULL, in which case intervals are computed exactly. */
DDMM_API ddmm_status ddmm_solve(const ddmm_grid* grid, const ddmm_ci_surrogate* ci, double r, double alpha,
                                ddmm_solution* out);
/* Pilot pairs; n must equal the grid's pilot size. */
DDMM_API ddmm_status ddmm_adjust_pairs(const ddmm_grid* grid, const ddmm_ci_surrogate* ci, const double* hifi,
                                       const double* lofi, size_t n, double alpha, ddmm_solution* out);

/* ---- alpha selection ----------------------------------------------------- */

typedef struct ddmm_alpha_options {
    double alpha_range[2];
    double rho_range[2];
    size_t design_points;
    int repetitions;
    uint64_t seed;
    int gp_restarts;
    uint64_t gp_seed;
    unsigned threads;
    const char* design_path;   /* optional output files */
    const char* surface_path;
} ddmm_alpha_options;

typedef struct ddmm_alpha_result {
    double alpha;
    double worst_case;
    double length_scales[2];
    double signal_variance;
} ddmm_alpha_result;

typedef struct ddmm_risk_row {
    size_t design_points;
    int repetitions;
    double risk;
    double std_error;
    double fitted;
} ddmm_risk_row;

typedef struct ddmm_risk_fit {
    double b1, c1, c2;
    double alpha_reference;
    double seconds_per_sample;
} ddmm_risk_fit;

DDMM_API void ddmm_alpha_options_init(ddmm_alpha_options* options);
DDMM_API ddmm_status ddmm_optimize_alpha(const ddmm_grid* grid, const ddmm_ci_surrogate* ci,
                                         const ddmm_alpha_options* options, ddmm_alpha_result* out);
/* Risk of the optimized alpha along the front D R r = time_budget, by
 * subsampling a reference design of options->design_points x
 * options->repetitions. rows needs front_points entries; *rows_written
 * receives the count used. */
DDMM_API ddmm_status ddmm_alpha_risk(const ddmm_grid* grid, const ddmm_ci_surrogate* ci,
                                     const ddmm_alpha_options* options, double time_budget, size_t front_points,
                                     size_t resamples, ddmm_risk_row* rows, size_t* rows_written,
                                     ddmm_risk_fit* fit);

/* ---- evaluation ---------------------------------------------------------- */

/* n cell midpoints of [lo, hi]. */
DDMM_API ddmm_status ddmm_rho_axis(size_t n, double lo, double hi, double* out);

/* Outputs hold n entries each; unadjusted and pct_edd may be NULL. */
DDMM_API ddmm_status ddmm_edd_curve(const ddmm_grid* grid, const ddmm_ci_surrogate* ci, double alpha,
                                    const ddmm_ensemble* ensemble, const double* rho, size_t n, double* edd,
                                    double* unadjusted, double* pct_edd);

typedef struct ddmm_paired ddmm_paired;

/* `input_id,hifi,lofi[,qoi]` CSV, grouped by qoi. */
DDMM_API ddmm_status ddmm_paired_read(const char* path, ddmm_paired** out);
DDMM_API size_t ddmm_paired_groups(const ddmm_paired* data);
DDMM_API const char* ddmm_paired_name(const ddmm_paired* data, size_t group);
DDMM_API size_t ddmm_paired_rows(const ddmm_paired* data, size_t group);
/* Borrowed pointers, valid until ddmm_paired_destroy. */
DDMM_API ddmm_status ddmm_paired_columns(const ddmm_paired* data, size_t group, const double** hifi,
                                         const double** lofi, size_t* rows);
DDMM_API void ddmm_paired_destroy(ddmm_paired* data);

typedef struct ddmm_mean_se {
    double mean;
    double se;
} ddmm_mean_se;

typedef struct ddmm_empirical_summary {
    double truth_rho, truth_sigma0, truth_sigma1;
    size_t trials, resampled, clamped;
    double hifi_mc_variance, optimal_variance;
    ddmm_mean_se mse_unadjusted, mse_adjusted;
    ddmm_mean_se vrr_unadjusted, vrr_adjusted;
    ddmm_mean_se discrepancy_unadjusted, discrepancy_adjusted;
    ddmm_mean_se edd;
    double pct_edd;
    double mse_pct_change;
} ddmm_empirical_summary;

/* known_variances != 0 uses the full-data standard deviations in every trial. */
DDMM_API ddmm_status ddmm_empirical_eval(const ddmm_paired* data, size_t group, const ddmm_ensemble* ensemble,
                                         const ddmm_grid* grid, const ddmm_ci_surrogate* ci, double alpha,
                                         size_t trials, uint64_t seed, int known_variances,
                                         ddmm_empirical_summary* out);

/* phi holds 3 n entries (rho_hat, sigma0_hat, sigma1_hat per truth);
 * total_variance n entries or NULL. k = 0 selects the default neighbours. */
DDMM_API ddmm_status ddmm_shapley(const double* rho, size_t n, int n_pilot, const ddmm_ensemble* ensemble,
                                  size_t mc_samples, uint64_t seed, size_t k, unsigned threads, double* phi,
                                  double* total_variance);

typedef struct ddmm_robustness_row {
    int n_pilot;
    ddmm_mean_se true_variance;
    ddmm_mean_se discrepancy;
    ddmm_mean_se projected_ratio;
} ddmm_robustness_row;

/* Ordered-scenario study; rows holds n_sizes entries. */
DDMM_API ddmm_status ddmm_robustness(const int* pilot_sizes, size_t n_sizes, size_t scenarios, size_t models,
                                     size_t trials, uint64_t seed, ddmm_robustness_row* rows);

#ifdef __cplusplus
}
#endif

#endif /* DDMM_DDMM_H */
