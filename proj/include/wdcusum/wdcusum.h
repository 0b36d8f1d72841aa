/*
 * wdcusum: mixture-WD-CuSum detection of a growing, moving anomaly in a
 * network of L homogeneous sensors.
 *
 * Objects are opaque handles created by *_create and released by *_destroy.
 * Every fallible call returns a wdc_status; on failure a human-readable
 * message is available from wdc_last_error() on the same thread. Sensor
 * indices are 0-based.
 */
#ifndef WDCUSUM_H
#define WDCUSUM_H

#include <stddef.h>
#include <stdint.h>

#if defined(WDCUSUM_BUILDING_LIBRARY)
#define WDC_API __attribute__((visibility("default")))
#else
#define WDC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wdc_status {
    WDC_OK = 0,
    WDC_ERR_CONFIG = 1,
    WDC_ERR_PARAMETER = 2,
    WDC_ERR_DOMAIN = 3,
    WDC_ERR_CALIBRATION = 4,
    WDC_ERR_CENSORING = 5,
    WDC_ERR_IO = 6,
    WDC_ERR_BUDGET = 7,
    WDC_ERR_NULL_ARGUMENT = 8,
    WDC_ERR_BUFFER_TOO_SMALL = 9,
    WDC_ERR_INTERNAL = 10
} wdc_status;

WDC_API const char *wdc_version(void);
WDC_API const char *wdc_status_name(wdc_status status);
WDC_API const char *wdc_last_error(void);

/* L sensors, anomaly grows from m to n affected sensors. */
typedef struct wdc_network {
    uint32_t sensors;
    uint32_t initial_size;
    uint32_t final_size;
} wdc_network;

/* first_change == 0 means the change never happens. */
typedef struct wdc_schedule {
    uint64_t first_change;
    const uint64_t *durations;
    size_t duration_count;
} wdc_schedule;

typedef enum wdc_policy_kind {
    WDC_POLICY_PREFIX = 0,
    WDC_POLICY_ROTATING = 1,
    WDC_POLICY_UNIFORM = 2,
    WDC_POLICY_FIXED = 3
} wdc_policy_kind;

/* ---- densities ---------------------------------------------------------- */

typedef struct wdc_pair wdc_pair;

WDC_API wdc_status wdc_pair_create_gaussian(double pre_mean, double pre_variance, double post_mean,
                                            double post_variance, wdc_pair **out);
WDC_API void wdc_pair_destroy(wdc_pair *pair);
WDC_API wdc_status wdc_pair_llr(const wdc_pair *pair, const double *x, size_t count, double *out);

/* ---- mixture likelihood ratios ----------------------------------------- */

WDC_API wdc_status wdc_mixture_llr(const double *llrs, size_t count, size_t size, double *out);
/* out[i-1] receives the mixture llr of phase i; out_count must be n - m + 1. */
WDC_API wdc_status wdc_phase_llrs(const wdc_pair *pair, const wdc_network *network, const double *x, size_t count,
                                  double *out, size_t out_count);

typedef struct wdc_kl_estimate {
    size_t phase;
    size_t size;
    double estimate;
    double std_error;
    uint64_t trials;
    uint64_t seed;
} wdc_kl_estimate;

WDC_API wdc_status wdc_estimate_kl(const wdc_pair *pair, const wdc_network *network, size_t phase, uint64_t trials,
                                   uint64_t seed, unsigned workers, wdc_kl_estimate *out);

/* ---- trajectories and streams ------------------------------------------ */

typedef struct wdc_trajectory wdc_trajectory;

WDC_API wdc_status wdc_trajectory_create(wdc_trajectory **out);
/* Appends the affected set for the next time step. */
WDC_API wdc_status wdc_trajectory_append(wdc_trajectory *trajectory, const uint32_t *sensors, size_t count);
WDC_API wdc_status wdc_trajectory_rotating(const wdc_network *network, const wdc_schedule *schedule, uint64_t length,
                                           wdc_trajectory **out);
WDC_API void wdc_trajectory_destroy(wdc_trajectory *trajectory);

typedef struct wdc_stream wdc_stream;

/* Pointers stay valid until the next wdc_stream_next or destroy. */
typedef struct wdc_observation {
    uint64_t time;
    const double *values;
    size_t sensor_count;
    size_t phase;
    const uint32_t *affected;
    size_t affected_count;
} wdc_observation;

/* `trajectory` is read only for WDC_POLICY_FIXED and may be NULL otherwise. */
WDC_API wdc_status wdc_stream_create(const wdc_pair *pair, const wdc_network *network, const wdc_schedule *schedule,
                                     wdc_policy_kind policy, const wdc_trajectory *trajectory, uint64_t seed,
                                     wdc_stream **out);
WDC_API wdc_status wdc_stream_next(wdc_stream *stream, wdc_observation *out);
WDC_API void wdc_stream_destroy(wdc_stream *stream);

/* ---- detector ------------------------------------------------------------ */

typedef struct wdc_params {
    double threshold;
    const double *rho;
    size_t rho_count;
} wdc_params;

/* b = log(gamma), rho_i = 1/b; rho_capacity must be >= n - m. */
WDC_API wdc_status wdc_default_params(double gamma, const wdc_network *network, double *threshold, double *rho,
                                      size_t rho_capacity);

typedef struct wdc_detector wdc_detector;

WDC_API wdc_status wdc_detector_create(const wdc_pair *pair, const wdc_network *network, const wdc_params *params,
                                       wdc_detector **out);
/* *alarm is set to 1 once W[k] >= b. */
WDC_API wdc_status wdc_detector_step(wdc_detector *detector, const double *x, size_t count, int *alarm);
WDC_API wdc_status wdc_detector_statistic(const wdc_detector *detector, double *w);
/* Copies omega_1..omega_{n-m+1}; *count receives n - m + 1. */
WDC_API wdc_status wdc_detector_omega(const wdc_detector *detector, double *out, size_t capacity, size_t *count);
WDC_API wdc_status wdc_detector_time(const wdc_detector *detector, uint64_t *time);
WDC_API wdc_status wdc_detector_reset(wdc_detector *detector);
WDC_API void wdc_detector_destroy(wdc_detector *detector);

/* ---- Monte Carlo experiments ------------------------------------------- */

typedef struct wdc_mc_options {
    uint64_t trials;
    uint64_t horizon;
    uint64_t seed;
    unsigned workers; /* 0 = hardware concurrency */
} wdc_mc_options;

typedef struct wdc_mc_estimate {
    double mean;
    double std_error;
    uint64_t trials;
    uint64_t censored;
    uint64_t horizon;
    uint64_t seed;
} wdc_mc_estimate;

WDC_API wdc_status wdc_estimate_mtfa(const wdc_pair *pair, const wdc_network *network, const wdc_params *params,
                                     const wdc_mc_options *options, wdc_mc_estimate *out);
/* truth may be NULL (same as network). schedule->first_change must be 1. */
WDC_API wdc_status wdc_estimate_wadd(const wdc_pair *pair, const wdc_network *network, const wdc_params *params,
                                     const wdc_network *truth, const wdc_schedule *schedule, wdc_policy_kind policy,
                                     const wdc_trajectory *trajectory, const wdc_mc_options *options,
                                     wdc_mc_estimate *out);
/* WDC_ERR_CENSORING when more than `fraction` of the trials were censored. */
WDC_API wdc_status wdc_check_censoring(const wdc_mc_estimate *estimate, double fraction);
/* options->horizon == 0 selects 50 x target. */
WDC_API wdc_status wdc_calibrate_threshold(const wdc_pair *pair, const wdc_network *network, double target,
                                           const wdc_mc_options *options, double tolerance_rel, double *threshold,
                                           wdc_mc_estimate *achieved);

/* c_out needs duration_count slots; kl_count must be duration_count + 1. */
WDC_API wdc_status wdc_scaling_constants(const uint64_t *durations, size_t duration_count, double gamma,
                                         const double *kl, size_t kl_count, double *c_out, size_t *h);
WDC_API wdc_status wdc_theory_delay(double gamma, const double *kl, size_t kl_count, const double *c, size_t c_count,
                                    size_t h, double *out);

typedef struct wdc_curve_request {
    const double *gamma_grid;
    size_t gamma_count;
    const wdc_network *detector;
    const wdc_network *truth; /* NULL = detector */
    const uint64_t *durations;
    size_t duration_count;
    wdc_policy_kind policy; /* prefix, rotating or uniform */
    uint64_t mtfa_trials;
    uint64_t wadd_trials;
    uint64_t mtfa_horizon; /* 0 = 50 x gamma when calibrating, else 2000 x gamma */
    uint64_t wadd_horizon; /* 0 = 100 x theory delay */
    uint64_t kl_trials;
    int calibrate;
    double tolerance;
    double censoring_budget;
    uint64_t seed;
    unsigned workers;
} wdc_curve_request;

typedef struct wdc_curve_row {
    double gamma_target;
    double threshold;
    double rho; /* common transition weight, NaN when m == n */
    int calibrated;
    wdc_mc_estimate mtfa;
    wdc_mc_estimate wadd;
    double theory_wadd;
} wdc_curve_row;

typedef struct wdc_curve wdc_curve;

WDC_API wdc_status wdc_curve_run(const wdc_pair *pair, const wdc_curve_request *request, wdc_curve **out);
WDC_API size_t wdc_curve_size(const wdc_curve *curve);
WDC_API wdc_status wdc_curve_row_at(const wdc_curve *curve, size_t index, wdc_curve_row *out);
WDC_API void wdc_curve_destroy(wdc_curve *curve);

/* Seed of substream `index` of `master`; trial t of every run uses index t. */
WDC_API uint64_t wdc_derive_seed(uint64_t master, uint64_t index);

/* Sub-seeds used by wdc_curve_run for its MTFA, WADD and KL runs. KL phase p
 * is estimated with wdc_derive_seed(wdc_kl_seed(master), p). */
WDC_API uint64_t wdc_mtfa_seed(uint64_t master);
WDC_API uint64_t wdc_wadd_seed(uint64_t master);
WDC_API uint64_t wdc_kl_seed(uint64_t master);

#ifdef __cplusplus
}
#endif

#endif /* WDCUSUM_H */
