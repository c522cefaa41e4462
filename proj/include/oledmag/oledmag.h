#ifndef OLEDMAG_OLEDMAG_H
#define OLEDMAG_OLEDMAG_H

/* C interface to the OLED magnetometry library. Objects are opaque handles
 * created by the library and released with the matching *_free function.
 * Every fallible call returns an omg_status; on failure omg_last_error()
 * describes the problem for the calling thread. Output parameters are left
 * untouched on failure. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(OLEDMAG_BUILDING)
#    define OMG_API __declspec(dllexport)
#  else
#    define OMG_API __declspec(dllimport)
#  endif
#else
#  define OMG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum omg_status {
    OMG_OK = 0,
    OMG_ERR_USAGE = 1,     /* invalid argument or precondition */
    OMG_ERR_DOMAIN = 2,    /* input outside a formula's domain */
    OMG_ERR_DATA = 3,      /* malformed file or configuration */
    OMG_ERR_NUMERICAL = 4, /* numerical failure */
    OMG_ERR_IO = 5,        /* file could not be opened, read or written */
    OMG_ERR_INTERNAL = 6
} omg_status;

OMG_API const char* omg_version(void);
OMG_API const char* omg_status_name(omg_status status);
/* Message of the last failed call on this thread; "" if none. */
OMG_API const char* omg_last_error(void);

typedef struct omg_scenario omg_scenario;
typedef struct omg_map omg_map;
typedef struct omg_stack omg_stack;
typedef struct omg_analysis omg_analysis;
typedef struct omg_scan omg_scan;
typedef struct omg_table omg_table;

/* ---- scenarios ---- */

OMG_API omg_status omg_scenario_default(omg_scenario** out);
OMG_API omg_status omg_scenario_load(const char* path, omg_scenario** out);
OMG_API omg_status omg_scenario_parse(const char* json_text, omg_scenario** out);
OMG_API void omg_scenario_free(omg_scenario* scenario);

typedef struct omg_scenario_info {
    double gamma_hz_per_t;
    size_t width, height, n_freq;
    double pitch_m;
    uint64_t seed;
    int binning;
    double gate_low_hz, gate_high_hz;
    int k_max;
    double t_total_s;
    double max_nonconverged_fraction;
    double scan_x0_m;
    size_t scan_points;
} omg_scenario_info;

OMG_API omg_status omg_scenario_get_info(const omg_scenario* scenario, omg_scenario_info* out);
OMG_API omg_status omg_scenario_set_seed(omg_scenario* scenario, uint64_t seed);
OMG_API omg_status omg_scenario_set_scan_x0(omg_scenario* scenario, double x0_m);

/* ---- maps ----
 * A map holds nu x nv entries (i along x, j along y) with a value, its
 * standard error and a validity flag. Field grids are maps with se = 0. */

typedef struct omg_map_info {
    size_t nu, nv;
    double super_pixel_size_m;
    size_t valid_count;
} omg_map_info;

OMG_API omg_status omg_map_create(size_t nu, size_t nv, double super_pixel_size_m, omg_map** out);
OMG_API void omg_map_free(omg_map* map);
OMG_API omg_status omg_map_get_info(const omg_map* map, omg_map_info* out);
OMG_API omg_status omg_map_get(const omg_map* map, size_t i, size_t j, double* value, double* se, int* valid);
OMG_API omg_status omg_map_set(omg_map* map, size_t i, size_t j, double value, double se, int valid);
OMG_API omg_status omg_map_read_csv(const char* path, omg_map** out);
OMG_API omg_status omg_map_write_csv(const omg_map* map, const char* path);
/* 16-bit PGM; valid values map linearly from [low, high] to [1, 65535], invalid to 0. */
OMG_API omg_status omg_map_write_pgm(const omg_map* map, const char* path, double low, double high);

/* |B| of the scenario's magnets on its field-map plane. */
OMG_API omg_status omg_field_simulate(const omg_scenario* scenario, int threads, omg_map** out);
/* The scenario's ground-truth field on the camera grid. */
OMG_API omg_status omg_field_ground_truth(const omg_scenario* scenario, int threads, omg_map** out);

/* ---- image stacks ---- */

typedef struct omg_stack_info {
    size_t width, height, n_freq;
    double pitch_m;
    double freq_min_hz, freq_max_hz;
    uint64_t seed;
} omg_stack_info;

/* field may be NULL to use the scenario's ground truth; otherwise it must
 * match the camera grid (width x height at the camera pitch). */
OMG_API omg_status omg_stack_synthesize(const omg_scenario* scenario, const omg_map* field, int threads,
                                        omg_stack** out);
OMG_API omg_status omg_stack_read(const char* path, omg_stack** out);
OMG_API omg_status omg_stack_write(const omg_stack* stack, const char* path);
OMG_API omg_status omg_stack_get_info(const omg_stack* stack, omg_stack_info* out);
OMG_API void omg_stack_free(omg_stack* stack);

/* ---- resonance analysis ---- */

typedef enum omg_map_kind {
    OMG_MAP_RESONANCE = 0,       /* Hz, se = standard error of the peak frequency */
    OMG_MAP_SE = 1,              /* Hz, value = standard error */
    OMG_MAP_FIELD = 2,           /* T */
    OMG_MAP_GATED_RESONANCE = 3, /* resonance after gating and interpolation */
    OMG_MAP_GATED_FIELD = 4
} omg_map_kind;

typedef struct omg_analysis_stats {
    size_t nu, nv;
    size_t fits;
    size_t converged;
    size_t valid;
    size_t gated;      /* entries replaced or masked by the gate */
    size_t unresolved; /* gated entries with no usable neighbour */
    double nonconverged_fraction;
} omg_analysis_stats;

/* scenario may be NULL for the defaults (gate, k_max, significance, contrast
 * mode, gamma). binning <= 0 takes the scenario's binning. */
OMG_API omg_status omg_analysis_run(const omg_stack* stack, const omg_scenario* scenario, int binning, int threads,
                                    omg_analysis** out);
OMG_API omg_status omg_analysis_get_stats(const omg_analysis* analysis, omg_analysis_stats* out);
OMG_API omg_status omg_analysis_get_map(const omg_analysis* analysis, omg_map_kind kind, omg_map** out);
OMG_API void omg_analysis_free(omg_analysis* analysis);

/* ---- sensitivity ---- */

typedef enum omg_region { OMG_REGION_ALL = 0, OMG_REGION_OLED = 1, OMG_REGION_DIFFUSION = 2 } omg_region;

OMG_API omg_status omg_field_sensitivity(double se_f0_hz, double t_total_s, double gamma_hz_per_t, double* out);
/* Mean field sensitivity over valid entries of an SE map (values in Hz) inside
 * the region, using the scenario's device regions and gamma. */
OMG_API omg_status omg_region_sensitivity(const omg_map* se_map, const omg_scenario* scenario, omg_region region,
                                          double t_total_s, double* out);

typedef struct omg_inverse_law {
    double a, b;
    double se_a, se_b;
    double residual_norm;
    int dof;
} omg_inverse_law;

/* Least-squares fit of eta = a / size + b. */
OMG_API omg_status omg_fit_inverse_law(const double* sizes, const double* etas, size_t count, omg_inverse_law* out);

OMG_API omg_status omg_photon_rate(double well_depth, double quantum_efficiency, double pixel_area_m2,
                                   double exposure_s, double* out);
/* Shot-noise limited sensitivity (T/sqrt(Hz)) of a sensor of the given area. */
OMG_API omg_status omg_shot_noise_sensitivity(double contrast, double linewidth_hz, double rate_per_m2,
                                              double area_m2, double* out);

/* ---- gradients ---- */

OMG_API omg_status omg_min_detectable_gradient(double delta_b_t, double w_m, double dx_m, double* out);
OMG_API omg_status omg_gradient_sensitivity(double delta_b_t, double w_m, double dx_m, double t_total_s,
                                            double* out);

typedef struct omg_curve_point {
    double w_m;
    double dx_m;
    double eta_g;
} omg_curve_point;

/* One curve per sensor size, each with `points` log-spaced gaps from dx = w
 * to dx_max. `out` needs count * points entries. */
OMG_API omg_status omg_gradient_curves(const double* widths_m, const double* delta_b_t, size_t count, double dx_max_m,
                                       int points, double t_total_s, omg_curve_point* out);

typedef struct omg_gradient_estimate {
    double gradient_t_per_m;
    double delta_b_t;
    double dx_m;
    double se_delta_b_t;
} omg_gradient_estimate;

OMG_API omg_status omg_gradient_between(const omg_map* field_map, size_t i1, size_t j1, size_t i2, size_t j2,
                                        omg_gradient_estimate* out);
/* Difference of the column means of columns i2 and i1 (valid entries only). */
OMG_API omg_status omg_column_difference(const omg_map* field_map, size_t i1, size_t i2,
                                         omg_gradient_estimate* out);

/* ---- point-sensor scans ---- */

typedef struct omg_scan_info {
    size_t points;
    size_t detected;
    double true_x0_m;
    double fitted_x0_m; /* offset search over the scenario's x0 grid */
    double fitted_similarity;
    double similarity; /* measured vs model at the true offset */
} omg_scan_info;

typedef struct omg_scan_point {
    double position_m;
    double measured_t;
    double model_t;
    double se_t;
    int detected;
} omg_scan_point;

OMG_API omg_status omg_scan_run(const omg_scenario* scenario, int threads, omg_scan** out);
OMG_API omg_status omg_scan_get_info(const omg_scan* scan, omg_scan_info* out);
OMG_API omg_status omg_scan_get_point(const omg_scan* scan, size_t k, omg_scan_point* out);
OMG_API omg_status omg_scan_write_csv(const omg_scan* scan, const char* path);
OMG_API void omg_scan_free(omg_scan* scan);

OMG_API omg_status omg_similarity(const double* p, const double* q, size_t count, double* out);
/* Offset search of a measured series against the scenario's scan model. The
 * series must have one entry per scan position. */
OMG_API omg_status omg_fit_offset(const omg_scenario* scenario, const double* measured, size_t count,
                                  double* x0_m, double* similarity);

/* ---- numeric CSV tables ---- */

OMG_API omg_status omg_table_read(const char* path, omg_table** out);
OMG_API void omg_table_free(omg_table* table);
OMG_API size_t omg_table_columns(const omg_table* table);
OMG_API size_t omg_table_rows(const omg_table* table);
/* Column name, or NULL when out of range. Valid until the table is freed. */
OMG_API const char* omg_table_column_name(const omg_table* table, size_t column);
OMG_API omg_status omg_table_find(const omg_table* table, const char* name, size_t* column);
/* Copies a column into out, which needs omg_table_rows() entries. */
OMG_API omg_status omg_table_column(const omg_table* table, size_t column, double* out);
/* Writes a header row and row-major data with shortest round-trip numbers. */
OMG_API omg_status omg_csv_write(const char* path, const char* const* columns, size_t n_columns, const double* data,
                                 size_t n_rows);

/* ---- acceptance self-test ---- */

typedef struct omg_selftest_result {
    int id;
    const char* name;
    int pass;
    const char* detail;
    double seconds;
} omg_selftest_result;

typedef void (*omg_selftest_callback)(const omg_selftest_result* result, void* user);

OMG_API int omg_selftest_count(void);
/* Runs the criteria in ids (all when n_ids = 0), calling back after each.
 * failed receives the number of failing criteria. */
OMG_API omg_status omg_selftest_run(const int* ids, size_t n_ids, int threads, omg_selftest_callback callback,
                                    void* user, int* failed);

/* Worker count used for a request: > 0 as is, 0 from OLEDMAG_THREADS or the hardware. */
OMG_API int omg_resolve_threads(int requested);

#ifdef __cplusplus
}
#endif

#endif
