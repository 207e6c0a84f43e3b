#ifndef ZSK_H
#define ZSK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

enum ZskDsilFormulation
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  ZSK_DSIL_FORMULATION_PHI = 0,
  ZSK_DSIL_FORMULATION_K_PHI = 1,
  ZSK_DSIL_FORMULATION_KQ = 2,
};
#ifndef __cplusplus
typedef int32_t ZskDsilFormulation;
#endif // __cplusplus

enum ZskFamily
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  ZSK_FAMILY_R = 0,
  ZSK_FAMILY_S = 1,
};
#ifndef __cplusplus
typedef int32_t ZskFamily;
#endif // __cplusplus

// Status codes. The first four match the command-line exit codes.
enum ZskStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  ZSK_STATUS_OK = 0,
  // Invalid argument or configuration.
  ZSK_STATUS_INVALID_ARGUMENT = 1,
  // Malformed data, unknown target or dimension mismatch.
  ZSK_STATUS_DATA_ERROR = 2,
  // Runtime failure (I/O, degenerate problem).
  ZSK_STATUS_RUNTIME_ERROR = 3,
  ZSK_STATUS_NULL_POINTER = 4,
  ZSK_STATUS_INVALID_UTF8 = 5,
  // A Rust panic was caught at the boundary.
  ZSK_STATUS_PANIC = 6,
};
#ifndef __cplusplus
typedef int32_t ZskStatus;
#endif // __cplusplus

// Opaque dataset handle.
typedef struct ZskDataset ZskDataset;

// Opaque fitted-regressor handle.
typedef struct ZskRegressor ZskRegressor;

// SVR hyperparameters, see [`zsk_svr_config_default`].
typedef struct ZskSvrConfig {
  double c;
  double epsilon;
  double tol;
  size_t max_passes;
} ZskSvrConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *zsk_version(void);

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into the library from the same thread.
const char *zsk_last_error_message(void);

struct ZskSvrConfig zsk_svr_config_default(void);

// Loads a dataset from its instance and side-information CSV files.
//
// # Safety
// Path arguments must be NUL-terminated strings; `out` must be writable.
int32_t zsk_dataset_load(const char *instances_path,
                         const char *sideinfo_path,
                         struct ZskDataset **out);

// Loads `instances.csv` and `sideinfo.csv` from a directory.
//
// # Safety
// `dir` must be a NUL-terminated string; `out` must be writable.
int32_t zsk_dataset_load_dir(const char *dir, struct ZskDataset **out);

// Generates a synthetic dataset. `d_prototypes` is used by the S family only.
//
// # Safety
// `out` must be writable.
int32_t zsk_dataset_generate(ZskFamily family,
                             size_t m_o,
                             size_t a_s,
                             size_t n_o,
                             size_t a_x,
                             size_t d_prototypes,
                             uint64_t seed,
                             struct ZskDataset **out);

// Builds a dataset from row-major arrays. Target `t` gets the id `"t<t>"`;
// `row_target[i]` is the target index of row `i`.
//
// # Safety
// `features` holds `n_rows * a_x` values, `row_target` and `labels` hold
// `n_rows` values, `side_info` holds `n_targets * a_s` values.
int32_t zsk_dataset_from_arrays(const double *features,
                                size_t n_rows,
                                size_t a_x,
                                const size_t *row_target,
                                const double *labels,
                                const double *side_info,
                                size_t n_targets,
                                size_t a_s,
                                struct ZskDataset **out);

// Writes `instances.csv` and `sideinfo.csv` into `dir`.
//
// # Safety
// `ds` must be a live handle; `dir` a NUL-terminated string.
int32_t zsk_dataset_save(const struct ZskDataset *ds, const char *dir);

// Row count, or 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live handle.
size_t zsk_dataset_n_rows(const struct ZskDataset *ds);

// Feature count, or 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live handle.
size_t zsk_dataset_a_x(const struct ZskDataset *ds);

// Side-information size, or 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live handle.
size_t zsk_dataset_a_s(const struct ZskDataset *ds);

// Number of distinct targets with instances, or 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live handle.
size_t zsk_dataset_n_targets(const struct ZskDataset *ds);

// Releases a dataset. NULL is ignored.
//
// # Safety
// `ds` must be NULL or a handle not yet freed.
void zsk_dataset_free(struct ZskDataset *ds);

// Fits a regressor. `method` is one of `BL_L`, `BL_Q`, `SR_E`, `SR_M`,
// `MPLC`, `DSIL`, `DSIL_Phi`, `DSIL_KPhi`, `DSIL_KQ`; `cfg` may be NULL for defaults.
//
// # Safety
// `ds` must be a live handle, `method` a NUL-terminated string, `out` writable.
int32_t zsk_regressor_fit(const struct ZskDataset *ds,
                          const char *method,
                          const struct ZskSvrConfig *cfg,
                          struct ZskRegressor **out);

// Prediction for one instance `x` (length `a_x`) of a target with side information `s` (length `a_s`).
//
// # Safety
// `r` must be a live handle; `x` and `s` must hold `a_x` and `a_s` values; `out` writable.
int32_t zsk_regressor_predict(const struct ZskRegressor *r,
                              const double *x,
                              size_t a_x,
                              const double *s,
                              size_t a_s,
                              double *out);

// Predictions for `n` instances. Row `i` uses `xs[i*a_x..]` and `ss[i*a_s..]`.
//
// # Safety
// `xs` holds `n * a_x` values, `ss` holds `n * a_s` values, `out` has room for `n`.
int32_t zsk_regressor_predict_batch(const struct ZskRegressor *r,
                                    const double *xs,
                                    size_t n,
                                    size_t a_x,
                                    const double *ss,
                                    size_t a_s,
                                    double *out);

// Saves a regressor to a versioned JSON container.
//
// # Safety
// `r` must be a live handle; `path` a NUL-terminated string.
int32_t zsk_regressor_save(const struct ZskRegressor *r, const char *path);

// Loads a regressor saved by [`zsk_regressor_save`] or the command line.
//
// # Safety
// `path` must be a NUL-terminated string; `out` writable.
int32_t zsk_regressor_load(const char *path, struct ZskRegressor **out);

// Feature count the regressor expects, or 0 for NULL.
//
// # Safety
// `r` must be NULL or a live handle.
size_t zsk_regressor_a_x(const struct ZskRegressor *r);

// Side-information size the regressor expects, or 0 for NULL.
//
// # Safety
// `r` must be NULL or a live handle.
size_t zsk_regressor_a_s(const struct ZskRegressor *r);

// Releases a regressor. NULL is ignored.
//
// # Safety
// `r` must be NULL or a handle not yet freed.
void zsk_regressor_free(struct ZskRegressor *r);

// DSIL kernel between `(x1, s1)` and `(x2, s2)`.
//
// # Safety
// `x1`, `x2` hold `a_x` values, `s1`, `s2` hold `a_s` values; `out` writable.
int32_t zsk_dsil_kernel(const double *x1,
                        const double *s1,
                        const double *x2,
                        const double *s2,
                        size_t a_x,
                        size_t a_s,
                        ZskDsilFormulation formulation,
                        double *out);

// Nemenyi critical difference for `k` methods over `n` datasets at `alpha`
// (0.01, 0.05 or 0.10).
//
// # Safety
// `out` must be writable.
int32_t zsk_nemenyi_cd(size_t k, size_t n, double alpha, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZSK_H */
