#ifndef SPDE_H
#define SPDE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum SpdeStatus {
  SPDE_STATUS_OK = 0,
  SPDE_STATUS_NULL_POINTER = 1,
  SPDE_STATUS_INVALID_UTF8 = 2,
  SPDE_STATUS_CONFIG = 3,
  SPDE_STATUS_DOMAIN = 4,
  SPDE_STATUS_DIVERGED = 5,
  SPDE_STATUS_IO = 6,
  SPDE_STATUS_OUT_OF_RANGE = 7,
  SPDE_STATUS_UNRESOLVED = 8,
  SPDE_STATUS_PANIC = 9,
} SpdeStatus;

// Opaque result of a study.
typedef struct SpdeRateTable SpdeRateTable;

// Opaque study description.
typedef struct SpdeStudy SpdeStudy;

// One ladder entry of a rate table.
typedef struct SpdeRateRow {
  size_t resolution;
  // `1/N` (spatial) or the time step (temporal).
  double measure;
  double strong_error;
  double strong_stderr;
  double weak_error;
  double weak_stderr;
  size_t n_samples;
  size_t n_diverged;
} SpdeRateRow;

// Log-log least-squares fit.
typedef struct SpdeFit {
  double slope;
  double intercept;
  double r_squared;
  size_t points;
} SpdeFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread. Valid until the next
// call into the library from the same thread; empty if none failed.
const char *spde_last_error(void);

// Library version as a static NUL-terminated string.
const char *spde_version(void);

// Eigenvalue `(kπ)²` of the Dirichlet Laplacian, `k ≥ 1`.
//
// # Safety
// `out` must be null or valid for writes.
enum SpdeStatus spde_eigenvalue(size_t k, double *out);

// Parses a TOML study description into a new handle.
//
// # Safety
// `toml` must be null or a NUL-terminated string; `out` must be null or
// valid for writes.
enum SpdeStatus spde_study_parse(const char *toml, struct SpdeStudy **out);

// # Safety
// `study` must be null or a live handle from [`spde_study_parse`].
enum SpdeStatus spde_study_set_seed(struct SpdeStudy *study, uint64_t seed);

// # Safety
// `study` must be null or a live handle from [`spde_study_parse`].
enum SpdeStatus spde_study_set_samples(struct SpdeStudy *study, size_t samples);

// Runs the study. `workers == 0` uses every core; `independent != 0`
// estimates weak errors from independent paths.
//
// # Safety
// `study` must be null or a live handle; `out` must be null or valid for
// writes.
enum SpdeStatus spde_study_run(const struct SpdeStudy *study,
                               size_t workers,
                               int32_t independent,
                               struct SpdeRateTable **out);

// # Safety
// `study` must be null or a handle from [`spde_study_parse`] not yet freed.
void spde_study_free(struct SpdeStudy *study);

// Number of rows; 0 for a null handle.
//
// # Safety
// `table` must be null or a live handle from [`spde_study_run`].
size_t spde_table_rows(const struct SpdeRateTable *table);

// # Safety
// `table` must be null or a live handle; `out` must be null or valid for
// writes.
enum SpdeStatus spde_table_row(const struct SpdeRateTable *table,
                               size_t index,
                               struct SpdeRateRow *out);

// Weak-error slope; `SPDE_STATUS_UNRESOLVED` when it cannot be fitted.
//
// # Safety
// `table` must be null or a live handle; `out` must be null or valid for
// writes.
enum SpdeStatus spde_table_weak_fit(const struct SpdeRateTable *table, struct SpdeFit *out);

// Strong-error slope; `SPDE_STATUS_UNRESOLVED` when it cannot be fitted.
//
// # Safety
// `table` must be null or a live handle; `out` must be null or valid for
// writes.
enum SpdeStatus spde_table_strong_fit(const struct SpdeRateTable *table, struct SpdeFit *out);

// The table as CSV, owned by the handle.
//
// # Safety
// `table` must be null or a live handle.
const char *spde_table_csv(const struct SpdeRateTable *table);

// Writes the CSV to `path`.
//
// # Safety
// `table` must be null or a live handle; `path` must be null or a
// NUL-terminated string.
enum SpdeStatus spde_table_write_csv(const struct SpdeRateTable *table, const char *path);

// # Safety
// `table` must be null or a handle from [`spde_study_run`] not yet freed.
void spde_table_free(struct SpdeRateTable *table);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPDE_H */
