#ifndef GEOLIFT_H
#define GEOLIFT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of the C interface.
typedef enum GeoliftStatus {
  GEOLIFT_STATUS_OK = 0,
  GEOLIFT_STATUS_NULL_POINTER = 1,
  GEOLIFT_STATUS_INVALID_ARGUMENT = 2,
  GEOLIFT_STATUS_CONFIG_ERROR = 3,
  // The geodesic left the chart domain before time 1.
  GEOLIFT_STATUS_LEFT_DOMAIN = 4,
  // The lift (or connection search) cannot be continued in the domain.
  GEOLIFT_STATUS_INEXTENSIBLE = 5,
  GEOLIFT_STATUS_BUDGET_EXHAUSTED = 6,
  // The solver finished without a result, e.g. a stalled polish.
  GEOLIFT_STATUS_FAILED = 7,
  GEOLIFT_STATUS_PANIC = 8,
} GeoliftStatus;

// Opaque manifold handle.
typedef struct GeoliftManifold GeoliftManifold;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a manifold config given as TOML text.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum GeoliftStatus geolift_manifold_from_toml(const char *toml, struct GeoliftManifold **out);

// Loads one of the shipped configs by name (`"sphere"`, `"torus"`, ...).
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum GeoliftStatus geolift_manifold_builtin(const char *name, struct GeoliftManifold **out);

// Releases a manifold handle. Null is ignored.
//
// # Safety
// `m` must come from this library and not be used afterwards.
void geolift_manifold_free(struct GeoliftManifold *m);

// Chart dimension, or 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t geolift_manifold_dim(const struct GeoliftManifold *m);

// `E_p(v)` into `out` (`dim` doubles).
//
// # Safety
// `p`, `v` and `out` must point to `dim` doubles.
enum GeoliftStatus geolift_exp_map(const struct GeoliftManifold *m,
                                   const double *p,
                                   const double *v,
                                   size_t dim,
                                   double tol,
                                   double *out);

// `dE_v` as a row-major `dim × dim` matrix, plus its smallest singular
// value when `sigma_min` is not null.
//
// # Safety
// `p` and `v` must point to `dim` doubles, `matrix` to `dim * dim`.
enum GeoliftStatus geolift_d_exp(const struct GeoliftManifold *m,
                                 const double *p,
                                 const double *v,
                                 size_t dim,
                                 double tol,
                                 double *matrix,
                                 double *sigma_min);

// Quasi-lifts a polyline. The request is JSON
// `{"path": [[..], ..], "p": [..]?, "v0": [..]?, "options": {..}?}`;
// the result is the lift document, also on inextensible or budget stops.
//
// # Safety
// `request` must be a NUL-terminated string, `result` a valid pointer.
enum GeoliftStatus geolift_lift_json(const struct GeoliftManifold *m,
                                     const char *request,
                                     char **result);

// Geodesic from `p` to `q` by lifting the polyline `p, via.., q`. The
// request is JSON `{"p": [..], "q": [..], "via": [[..]]?, "options": {..}?}`.
// On success the result is the solution document; on a failed lift it
// holds the error and the lift status.
//
// # Safety
// `request` must be a NUL-terminated string, `result` a valid pointer.
enum GeoliftStatus geolift_connect_json(const struct GeoliftManifold *m,
                                        const char *request,
                                        char **result);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void geolift_string_free(char *s);

// Message for the last non-OK status on this thread, or an empty string.
// The pointer stays valid until the next call into this library on the
// same thread.
const char *geolift_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEOLIFT_H */
