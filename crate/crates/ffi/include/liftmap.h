#ifndef LIFTMAP_H
#define LIFTMAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Set an orbit partition lives on.
typedef enum LmDomain {
  LM_DOMAIN_VARS = 0,
  LM_DOMAIN_EDGES = 1,
  LM_DOMAIN_ARCS = 2,
  LM_DOMAIN_FACTOR_ASSIGNMENTS = 3,
  LM_DOMAIN_FEATURES = 4,
} LmDomain;

typedef enum LmMapStatus {
  LM_MAP_STATUS_OPTIMAL = 0,
  LM_MAP_STATUS_CONVERGED = 1,
  LM_MAP_STATUS_CAP = 2,
  LM_MAP_STATUS_STALLED = 3,
} LmMapStatus;

typedef enum LmMethod {
  LM_METHOD_SEARCH = 0,
  LM_METHOD_RENAMING = 1,
  LM_METHOD_NONE = 2,
} LmMethod;

typedef enum LmPolytope {
  LM_POLYTOPE_LOCAL = 0,
  LM_POLYTOPE_CYCLE = 1,
} LmPolytope;

typedef enum LmSpace {
  LM_SPACE_GROUND = 0,
  LM_SPACE_LIFTED = 1,
} LmSpace;

// Result code of every fallible call.
typedef enum LmStatus {
  LM_STATUS_OK = 0,
  LM_STATUS_NULL_ARGUMENT = 1,
  LM_STATUS_INVALID_UTF8 = 2,
  LM_STATUS_PARSE_ERROR = 3,
  LM_STATUS_INVALID_ARGUMENT = 4,
  LM_STATUS_SOLVE_ERROR = 5,
  LM_STATUS_LIMIT_EXCEEDED = 6,
  LM_STATUS_INTERNAL = 7,
  LM_STATUS_PANIC = 8,
} LmStatus;

typedef struct LmMapResult LmMapResult;

// A ground model, possibly grounded from an MLN.
typedef struct LmModel LmModel;

// Orbit partitions of a model under one symmetry method.
typedef struct LmOrbits LmOrbits;

typedef struct LmMapOptions {
  enum LmSpace space;
  enum LmPolytope polytope;
  enum LmMethod method;
  double alpha;
  double tol;
  size_t max_cuts;
  size_t max_rounds;
} LmMapOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *lm_last_error(void);

// Library version as a static string.
const char *lm_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void lm_string_free(char *s);

// Parses FGM text.
//
// # Safety
// `text` must be a nul-terminated string; `out` must be valid for writes.
enum LmStatus lm_model_from_fgm(const char *text, struct LmModel **out);

// Parses and grounds an MLN over `domain_size` constants. `evidence` may be
// null.
//
// # Safety
// `mln` and a non-null `evidence` must be nul-terminated strings; `out` must
// be valid for writes.
enum LmStatus lm_model_from_mln(const char *mln,
                                const char *evidence,
                                size_t domain_size,
                                struct LmModel **out);

// # Safety
// `model` must be null or a handle from `lm_model_from_*` not yet freed.
void lm_model_free(struct LmModel *model);

// Number of ground variables, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t lm_model_num_vars(const struct LmModel *model);

// Number of ground features, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t lm_model_num_features(const struct LmModel *model);

// The ground model as FGM text.
//
// # Safety
// `model` must be a live handle; `out` must be valid for writes.
enum LmStatus lm_model_to_fgm(const struct LmModel *model, char **out);

// Orbit partitions under `method`; generator checks use `seed`.
//
// # Safety
// `model` must be a live handle; `out` must be valid for writes.
enum LmStatus lm_orbits_compute(const struct LmModel *model,
                                enum LmMethod method,
                                uint64_t seed,
                                struct LmOrbits **out);

// # Safety
// `orbits` must be null or a handle from `lm_orbits_compute` not yet freed.
void lm_orbits_free(struct LmOrbits *orbits);

// Number of cells in the partition of `domain`, or 0 for a null handle.
//
// # Safety
// `orbits` must be null or a live handle.
size_t lm_orbits_num_cells(const struct LmOrbits *orbits, enum LmDomain domain);

// Writes the cell of `element` in the partition of `domain` to `out`.
//
// # Safety
// `orbits` must be a live handle; `out` must be valid for writes.
enum LmStatus lm_orbits_cell_of(const struct LmOrbits *orbits,
                                enum LmDomain domain,
                                size_t element,
                                size_t *out);

// The orbit report as JSON.
//
// # Safety
// `orbits` must be a live handle; `out` must be valid for writes.
enum LmStatus lm_orbits_to_json(const struct LmOrbits *orbits, char **out);

// Default options: ground space, local polytope, search method,
// alpha 0.99, tolerance 1e-6, 1000 cuts and rounds.
struct LmMapOptions lm_map_options_default(void);

// Solves the MAP relaxation. A null `options` means the defaults.
//
// # Safety
// `model` must be a live handle; `options` must be null or valid for reads;
// `out` must be valid for writes.
enum LmStatus lm_map_solve(const struct LmModel *model,
                           const struct LmMapOptions *options,
                           struct LmMapResult **out);

// # Safety
// `result` must be null or a handle from `lm_map_solve` not yet freed.
void lm_map_result_free(struct LmMapResult *result);

// Final LP objective, or NaN for a null handle.
//
// # Safety
// `result` must be null or a live handle.
double lm_map_result_objective(const struct LmMapResult *result);

// Outcome of the cutting-plane loop.
//
// # Safety
// `result` must be a live handle.
enum LmStatus lm_map_result_status(const struct LmMapResult *result, enum LmMapStatus *out);

// Copies the decoded configuration (one byte per variable, 0 or 1) into
// `buf`, which must hold `lm_model_num_vars` bytes.
//
// # Safety
// `result` must be a live handle; `buf` must be valid for `len` writes.
enum LmStatus lm_map_result_assignment(const struct LmMapResult *result, uint8_t *buf, size_t len);

// The full MAP report as JSON.
//
// # Safety
// `result` must be a live handle; `out` must be valid for writes.
enum LmStatus lm_map_result_to_json(const struct LmMapResult *result, char **out);

// Exact MAP, log-partition and marginals by enumeration, as JSON. A `limit`
// of 0 means the default of 20 variables.
//
// # Safety
// `model` must be a live handle; `out` must be valid for writes.
enum LmStatus lm_exact_json(const struct LmModel *model, size_t limit, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIFTMAP_H */
