#ifndef ACSPLIT_H
#define ACSPLIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AcsLinear {
  ACS_LINEAR_IMP = 0,
  ACS_LINEAR_EXPO = 1,
  ACS_LINEAR_EXACT = 2,
} AcsLinear;

typedef enum AcsMethod {
  ACS_METHOD_M1 = 0,
  ACS_METHOD_M1_LITERAL = 1,
  ACS_METHOD_M2 = 2,
  ACS_METHOD_M3 = 3,
  ACS_METHOD_STRANG = 4,
} AcsMethod;

/**
 * Result codes.
 */
typedef enum AcsStatus {
  ACS_STATUS_OK = 0,
  ACS_STATUS_NULL_POINTER = 1,
  ACS_STATUS_INVALID_ARGUMENT = 2,
  ACS_STATUS_MESH_MISMATCH = 3,
  ACS_STATUS_CONFIG = 4,
  ACS_STATUS_ESTIMATION = 5,
  ACS_STATUS_IO = 6,
  ACS_STATUS_PANIC = 7,
} AcsStatus;

/**
 * Opaque experiment configuration.
 */
typedef struct AcsExperiment AcsExperiment;

/**
 * Opaque discrete Dirichlet Laplacian.
 */
typedef struct AcsOperator AcsOperator;

/**
 * Summary of one simulated path.
 */
typedef struct AcsPathSummary {
  uint64_t steps;
  double sup_norm_e;
  double sup_norm_h;
  bool blown_up;
} AcsPathSummary;

/**
 * One row of a convergence table.
 */
typedef struct AcsErrorRow {
  double dt;
  double estimate;
  /**
   * Standard error of `estimate`.
   */
  double std_error;
  uint64_t n_valid;
  uint64_t n_blowup;
} AcsErrorRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *acs_version(void);

/**
 * Message of the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *acs_last_error_message(void);

/**
 * Reaction flow `phi(t, z)`.
 *
 * # Safety
 * `out` must be null or valid for a write of one `double`.
 */
enum AcsStatus acs_phi(double t, double z, double *out);

/**
 * Increment map `psi(t, z) = (phi(t, z) - z) / t`, `z - z^3` at `t = 0`.
 *
 * # Safety
 * `out` must be null or valid for a write of one `double`.
 */
enum AcsStatus acs_psi(double t, double z, double *out);

/**
 * Creates the operator on `n_interior` nodes of the unit interval.
 *
 * # Safety
 * `out` must be null or valid for a write of one pointer.
 */
enum AcsStatus acs_operator_new(size_t n_interior, struct AcsOperator **out);

/**
 * Releases an operator. Null is ignored.
 *
 * # Safety
 * `op` must be null or a pointer from [`acs_operator_new`] not yet freed.
 */
void acs_operator_free(struct AcsOperator *op);

/**
 * Number of interior nodes, 0 for a null handle.
 *
 * # Safety
 * `op` must be null or a live operator handle.
 */
size_t acs_operator_len(const struct AcsOperator *op);

/**
 * Mesh width `1/(n+1)`, 0 for a null handle.
 *
 * # Safety
 * `op` must be null or a live operator handle.
 */
double acs_operator_dx(const struct AcsOperator *op);

/**
 * Eigenvalues of `-A_h` in increasing order, `len` must equal the node count.
 *
 * # Safety
 * `op` must be a live handle and `out` valid for `len` writes.
 */
enum AcsStatus acs_operator_eigenvalues(const struct AcsOperator *op, double *out, size_t len);

/**
 * `out = A_h x`.
 *
 * # Safety
 * `op` must be a live handle; `x` valid for `len` reads and `out` for
 * `len` writes. `x` and `out` may alias.
 */
enum AcsStatus acs_operator_apply_laplacian(const struct AcsOperator *op,
                                            const double *x,
                                            double *out,
                                            size_t len);

/**
 * `out = (I - dt A_h)^{-1} x`.
 *
 * # Safety
 * As for [`acs_operator_apply_laplacian`].
 */
enum AcsStatus acs_operator_solve_resolvent(const struct AcsOperator *op,
                                            double dt,
                                            const double *x,
                                            double *out,
                                            size_t len);

/**
 * `out = exp(dt A_h) x`.
 *
 * # Safety
 * As for [`acs_operator_apply_laplacian`].
 */
enum AcsStatus acs_operator_apply_semigroup(const struct AcsOperator *op,
                                            double dt,
                                            const double *x,
                                            double *out,
                                            size_t len);

/**
 * Creates a configuration with the desk-scale defaults.
 *
 * # Safety
 * `out` must be null or valid for a write of one pointer.
 */
enum AcsStatus acs_experiment_new(struct AcsExperiment **out);

/**
 * Parses a `key = value` configuration text.
 *
 * # Safety
 * `text` must be null or a NUL-terminated string; `out` must be null or
 * valid for a write of one pointer.
 */
enum AcsStatus acs_experiment_from_config(const char *text, struct AcsExperiment **out);

/**
 * Releases a configuration. Null is ignored.
 *
 * # Safety
 * `exp` must be null or a pointer from an `acs_experiment_*` constructor
 * not yet freed.
 */
void acs_experiment_free(struct AcsExperiment *exp);

/**
 * Sets the scheme. The pair is checked when the experiment runs.
 *
 * # Safety
 * `exp` must be null or a live handle.
 */
enum AcsStatus acs_experiment_set_scheme(struct AcsExperiment *exp,
                                         enum AcsMethod method,
                                         enum AcsLinear linear);

/**
 * Sets the mesh to `n_interior` nodes.
 *
 * # Safety
 * `exp` must be null or a live handle.
 */
enum AcsStatus acs_experiment_set_mesh(struct AcsExperiment *exp, size_t n_interior);

/**
 * Sets the replica count, horizon and master seed.
 *
 * # Safety
 * `exp` must be null or a live handle.
 */
enum AcsStatus acs_experiment_set_sampling(struct AcsExperiment *exp,
                                           size_t n_replicas,
                                           double horizon,
                                           uint64_t master_seed);

/**
 * Simulates one path with step `dt` from the configured initial state and
 * writes the terminal state to `out` (`len` must equal the node count).
 *
 * # Safety
 * `exp` must be a live handle, `out` valid for `len` writes and `summary`
 * null or valid for one write.
 */
enum AcsStatus acs_simulate(const struct AcsExperiment *exp,
                            double dt,
                            uint64_t replica,
                            double *out,
                            size_t len,
                            struct AcsPathSummary *summary);

/**
 * Mean-square distance between the `dt` and `dt/2` schemes on coupled paths.
 *
 * # Safety
 * `exp` must be a live handle and `out` valid for one write.
 */
enum AcsStatus acs_strong_error(const struct AcsExperiment *exp,
                                double dt,
                                struct AcsErrorRow *out);

/**
 * Weak increment `E f(X^dt) - E f(X^{dt/2})` with the configured test function.
 *
 * # Safety
 * `exp` must be a live handle and `out` valid for one write.
 */
enum AcsStatus acs_weak_increment(const struct AcsExperiment *exp,
                                  double dt,
                                  struct AcsErrorRow *out);

/**
 * Name of a status code as a static string.
 */
const char *acs_status_name(enum AcsStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACSPLIT_H */
