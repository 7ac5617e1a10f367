#ifndef CLFSTAB_H
#define CLFSTAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ClfstabStatus {
  CLFSTAB_STATUS_OK = 0,
  CLFSTAB_STATUS_NULL_POINTER = 1,
  CLFSTAB_STATUS_INVALID_STRING = 2,
  CLFSTAB_STATUS_BUFFER_TOO_SMALL = 3,
  CLFSTAB_STATUS_CONFIG = 4,
  /**
   * Argument outside the domain of the operation: wrong dimension,
   * non-finite value, control outside the cone, malformed extended control.
   */
  CLFSTAB_STATUS_DOMAIN = 5,
  CLFSTAB_STATUS_PRECONDITION = 6,
  CLFSTAB_STATUS_CERTIFICATION = 7,
  CLFSTAB_STATUS_IO = 8,
  CLFSTAB_STATUS_PANIC = 9,
} ClfstabStatus;

/**
 * How a simulation ended.
 */
typedef enum ClfstabRunStatus {
  CLFSTAB_RUN_STATUS_HORIZON_END = 0,
  CLFSTAB_RUN_STATUS_TARGET_REACHED = 1,
  CLFSTAB_RUN_STATUS_BLOW_UP = 2,
} ClfstabRunStatus;

/**
 * A control-polynomial system.
 */
typedef struct ClfstabSystem ClfstabSystem;

/**
 * A recorded sample-and-hold trajectory.
 */
typedef struct ClfstabTrajectory ClfstabTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *clfstab_last_error(void);

/**
 * Looks up a system by catalog name, e.g. `"cubic-damped"`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum ClfstabStatus clfstab_system_from_catalog(const char *name, struct ClfstabSystem **out);

/**
 * Builds the system of a JSON run configuration (only `system` is used).
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out` must be writable.
 */
enum ClfstabStatus clfstab_system_from_config(const char *config_json, struct ClfstabSystem **out);

/**
 * # Safety
 * `sys` must come from a `clfstab_system_*` constructor or be null.
 */
void clfstab_system_free(struct ClfstabSystem *sys);

/**
 * State dimension `n`, control dimension `m` and control degree `d`.
 *
 * # Safety
 * `sys` must be a live handle; the output pointers must be writable.
 */
enum ClfstabStatus clfstab_system_dims(const struct ClfstabSystem *sys,
                                       size_t *n,
                                       size_t *m,
                                       uint32_t *d);

/**
 * Distance from `x` to the target.
 *
 * # Safety
 * `sys` must be a live handle; `x` must hold `x_len` values; `out` writable.
 */
enum ClfstabStatus clfstab_system_distance(const struct ClfstabSystem *sys,
                                           const double *x,
                                           size_t x_len,
                                           double *out);

/**
 * `f(x, u)`, written to `out[0..n]`.
 *
 * # Safety
 * `sys` must be a live handle; `x`, `u` and `out` must hold the given counts.
 */
enum ClfstabStatus clfstab_eval_dynamics(const struct ClfstabSystem *sys,
                                         const double *x,
                                         size_t x_len,
                                         const double *u,
                                         size_t u_len,
                                         double *out,
                                         size_t out_len);

/**
 * Rescaled dynamics `f(x, u) / (1 + nu(|u|))`, written to `out[0..n]`.
 *
 * # Safety
 * As for [`clfstab_eval_dynamics`].
 */
enum ClfstabStatus clfstab_rescaled_dynamics(const struct ClfstabSystem *sys,
                                             const double *x,
                                             size_t x_len,
                                             const double *u,
                                             size_t u_len,
                                             double *out,
                                             size_t out_len);

/**
 * Extended dynamics `F(x, w0, w)` with `w0 + |w| = 1`, written to `out[0..n]`.
 *
 * # Safety
 * As for [`clfstab_eval_dynamics`], with `w` holding `w_len` values.
 */
enum ClfstabStatus clfstab_extended_dynamics(const struct ClfstabSystem *sys,
                                             const double *x,
                                             size_t x_len,
                                             double w0,
                                             const double *w,
                                             size_t w_len,
                                             double *out,
                                             size_t out_len);

/**
 * Maps an original control `u` to the simplex point `(w0, w)`.
 *
 * # Safety
 * `u` holds `u_len` values, `w` has room for `w_len >= u_len`; `w0` writable.
 */
enum ClfstabStatus clfstab_control_to_extended(const struct ClfstabSystem *sys,
                                               const double *u,
                                               size_t u_len,
                                               double *w0,
                                               double *w,
                                               size_t w_len);

/**
 * Maps a simplex point with `w0 > 0` back to the original control.
 *
 * # Safety
 * `w` holds `w_len` values, `u` has room for `u_len >= w_len`.
 */
enum ClfstabStatus clfstab_extended_to_control(const struct ClfstabSystem *sys,
                                               double w0,
                                               const double *w,
                                               size_t w_len,
                                               double *u,
                                               size_t u_len);

/**
 * Runs the `simulate` block of a JSON run configuration.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out` must be writable.
 */
enum ClfstabStatus clfstab_simulate(const char *config_json, struct ClfstabTrajectory **out);

/**
 * # Safety
 * `traj` must come from [`clfstab_simulate`] or be null.
 */
void clfstab_trajectory_free(struct ClfstabTrajectory *traj);

/**
 * Number of recorded samples and the state dimension.
 *
 * # Safety
 * `traj` must be a live handle; the output pointers must be writable.
 */
enum ClfstabStatus clfstab_trajectory_shape(const struct ClfstabTrajectory *traj,
                                            size_t *samples,
                                            size_t *state_dim);

/**
 * Sample times, one per sample.
 *
 * # Safety
 * `traj` must be a live handle; `out` has room for `out_len` values.
 */
enum ClfstabStatus clfstab_trajectory_times(const struct ClfstabTrajectory *traj,
                                            double *out,
                                            size_t out_len);

/**
 * Distances to the target, one per sample.
 *
 * # Safety
 * As for [`clfstab_trajectory_times`].
 */
enum ClfstabStatus clfstab_trajectory_distances(const struct ClfstabTrajectory *traj,
                                                double *out,
                                                size_t out_len);

/**
 * States in row-major order (`samples * state_dim` values).
 *
 * # Safety
 * As for [`clfstab_trajectory_times`].
 */
enum ClfstabStatus clfstab_trajectory_states(const struct ClfstabTrajectory *traj,
                                             double *out,
                                             size_t out_len);

/**
 * Termination kind and, for `TargetReached` and `BlowUp`, its time (the
 * final time otherwise).
 *
 * # Safety
 * `traj` must be a live handle; the output pointers must be writable.
 */
enum ClfstabStatus clfstab_trajectory_status(const struct ClfstabTrajectory *traj,
                                             enum ClfstabRunStatus *status,
                                             double *time);

/**
 * The trajectory CSV as a NUL-terminated string. `needed` receives the
 * buffer size including the terminator; with a too small (or null) buffer
 * only `needed` is written.
 *
 * # Safety
 * `traj` must be a live handle; `buf` has room for `buf_len` bytes.
 */
enum ClfstabStatus clfstab_trajectory_csv(const struct ClfstabTrajectory *traj,
                                          char *buf,
                                          size_t buf_len,
                                          size_t *needed);

/**
 * Runs the command-line front end with `argv[0..argc]` (including the
 * program name) and returns its exit code.
 *
 * # Safety
 * `argv` must hold `argc` NUL-terminated strings.
 */
int clfstab_run(int argc, const char *const *argv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLFSTAB_H */
