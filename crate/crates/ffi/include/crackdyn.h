#ifndef CRACKDYN_H
#define CRACKDYN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CdStatus {
  CD_STATUS_OK = 0,
  CD_STATUS_NULL_POINTER = 1,
  CD_STATUS_INVALID_UTF8 = 2,
  /**
   * Rejected configuration or violated precondition.
   */
  CD_STATUS_CONFIG = 3,
  /**
   * A linear or fixed-point solve did not converge.
   */
  CD_STATUS_SOLVER = 4,
  /**
   * A tensor, ordering or invariant check failed.
   */
  CD_STATUS_INVARIANT = 5,
  /**
   * Index or argument out of range.
   */
  CD_STATUS_ARGUMENT = 6,
  CD_STATUS_PANIC = 7,
} CdStatus;

/**
 * A certified scenario together with the time step of its document.
 */
typedef struct CdScenario CdScenario;

typedef struct CdTrajectory CdTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cd_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next crackdyn call on the same thread.
 */
const char *cd_last_error(void);

/**
 * Parses a scenario document, builds and certifies the scenario.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CdStatus cd_scenario_from_config(const char *text, struct CdScenario **out);

/**
 * # Safety
 * `sc` must come from [`cd_scenario_from_config`] and not be used again.
 */
void cd_scenario_free(struct CdScenario *sc);

/**
 * Time step and horizon of the scenario.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CdStatus cd_scenario_time(const struct CdScenario *sc, double *dt, double *t_end);

/**
 * Coercivity constant and Korn constant of the fully cracked space.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CdStatus cd_scenario_constants(const struct CdScenario *sc, double *alpha0, double *korn);

/**
 * Monolithic viscoelastic solve with time step `dt` (`dt <= 0` uses the
 * document's step).
 *
 * # Safety
 * Pointers must be valid.
 */
enum CdStatus cd_solve_monolithic(const struct CdScenario *sc,
                                  double dt,
                                  struct CdTrajectory **out);

/**
 * Picard solve with relative tolerance `tol` (`tol <= 0` keeps the
 * default). `iterations` receives the total Picard iteration count.
 *
 * # Safety
 * Pointers must be valid; `iterations` may be NULL.
 */
enum CdStatus cd_solve_fixedpoint(const struct CdScenario *sc,
                                  double dt,
                                  double tol,
                                  struct CdTrajectory **out,
                                  size_t *iterations);

/**
 * # Safety
 * `traj` must come from a solve call and not be used again.
 */
void cd_trajectory_free(struct CdTrajectory *traj);

/**
 * Number of time nodes, or 0 for NULL.
 *
 * # Safety
 * `traj` must be NULL or valid.
 */
size_t cd_trajectory_len(const struct CdTrajectory *traj);

/**
 * Time and the norms `‖u‖`, `‖Du‖`, `‖u̇‖` at node `k`, written to
 * `out[0..4]`.
 *
 * # Safety
 * `out` must hold at least 4 doubles.
 */
enum CdStatus cd_trajectory_node(const struct CdTrajectory *traj, size_t k, double *out);

/**
 * Discrete `𝒲` distance between two trajectories on the same grid.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CdStatus cd_trajectory_distance(const struct CdTrajectory *a,
                                     const struct CdTrajectory *b,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRACKDYN_H */
