#ifndef QFRIDGE_H
#define QFRIDGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
enum QfStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  QF_STATUS_OK = 0,
  QF_STATUS_NULL_POINTER = 1,
  QF_STATUS_INVALID_SPEC = 2,
  QF_STATUS_SOLVER = 3,
  QF_STATUS_INVALID_ARGUMENT = 4,
  QF_STATUS_BUFFER_TOO_SMALL = 5,
  QF_STATUS_PANIC = 6,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum QfStatus QfStatus;
#else
typedef int32_t QfStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum QfSolver
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  QF_SOLVER_AUTO = 0,
  QF_SOLVER_SPECTRAL = 1,
  QF_SOLVER_INTEGRATOR = 2,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum QfSolver QfSolver;
#else
typedef int32_t QfSolver;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * A validated machine.
 */
typedef struct QfMachine QfMachine;

/**
 * A machine started from its product thermal state.
 */
typedef struct QfTrajectory QfTrajectory;

/**
 * Machine parameters; energies and temperatures in units of `E_C`.
 */
typedef struct QfMachineParams {
  double e_c;
  double e_h;
  double t_c;
  double t_r;
  double t_h;
  double p_c;
  double p_r;
  double p_h;
  double g;
} QfMachineParams;

typedef struct QfClassification {
  double lambda_max;
  /**
   * 0 when the spectrum is entirely real; the `lambda_cp` fields are then NaN.
   */
  int32_t has_complex_pair;
  double lambda_cp_re;
  double lambda_cp_im;
  double decay_rate;
  double damping_rate;
  double oscillation_angular_frequency;
  uint32_t complex_pairs;
} QfClassification;

/**
 * Observables at one time. Temperatures of population-inverted qubits are
 * negative, and exactly `1/2` ground population gives `+inf`.
 */
typedef struct QfRecord {
  double t_c;
  double t_r;
  double t_h;
  double distance;
  double w_r_ch;
  double w_genuine;
  double populations[8];
  double im_rho36;
} QfRecord;

typedef struct QfMinimum {
  double time;
  double temperature;
  double ground_population;
} QfMinimum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Validates `params` and stores a new machine in `*out`.
 *
 * # Safety
 * `params` must point to a valid struct and `out` to writable storage.
 */
QfStatus qf_machine_new(const struct QfMachineParams *params, struct QfMachine **out_machine);

/**
 * Releases a machine. Null is ignored.
 *
 * # Safety
 * `machine` must come from [`qf_machine_new`] and not be used afterwards.
 */
void qf_machine_free(struct QfMachine *machine);

/**
 * Virtual-qubit temperature; `*cools` is 1 when it lies in `[0, T_C)`.
 *
 * # Safety
 * Pointers must be valid; `cools` may be null.
 */
QfStatus qf_virtual_temperature(const struct QfMachine *machine, double *value, int32_t *cools);

/**
 * Closed-form witness maximum: bipartite `R|CH` when `genuine` is 0,
 * genuine tripartite otherwise.
 *
 * # Safety
 * Pointers must be valid.
 */
QfStatus qf_max_entanglement(const struct QfMachine *machine, int32_t genuine, double *value);

/**
 * Cold-qubit temperature after a complete dissipation-free swap, and the
 * time `pi/2g` at which it happens.
 *
 * # Safety
 * Pointers must be valid.
 */
QfStatus qf_min_unitary_temperature(const struct QfMachine *machine,
                                    double *temperature,
                                    double *time);

/**
 * Prepares the evolution from the product thermal state. `solver` is one
 * of the [`QfSolver`] values.
 *
 * # Safety
 * `machine` must be valid and `out_trajectory` writable.
 */
QfStatus qf_trajectory_new(const struct QfMachine *machine,
                           int32_t solver,
                           struct QfTrajectory **out_trajectory);

/**
 * Releases a trajectory. Null is ignored.
 *
 * # Safety
 * `trajectory` must come from [`qf_trajectory_new`] and not be used afterwards.
 */
void qf_trajectory_free(struct QfTrajectory *trajectory);

/**
 * The solver actually in use (`Spectral` or `Integrator`).
 *
 * # Safety
 * Pointers must be valid.
 */
QfStatus qf_trajectory_solver(const struct QfTrajectory *trajectory, QfSolver *solver);

/**
 * Writes the 9 eigenvalues of the reduced generator, slowest first.
 *
 * # Safety
 * `re` and `im` must each have room for `len` doubles.
 */
QfStatus qf_trajectory_eigenvalues(const struct QfTrajectory *trajectory,
                                   double *re,
                                   double *im,
                                   size_t len);

/**
 * # Safety
 * Pointers must be valid.
 */
QfStatus qf_trajectory_classify(const struct QfTrajectory *trajectory,
                                struct QfClassification *result);

/**
 * Observables at each of `times` (non-decreasing) into `records`.
 *
 * # Safety
 * `times` must hold `n` doubles and `records` room for `n` records.
 */
QfStatus qf_trajectory_sample(const struct QfTrajectory *trajectory,
                              const double *times,
                              size_t n,
                              struct QfRecord *records);

/**
 * Observables of the steady state. Fails with `QF_STATUS_INVALID_ARGUMENT`
 * when every bath coupling is zero.
 *
 * # Safety
 * Pointers must be valid.
 */
QfStatus qf_trajectory_steady_record(const struct QfTrajectory *trajectory,
                                     struct QfRecord *result);

/**
 * Lowest cold-qubit temperature on `[0, t_max]`.
 *
 * # Safety
 * Pointers must be valid.
 */
QfStatus qf_find_min_temperature(const struct QfTrajectory *trajectory,
                                 double t_max,
                                 struct QfMinimum *result);

/**
 * Copies the calling thread's last error message, NUL-terminated, into
 * `buffer`. Returns the size needed including the terminator; nothing is
 * written when `capacity` is smaller than that.
 *
 * # Safety
 * `buffer` must have room for `capacity` bytes, or be null with `capacity` 0.
 */
size_t qf_last_error_message(char *buffer, size_t capacity);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qf_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QFRIDGE_H */
