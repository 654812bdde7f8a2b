#ifndef TRANSLEAK_H
#define TRANSLEAK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TlStatus {
  TL_STATUS_OK = 0,
  TL_STATUS_NULL_POINTER = 1,
  TL_STATUS_INVALID_ARGUMENT = 2,
  TL_STATUS_CONFIG = 3,
  TL_STATUS_NUMERICAL = 4,
  TL_STATUS_DIVERGED = 5,
  TL_STATUS_BUFFER_TOO_SMALL = 6,
  TL_STATUS_IO = 7,
  TL_STATUS_PANIC = 99,
} TlStatus;

typedef enum TlMethod {
  TL_METHOD_VON_NEUMANN = 0,
  TL_METHOD_LINDBLAD = 1,
  TL_METHOD_REDFIELD = 2,
  TL_METHOD_SLED = 3,
  TL_METHOD_SLN = 4,
} TlMethod;

typedef enum TlPulse {
  TL_PULSE_SIMPLE_NOT = 0,
  TL_PULSE_DRAG = 1,
} TlPulse;

// Bath parameters.
typedef struct TlBath TlBath;

// Saved states of one run.
typedef struct TlTrajectory TlTrajectory;

// Truncated transmon.
typedef struct TlTransmon TlTransmon;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message of this thread into `buf` (nul-terminated,
// truncated to `len`). Returns the full message length without the nul;
// 0 when there is no error.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t tl_last_error_message(char *buf, size_t len);

// Library version as a static nul-terminated string.
const char *tl_version(void);

// Build a transmon with `n_levels` levels at `E_J/E_C = ej_over_ec` and offset charge `n_g`.
//
// # Safety
// `out` must be a valid pointer; the handle is released with [`tl_transmon_free`].
enum TlStatus tl_transmon_new(double ej_over_ec,
                              size_t n_levels,
                              double n_g,
                              struct TlTransmon **out);

// # Safety
// `t` must be null or a handle from [`tl_transmon_new`] not yet freed.
void tl_transmon_free(struct TlTransmon *t);

// # Safety
// `t` must be a live handle and `out` valid.
enum TlStatus tl_transmon_n_levels(const struct TlTransmon *t, size_t *out);

// Eigenfrequencies in units of `omega_01` into `out[0..n_levels]`.
//
// # Safety
// `t` must be a live handle and `out` must hold `len` doubles.
enum TlStatus tl_transmon_frequencies(const struct TlTransmon *t, double *out, size_t len);

// # Safety
// `t` must be a live handle and `out` valid.
enum TlStatus tl_transmon_anharmonicity(const struct TlTransmon *t, double *out);

// Thermal population outside the qubit subspace at inverse temperature `beta`.
//
// # Safety
// `t` must be a live handle and `out` valid.
enum TlStatus tl_gibbs_leakage(const struct TlTransmon *t, double beta, double *out);

// Ohmic bath with Drude-type cutoff; all quantities in units of `omega_01`.
//
// # Safety
// `out` must be valid; release with [`tl_bath_free`].
enum TlStatus tl_bath_new(double kappa, double beta, double cutoff, struct TlBath **out);

// # Safety
// `b` must be null or a handle from [`tl_bath_new`] not yet freed.
void tl_bath_free(struct TlBath *b);

// Bath correlation function `C(t)`.
//
// # Safety
// `b` must be a live handle, `re` and `im` valid.
enum TlStatus tl_bath_correlation(const struct TlBath *b, double t, double *re, double *im);

// Undriven evolution from the energy eigenstate `initial_level`.
//
// # Safety
// `t` and `b` must be live handles and `out` valid; release the result with
// [`tl_trajectory_free`].
enum TlStatus tl_evolve(const struct TlTransmon *t,
                        const struct TlBath *b,
                        enum TlMethod method,
                        size_t initial_level,
                        double t_final,
                        double dt,
                        size_t n_trajectories,
                        uint64_t master_seed,
                        size_t save_every,
                        struct TlTrajectory **out);

// # Safety
// `tr` must be null or a handle from [`tl_evolve`] not yet freed.
void tl_trajectory_free(struct TlTrajectory *tr);

// Number of saved time points.
//
// # Safety
// `tr` must be a live handle and `out` valid.
enum TlStatus tl_trajectory_len(const struct TlTrajectory *tr, size_t *out);

// # Safety
// `tr` must be a live handle and `out` must hold `len` doubles.
enum TlStatus tl_trajectory_times(const struct TlTrajectory *tr, double *out, size_t len);

// Population of `level` at every saved time.
//
// # Safety
// `tr` must be a live handle and `out` must hold `len` doubles.
enum TlStatus tl_trajectory_population(const struct TlTrajectory *tr,
                                       size_t level,
                                       double *out,
                                       size_t len);

// Standard error of the population of `level`; zeros for deterministic methods.
//
// # Safety
// `tr` must be a live handle and `out` must hold `len` doubles.
enum TlStatus tl_trajectory_population_stderr(const struct TlTrajectory *tr,
                                              size_t level,
                                              double *out,
                                              size_t len);

// Largest leakage along the trajectory and the time it occurs.
//
// # Safety
// `tr` must be a live handle, `l_max` and `t_max` valid.
enum TlStatus tl_trajectory_max_leakage(const struct TlTrajectory *tr,
                                        double *l_max,
                                        double *t_max);

// Average fidelity and leakage of a resonant NOT pulse of amplitude `omega`
// and gate time `t_g` (simple pulses use ramps of `t_g / 20`).
//
// # Safety
// `t` and `b` must be live handles, `fidelity` and `leakage` valid.
enum TlStatus tl_not_gate(const struct TlTransmon *t,
                          const struct TlBath *b,
                          enum TlMethod method,
                          enum TlPulse pulse,
                          double omega,
                          double t_g,
                          double dt,
                          double *fidelity,
                          double *leakage);

// Run a scenario file. `out_dir` may be null to use the scenario's own
// setting. `passed` (may be null) receives 1 or 0 for experiments with a
// tolerance verdict and -1 otherwise.
//
// # Safety
// `path` must be a nul-terminated string, `out_dir` null or nul-terminated.
enum TlStatus tl_run_scenario(const char *path, const char *out_dir, int32_t *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRANSLEAK_H */
