#ifndef NONLINQ_H
#define NONLINQ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  NQ_STATUS_OK = 0,
  NQ_STATUS_NULL_POINTER = 1,
  NQ_STATUS_INVALID_INPUT = 2,
  NQ_STATUS_CONFIG = 3,
  NQ_STATUS_DATA = 4,
  NQ_STATUS_NUMERICAL = 5,
  NQ_STATUS_PANIC = 6,
} NqStatus;

typedef enum {
  NQ_INITIAL_STATE_PLUS_X = 0,
  NQ_INITIAL_STATE_PLUS_Y = 1,
} NqInitialState;

typedef enum {
  NQ_REGIME_UNBROKEN = 0,
  NQ_REGIME_BROKEN = 1,
  NQ_REGIME_EXCEPTIONAL_POINT = 2,
} NqRegime;

/**
 * Result of a quantum-jump ensemble run.
 */
typedef struct NqEnsemble NqEnsemble;

/**
 * System parameters (rates in 1/μs, couplings in rad/μs).
 */
typedef struct NqSystem NqSystem;

typedef struct {
  int32_t regime;
  double eigenvalue_re[2];
  double eigenvalue_im[2];
  double eigenvector_overlap;
  double j_ep;
} NqRegimeReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length in bytes,
 * excluding the terminator. Pass a null `buf` to query the length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t nq_last_error_message(char *buf, size_t len);

/**
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
NqStatus nq_system_new(double gamma_e,
                       double gamma_f,
                       double coupling,
                       double delta,
                       NqSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from [`nq_system_new`] not yet freed.
 */
void nq_system_free(NqSystem *sys);

/**
 * # Safety
 * `sys` must be a live handle.
 */
NqStatus nq_system_set_coupling(NqSystem *sys, double coupling);

/**
 * Eigenvalues of H_eff and the PT regime.
 *
 * # Safety
 * `sys` must be a live handle and `out` writable.
 */
NqStatus nq_classify_regime(const NqSystem *sys, NqRegimeReport *out);

/**
 * First passage time from |e⟩ to |f⟩ under postselected evolution.
 * `found` is set to 0 when no transfer peak occurs before `horizon`.
 *
 * # Safety
 * `sys` must be a live handle; `fpt` and `found` writable.
 */
NqStatus nq_first_passage_time(const NqSystem *sys,
                               double horizon,
                               double dt,
                               double *fpt,
                               int32_t *found);

/**
 * Normalized no-jump state at time `t` for the 2-level input
 * `(re[0] + i im[0], re[1] + i im[1])` in the (e, f) basis.
 *
 * # Safety
 * Input arrays must hold 2 values; output arrays must be writable for 2.
 */
NqStatus nq_propagate(const NqSystem *sys,
                      const double *psi_re,
                      const double *psi_im,
                      double t,
                      double *out_re,
                      double *out_im,
                      double *survival);

/**
 * Populations (g, e, f) at time `t` of the full master equation started in |e⟩.
 * `dt <= 0` selects the default step.
 *
 * # Safety
 * `sys` must be a live handle; `out` writable for 3 values.
 */
NqStatus nq_lindblad_populations(const NqSystem *sys, double t, double dt, double *out);

/**
 * OFS at each of the `n` ascending `times` for the ideal (noise-free) model.
 *
 * # Safety
 * `times` must hold `n` values and `out` be writable for `n`.
 */
NqStatus nq_linearity_scan(const NqSystem *sys,
                           NqInitialState initial,
                           const double *times,
                           size_t n,
                           double *out);

/**
 * Iterative Bayesian unfolding of observed (g, e, f) frequencies.
 * `beta` is a row-major 3×3 confusion matrix, or null for the device model.
 *
 * # Safety
 * `observed` holds 3 values, `beta` is null or holds 9, `out` is writable for 3.
 */
NqStatus nq_ibu_correct(const double *observed, const double *beta, size_t iterations, double *out);

/**
 * Bloch vector of the postselected (e, f) state from corrected
 * (g, +a, −a) probabilities for the X, Y and Z settings.
 *
 * # Safety
 * Each input holds 3 values; `out` is writable for 3.
 */
NqStatus nq_reconstruct_bloch(const double *px, const double *py, const double *pz, double *out);

/**
 * Samples `n` quantum-jump trajectories from |e⟩, recorded on `times`.
 *
 * # Safety
 * `sys` must be a live handle, `times` hold `n_times` values and `out` be writable.
 */
NqStatus nq_ensemble_sample(const NqSystem *sys,
                            const double *times,
                            size_t n_times,
                            double dt,
                            uint64_t seed,
                            size_t n,
                            NqEnsemble **out);

/**
 * # Safety
 * `ens` must be null or a handle from [`nq_ensemble_sample`] not yet freed.
 */
void nq_ensemble_free(NqEnsemble *ens);

/**
 * Fraction of trajectories with no decay to |g⟩ up to time index `k`.
 *
 * # Safety
 * `ens` must be a live handle and `out` writable.
 */
NqStatus nq_ensemble_success_fraction(const NqEnsemble *ens, size_t k, double *out);

/**
 * Mean Bloch vector of the postselected trajectories at time index `k`,
 * with standard errors. Fails with `Numerical` when none survive.
 *
 * # Safety
 * `ens` must be a live handle; `mean` and `sigma` writable for 3 values.
 */
NqStatus nq_ensemble_conditioned_bloch(const NqEnsemble *ens,
                                       size_t k,
                                       double *mean,
                                       double *sigma);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NONLINQ_H */
