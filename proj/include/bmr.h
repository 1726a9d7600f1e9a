/* C interface for the bilinear model-order-reduction toolkit.
 *
 * All functions return a status code (BMR_OK == 0 on success); on failure
 * bmr_last_error() gives a thread-local description of the most recent
 * error. Objects are opaque handles released with the matching _free call.
 * Complex vectors and matrices cross the boundary as interleaved doubles
 * (re, im, re, im, ...), column-major for matrices.
 */
#ifndef BMR_H
#define BMR_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bmr_status {
    BMR_OK = 0,
    BMR_ERR_NON_HURWITZ = 1,
    BMR_ERR_SINGULAR_OPERATOR = 2,
    BMR_ERR_SPECTRA_OVERLAP = 3,
    BMR_ERR_TOO_LARGE = 4,
    BMR_ERR_INDEFINITE = 5,
    BMR_ERR_NO_CONVERGENCE = 6,
    BMR_ERR_BAD_DIMENSION = 7,
    BMR_ERR_NOT_PURELY_BILINEAR = 8,
    BMR_ERR_ROW_SUM_VIOLATION = 9,
    BMR_ERR_NO_NULL_VECTOR = 10,
    BMR_ERR_NON_SIMPLE_NULL = 11,
    BMR_ERR_NOT_STABILIZING = 12,
    BMR_ERR_RANK_DEFICIENT_GRAMIAN = 13,
    BMR_ERR_SINGULAR_FAST_BLOCK = 14,
    BMR_ERR_ILL_CONDITIONED_PROJECTOR = 15,
    BMR_ERR_UNSTABLE_ITERATE = 16,
    BMR_ERR_CONFIG_INVALID = 17,
    BMR_ERR_IO = 18,
    BMR_ERR_GRID_MISMATCH = 19,
    BMR_ERR_STEP_SIZE_UNDERFLOW = 20,
    BMR_ERR_UNKNOWN = 100
} bmr_status;

const char* bmr_last_error(void);

typedef struct bmr_system bmr_system;
typedef struct bmr_factorization bmr_factorization;
typedef struct bmr_balanced bmr_balanced;
typedef struct bmr_reduced bmr_reduced;
typedef struct bmr_trajectory bmr_trajectory;

/* ---- benchmark construction ------------------------------------------- */

/* Drift-diffusion benchmark; config_path NULL selects the defaults. */
int bmr_fpe_build(const char* config_path, bmr_system** out);
/* Open-quantum-system benchmark; config_path NULL selects the bundled
 * double-well defaults. */
int bmr_lvne_build(const char* config_path, bmr_system** out);
/* Write the bundled default quantum config (energies, dipole, classes). */
int bmr_lvne_write_default_config(const char* path);

/* ---- systems ----------------------------------------------------------- */

int bmr_system_load(const char* dir, bmr_system** out);
int bmr_system_save(const bmr_system* sys, const char* dir);
void bmr_system_free(bmr_system* sys);

int bmr_system_dim(const bmr_system* sys, long* n);
int bmr_system_num_inputs(const bmr_system* sys, long* m);
int bmr_system_num_outputs(const bmr_system* sys, long* l);

/* Null vector of A (simple zero eigenvalue expected). xe must hold 2n
 * doubles. probability != 0 normalizes the entry sum to one. */
int bmr_system_stationary(const bmr_system* sys, int probability, double* xe,
                          double* residual);

int bmr_system_shift_standard(const bmr_system* sys, const double* xe,
                              bmr_system** out);
int bmr_system_project_null(const bmr_system* sys, const double* xe,
                            bmr_system** out);
int bmr_system_discount(const bmr_system* sys, double alpha, bmr_system** out);
int bmr_system_scale_controls(const bmr_system* sys, double eta,
                              bmr_system** out);

/* Exponential-envelope stability certificate. cert must hold 10 doubles:
 * [abscissa, lambda_cert, mu_cert, contraction_cert, lambda_spec, mu_spec,
 *  contraction_spec, fixed_point_contraction, bound_ratio, bound_product]. */
int bmr_system_check_stability(const bmr_system* sys, double* cert, int* passed);

/* k smallest-magnitude eigenvalues (discount shift added back, projected
 * zero restored). values must hold 2k doubles. */
int bmr_system_spectrum(const bmr_system* sys, long k, double* values,
                        int* zero_prepended);

/* ---- Schur factorization and Gramians --------------------------------- */

int bmr_factorization_create(const bmr_system* sys, bmr_factorization** out);
void bmr_factorization_free(bmr_factorization* f);
/* Solve the two generalized Lyapunov equations; results are cached in f. */
int bmr_factorization_gramians(bmr_factorization* f, double tol, int max_iter);
int bmr_factorization_h2_norm(const bmr_factorization* f, double* h2,
                              double* h2_dual);

/* ---- balancing and reduction ------------------------------------------ */

int bmr_balance(bmr_factorization* f, bmr_balanced** out);
void bmr_balanced_free(bmr_balanced* bal);
int bmr_balanced_rank(const bmr_balanced* bal, long* r);
int bmr_balanced_hsv(const bmr_balanced* bal, double* sigma); /* r doubles */
int bmr_balanced_suggest_order(const bmr_balanced* bal, double tail_energy,
                               long* d);
int bmr_reduce_bt(const bmr_balanced* bal, long d, bmr_reduced** out);
int bmr_reduce_sp(const bmr_balanced* bal, long d, bmr_reduced** out);
/* report: [max_re_slow, max_re_fast, max_re_schur, hsv_gap] */
int bmr_verify_stability(const bmr_balanced* bal, long d, double* report,
                         int* cluster_warning, int* passed);

int bmr_reduced_load(const char* dir, bmr_reduced** out);
int bmr_reduced_save(const bmr_reduced* red, const char* dir);
void bmr_reduced_free(bmr_reduced* red);
int bmr_reduced_order(const bmr_reduced* red, long* d);
/* method is copied into buf (nul-terminated), at most buflen bytes. */
int bmr_reduced_method(const bmr_reduced* red, char* buf, size_t buflen);
int bmr_reduced_spectrum(const bmr_reduced* red, long k, double* values,
                         int* zero_prepended);

/* ---- H2-optimal reduction --------------------------------------------- */

/* Fixed-point H2 iteration. init may be NULL, in which case a seeded random
 * orthonormal start of order d is used; otherwise init's order wins.
 * wilson must hold 4 doubles (relative optimality-condition residuals). */
int bmr_birka(bmr_factorization* f, const bmr_reduced* init, long d,
              unsigned seed, double tol, int max_iter, bmr_reduced** out,
              double* wilson, int* converged, int* iterations);

int bmr_wilson_residuals(bmr_factorization* f, const bmr_reduced* red,
                         double* wilson);

/* H2 error between the factorization's system and a reduced model; the
 * full Gramian must have been computed. */
int bmr_h2_error(bmr_factorization* f, const bmr_reduced* red,
                 double* abs_error, double* rel_error);

/* ---- simulation -------------------------------------------------------- */

/* Integrate under a Gaussian pulse amp * exp(-(t-center)^2/(2 sigma^2))
 * (sigma from the FWHM width) on control channel `channel`; amp 0 gives the
 * uncontrolled flow. x0 holds 2n doubles; NULL means the zero state. */
int bmr_simulate_system(const bmr_system* sys, const double* x0, double t_begin,
                        double t_end, long samples, long channel, double amp,
                        double center, double width, double rel_tol,
                        double abs_tol, bmr_trajectory** out);
int bmr_simulate_reduced(const bmr_reduced* red, const double* x0,
                         double t_begin, double t_end, long samples,
                         long channel, double amp, double center, double width,
                         double rel_tol, double abs_tol, bmr_trajectory** out);
void bmr_trajectory_free(bmr_trajectory* tr);
int bmr_trajectory_sizes(const bmr_trajectory* tr, long* nt, long* m, long* l);
/* t: nt doubles; u: m*nt doubles; y: 2*l*nt doubles (complex interleaved,
 * column-major with nt columns). Any pointer may be NULL to skip. */
int bmr_trajectory_data(const bmr_trajectory* tr, double* t, double* u,
                        double* y);
/* max_rel: max output deviation normalized by the max of the first
 * trajectory's outputs. max_dev may be NULL or hold l doubles. */
int bmr_trajectory_compare(const bmr_trajectory* full, const bmr_trajectory* red,
                           double* max_rel, double* max_dev);

#ifdef __cplusplus
}
#endif

#endif /* BMR_H */
