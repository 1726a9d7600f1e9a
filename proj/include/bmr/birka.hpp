#ifndef BMR_BIRKA_HPP
#define BMR_BIRKA_HPP

#include <vector>

#include "bmr/balancing.hpp"
#include "bmr/gramians.hpp"
#include "bmr/system.hpp"

namespace bmr {

/// Relative norms of the four blocks of the first-order H2 optimality
/// conditions, evaluated from the error-system Gramian partitions:
///   Y^*AX + Qh^* Ah Ph,  Y^*N_kX + Qh^* Nh_k Ph (max over k),
///   Y^*B + Qh^* Bh,      CX - Ch Ph.
/// Each block norm is divided by the sum of the norms of its two terms.
struct WilsonResiduals {
    double r_a = 0.0;
    double r_n = 0.0;
    double r_b = 0.0;
    double r_c = 0.0;

    double max() const { return std::max(std::max(r_a, r_n), std::max(r_b, r_c)); }
};

struct BirkaOptions {
    double tol = 1e-6;   // max relative change of the sorted reduced spectrum
    // Fallback convergence test: accept when the final Wilson residual is
    // below this, even if the spectrum metric never settled.
    double wilson_tol = 1e-8;
    int max_iter = 100;
    FixedPointOptions lyap;  // inner generalized-equation solves
};

struct BirkaState {
    ReducedModel model;
    Mat v, w;  // n x d, orthonormal columns
    int iteration = 0;
    std::vector<double> history;  // spectrum-change metric per step
};

struct BirkaResult {
    ReducedModel model;
    WilsonResiduals wilson;
    std::vector<double> history;
    int iterations = 0;
    bool converged = false;
};

/// Petrov-Galerkin projection (W^*V)^{-1} W^* {A, N_k, B} V, C V.
ReducedModel project_model(const BilinearSystem& sys, const Mat& v, const Mat& w);

/// Random orthonormal starting model (seeded); redraws until Hurwitz.
ReducedModel random_initial_model(const BilinearSystem& sys, Index d,
                                  unsigned seed);

/// One fixed-point step: solve the two generalized Sylvester equations for
/// X and Y, orthonormalize, project. Retries with subspace damping (blend
/// factor 0.5, up to 5 times) if the new reduced matrix leaves the open
/// left half-plane.
BirkaState birka_step(const BilinearSystem& sys, const SchurForm& schur,
                      const BirkaState& state, const BirkaOptions& opts = {});

/// Full iteration from a caller-supplied initial model (typically the BT
/// model of the same order). On stagnation past max_iter the last iterate is
/// returned with converged=false rather than throwing.
BirkaResult birka_iterate(const BilinearSystem& sys, const SchurForm& schur,
                          const ReducedModel& init, const BirkaOptions& opts = {});

WilsonResiduals wilson_residuals(const BilinearSystem& sys,
                                 const SchurForm& schur, const ReducedModel& red,
                                 const FixedPointOptions& opts = {});

} // namespace bmr

#endif
