#ifndef BMR_GRAMIANS_HPP
#define BMR_GRAMIANS_HPP

#include <vector>

#include "bmr/linalg.hpp"
#include "bmr/system.hpp"
#include "bmr/types.hpp"

namespace bmr {

struct FixedPointOptions {
    double tol = 1e-9;  // relative change between successive iterates
    int max_iter = 200;
};

struct FixedPointStats {
    int iterations = 0;
    double rel_change = 0.0;
    double residual = 0.0;  // Frobenius norm of the equation residual
    bool converged = false;
};

/// Solve the generalized Lyapunov equation by fixed-point iteration over
/// standard Lyapunov solves, reusing one Schur decomposition of A.
///   adjoint=false:  A P + P A^*  + sum_k N_k P N_k^*  + F F^* = 0
///   adjoint=true:   A^* Q + Q A  + sum_k N_k^* Q N_k  + F F^* = 0
/// F is a tall factor of the constant term (B, or C^H on the adjoint side).
/// Throws NoConvergence / UnstableIterate when the iteration fails, which
/// happens exactly when the bilinear perturbation is not a contraction.
Mat solve_generalized_lyapunov(const SchurForm& schur,
                               const std::vector<SparseLowRank>& ns,
                               const Mat& f, bool adjoint,
                               const FixedPointOptions& opts = {},
                               FixedPointStats* stats = nullptr);

/// Dense-side variant used for reduced models (the N_k are small and dense).
Mat solve_generalized_lyapunov_dense(const SchurForm& schur,
                                     const std::vector<Mat>& ns,
                                     const Mat& f, bool adjoint,
                                     const FixedPointOptions& opts = {},
                                     FixedPointStats* stats = nullptr);

/// Mixed-size generalized Sylvester equation coupling a large system with a
/// small dense one (X is n x d):
///   adjoint=false:  A X + X Ah^* + sum_k N_k X Nh_k^*  + W = 0
///   adjoint=true:   A^* X + X Ah + sum_k N_k^* X Nh_k  + W = 0
Mat solve_generalized_sylvester(const SchurForm& schur_big,
                                const std::vector<SparseLowRank>& ns,
                                const SchurForm& schur_small,
                                const std::vector<Mat>& nhs, const Mat& w,
                                bool adjoint, const FixedPointOptions& opts = {},
                                FixedPointStats* stats = nullptr);

struct GramianPair {
    Mat p;  // reachability
    Mat q;  // observability
    FixedPointStats p_stats, q_stats;
};

GramianPair compute_gramians(const BilinearSystem& sys, const SchurForm& schur,
                             const FixedPointOptions& opts = {});

/// H2 norm via the reachability Gramian: sqrt(tr(C P C^*)). The constant
/// feedthrough D is excluded; it cancels in model-error differences.
double h2_norm(const BilinearSystem& sys, const Mat& p);
/// Dual formula sqrt(tr(B^* Q B)); equals h2_norm in exact arithmetic.
double h2_norm_dual(const BilinearSystem& sys, const Mat& q);

struct H2ErrorReport {
    double full_sq = 0.0;     // tr(C P C^*)
    double cross = 0.0;       // Re tr(C X Chat^*)
    double reduced_sq = 0.0;  // tr(Chat Phat Chat^*)
    double error_sq = 0.0;    // full_sq - 2 cross + reduced_sq (raw)
    // Smallest squared error the computation can resolve: the three traces
    // are each accurate to about tol * full_sq, so differences below that
    // level are cancellation noise. abs_error is clamped from below at
    // sqrt(resolution_sq); error_sq keeps the raw (possibly negative) value.
    double resolution_sq = 0.0;
    double abs_error = 0.0;   // sqrt(max(error_sq, resolution_sq, 0))
    double rel_error = 0.0;   // abs_error / sqrt(full_sq)
    FixedPointStats x_stats, phat_stats;
};

/// H2 error between the full system and a dense reduced model
/// (ahat, nhat_k, bhat, chat), using a precomputed Schur form of A and the
/// full H2 norm squared tr(C P C^*).
H2ErrorReport h2_error(const BilinearSystem& full, const SchurForm& schur_full,
                       double full_h2_sq, const Mat& ahat,
                       const std::vector<Mat>& nhat, const Mat& bhat,
                       const Mat& chat, const FixedPointOptions& opts = {});

} // namespace bmr

#endif
