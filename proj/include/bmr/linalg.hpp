#ifndef BMR_LINALG_HPP
#define BMR_LINALG_HPP

#include <utility>
#include <vector>

#include "bmr/errors.hpp"
#include "bmr/types.hpp"

namespace bmr {

/// Default relative residual tolerance for the dense solvers.
inline constexpr double kDefaultTol = 1e-10;

/// Complex Schur decomposition A = U T U^* with U unitary and T upper
/// triangular. Backed by LAPACK zgees.
struct SchurForm {
    Mat u;
    Mat t;

    static SchurForm compute(const Mat& a);

    Index n() const { return t.rows(); }
    double spectral_abscissa() const;
    Vec eigenvalues() const { return t.diagonal(); }
    double reconstruction_error(const Mat& a) const;
};

/// Solve op(TA) X + X op(TB) = C with TA, TB upper triangular (complex Schur
/// factors); op is identity or conjugate transpose. Recursive blocking on top
/// of LAPACK ztrsyl so the bulk of the work runs as GEMM.
Mat solve_triangular_sylvester(const Mat& ta, bool adj_a, const Mat& tb,
                               bool adj_b, Mat c);

/// A X + X A^* + W = 0 for Hurwitz A and Hermitian W.
Mat solve_lyapunov_dense(const Mat& a, const Mat& w, double tol = kDefaultTol);

/// Same equation, reusing a precomputed Schur form of A.
Mat solve_lyapunov_schur(const SchurForm& schur, const Mat& w);

/// Observability-side variant A^* X + X A + W = 0 on the same Schur form.
Mat solve_lyapunov_schur_adjoint(const SchurForm& schur, const Mat& w);

/// A X + X H^* + W = 0; spectra of A and -H^* must be disjoint.
Mat solve_sylvester_dense(const Mat& a, const Mat& h, const Mat& w,
                          double tol = kDefaultTol);

/// Brute-force reference for the generalized Lyapunov equation
///   A P + P A^* + sum_k N_k P N_k^* + W = 0
/// via an n^2 x n^2 Kronecker solve. Guarded to n <= 64.
Mat kron_oracle_generalized_lyapunov(const Mat& a, const std::vector<Mat>& ns,
                                     const Mat& w);

/// Brute-force reference for the generalized Sylvester equation
///   A X + X Ah^* + sum_k N_k X Nh_k^* + W = 0  (X is n x d).
Mat kron_oracle_generalized_sylvester(const Mat& a, const std::vector<Mat>& ns,
                                      const Mat& ah, const std::vector<Mat>& nhs,
                                      const Mat& w);

/// Rank-revealing (pivoted) Cholesky of a Hermitian PSD matrix.
/// Returns S with M = S^* S; rows of S beyond `rank` are zero.
struct PsdFactor {
    Mat s;
    Index rank = 0;
};
PsdFactor cholesky_psd(const Mat& m, double tol = kDefaultTol);

struct Svd {
    Mat u;
    RealVec sigma;
    Mat v; // M = u * sigma.asDiagonal() * v.adjoint()
};
Svd svd(const Mat& m);

/// Eigenvalues of a general dense matrix (LAPACK zgeev).
Vec eig_dense(const Mat& m);
/// Eigenvalues plus right eigenvectors.
std::pair<Vec, Mat> eig_dense_vectors(const Mat& m);
/// Eigenvalues of a Hermitian matrix, ascending.
RealVec eig_hermitian(const Mat& m);

struct SparseEigResult {
    Vec values;                // k eigenvalues, sorted by |lambda - shift|
    Mat vectors;               // corresponding eigenvectors (columns)
    int iterations = 0;
};

/// k eigenvalues of smallest magnitude around `shift`, by shift-invert
/// Arnoldi with a sparse LU at the shift. Restart-capped.
SparseEigResult eig_sparse_smallest(const SparseLowRank& m, int k,
                                    Complex shift = 0.0, double tol = 1e-10,
                                    int max_iter = 2000);

double spectral_norm(const Mat& m);

} // namespace bmr

#endif
