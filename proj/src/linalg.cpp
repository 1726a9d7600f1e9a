#include "bmr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <lapacke.h>

namespace bmr {

namespace {

lapack_complex_double* lp(Mat& m) {
    return reinterpret_cast<lapack_complex_double*>(m.data());
}
const lapack_complex_double* lp(const Mat& m) {
    return reinterpret_cast<const lapack_complex_double*>(m.data());
}

void require(bool cond, ErrorCode code, const std::string& msg) {
    if (!cond) throw Error(code, msg);
}

} // namespace

double SparseLowRank::norm_estimate() const {
    if (rows() == 0) return 0.0;
    std::mt19937 rng(12345);
    std::normal_distribution<double> dist;
    Vec x(cols());
    for (Index i = 0; i < x.size(); ++i) x[i] = Complex(dist(rng), dist(rng));
    x /= x.norm();
    double norm = 0.0;
    for (int it = 0; it < 30; ++it) {
        Vec y = apply_adjoint(apply(x));
        double ny = y.norm();
        if (ny == 0.0) return 0.0;
        double next = std::sqrt(ny);
        x = y / ny;
        if (it > 3 && std::abs(next - norm) <= 1e-6 * next) return next;
        norm = next;
    }
    return norm;
}

SparseLowRank SparseLowRank::from_dense(const Mat& d, double drop_tol) {
    const double cutoff = drop_tol * d.cwiseAbs().maxCoeff();
    std::vector<Eigen::Triplet<Complex>> trips;
    for (Index j = 0; j < d.cols(); ++j)
        for (Index i = 0; i < d.rows(); ++i)
            if (std::abs(d(i, j)) > cutoff) trips.emplace_back(i, j, d(i, j));
    SpMat s(d.rows(), d.cols());
    s.setFromTriplets(trips.begin(), trips.end());
    return SparseLowRank(std::move(s));
}

SchurForm SchurForm::compute(const Mat& a) {
    require(a.rows() == a.cols(), ErrorCode::BadDimension,
            "Schur form requires a square matrix");
    const lapack_int n = static_cast<lapack_int>(a.rows());
    SchurForm f;
    f.t = a;
    f.u.resize(n, n);
    Vec w(n);
    lapack_int sdim = 0;
    lapack_int info = LAPACKE_zgees(
        LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, lp(f.t), n, &sdim,
        reinterpret_cast<lapack_complex_double*>(w.data()), lp(f.u), n);
    require(info == 0, ErrorCode::NoConvergence, "zgees failed to converge");
    return f;
}

double SchurForm::spectral_abscissa() const {
    double a = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n(); ++i) a = std::max(a, t(i, i).real());
    return a;
}

double SchurForm::reconstruction_error(const Mat& a) const {
    return (u * t * u.adjoint() - a).norm();
}

namespace {

constexpr Index kTrsylBase = 96;

/// op(TA) X + X op(TB) = C at the recursion base via LAPACK ztrsyl.
Mat trsyl_base(const Mat& ta, bool adj_a, const Mat& tb, bool adj_b, Mat c) {
    double scale = 1.0;
    lapack_int info = LAPACKE_ztrsyl(
        LAPACK_COL_MAJOR, adj_a ? 'C' : 'N', adj_b ? 'C' : 'N', 1,
        static_cast<lapack_int>(ta.rows()), static_cast<lapack_int>(tb.rows()),
        lp(ta), std::max<lapack_int>(1, ta.rows()), lp(tb),
        std::max<lapack_int>(1, tb.rows()), lp(c),
        std::max<lapack_int>(1, c.rows()), &scale);
    require(info >= 0, ErrorCode::SingularOperator, "ztrsyl failed");
    require(scale > 1e-100, ErrorCode::SpectraOverlap,
            "Sylvester operator nearly singular (common eigenvalues)");
    c /= scale;
    return c;
}

Mat tri_sylv(const Mat& ta, bool adj_a, const Mat& tb, bool adj_b, Mat c) {
    const Index p = ta.rows();
    const Index q = tb.rows();
    if (p <= kTrsylBase && q <= kTrsylBase)
        return trsyl_base(ta, adj_a, tb, adj_b, std::move(c));

    Mat x(p, q);
    if (p >= q) {
        const Index h = p / 2;
        auto a11 = ta.topLeftCorner(h, h);
        auto a12 = ta.topRightCorner(h, p - h);
        auto a22 = ta.bottomRightCorner(p - h, p - h);
        if (!adj_a) {
            // op(TA) upper: bottom row block decouples first.
            Mat x2 = tri_sylv(a22, adj_a, tb, adj_b, c.bottomRows(p - h));
            Mat c1 = c.topRows(h);
            c1.noalias() -= a12 * x2;
            Mat x1 = tri_sylv(a11, adj_a, tb, adj_b, std::move(c1));
            x.topRows(h) = x1;
            x.bottomRows(p - h) = x2;
        } else {
            // op(TA) lower: top row block first.
            Mat x1 = tri_sylv(a11, adj_a, tb, adj_b, c.topRows(h));
            Mat c2 = c.bottomRows(p - h);
            c2.noalias() -= a12.adjoint() * x1;
            Mat x2 = tri_sylv(a22, adj_a, tb, adj_b, std::move(c2));
            x.topRows(h) = x1;
            x.bottomRows(p - h) = x2;
        }
    } else {
        const Index h = q / 2;
        auto b11 = tb.topLeftCorner(h, h);
        auto b12 = tb.topRightCorner(h, q - h);
        auto b22 = tb.bottomRightCorner(q - h, q - h);
        if (!adj_b) {
            // X * op(TB) with op(TB) upper: left column block first.
            Mat x1 = tri_sylv(ta, adj_a, b11, adj_b, c.leftCols(h));
            Mat c2 = c.rightCols(q - h);
            c2.noalias() -= x1 * b12;
            Mat x2 = tri_sylv(ta, adj_a, b22, adj_b, std::move(c2));
            x.leftCols(h) = x1;
            x.rightCols(q - h) = x2;
        } else {
            // op(TB) lower: right column block first.
            Mat x2 = tri_sylv(ta, adj_a, b22, adj_b, c.rightCols(q - h));
            Mat c1 = c.leftCols(h);
            c1.noalias() -= x2 * b12.adjoint();
            Mat x1 = tri_sylv(ta, adj_a, b11, adj_b, std::move(c1));
            x.leftCols(h) = x1;
            x.rightCols(q - h) = x2;
        }
    }
    return x;
}

void require_hurwitz(const SchurForm& schur, const char* who) {
    if (schur.spectral_abscissa() >= 0.0)
        throw Error(ErrorCode::NonHurwitz,
                    std::string(who) + ": matrix has an eigenvalue with Re >= 0");
}

void require_lyap_regular(const SchurForm& schur) {
    const Vec ev = schur.eigenvalues();
    double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (Index i = 0; i < ev.size(); ++i)
        for (Index j = 0; j < ev.size(); ++j)
            if (std::abs(ev[i] + std::conj(ev[j])) < 1e-14 * scale)
                throw Error(ErrorCode::SingularOperator,
                            "Lyapunov operator singular: lambda_i + conj(lambda_j) ~ 0");
}

} // namespace

Mat solve_triangular_sylvester(const Mat& ta, bool adj_a, const Mat& tb,
                               bool adj_b, Mat c) {
    return tri_sylv(ta, adj_a, tb, adj_b, std::move(c));
}

Mat solve_lyapunov_schur(const SchurForm& schur, const Mat& w) {
    // A X + X A^* = -W with A = U T U^*:  T Y + Y T^* = -U^* W U, X = U Y U^*.
    Mat rhs = -(schur.u.adjoint() * w * schur.u);
    Mat y = tri_sylv(schur.t, false, schur.t, true, std::move(rhs));
    Mat x = schur.u * y * schur.u.adjoint();
    return 0.5 * (x + x.adjoint());
}

Mat solve_lyapunov_schur_adjoint(const SchurForm& schur, const Mat& w) {
    Mat rhs = -(schur.u.adjoint() * w * schur.u);
    Mat y = tri_sylv(schur.t, true, schur.t, false, std::move(rhs));
    Mat x = schur.u * y * schur.u.adjoint();
    return 0.5 * (x + x.adjoint());
}

Mat solve_lyapunov_dense(const Mat& a, const Mat& w, double tol) {
    require(a.rows() == w.rows() && w.rows() == w.cols(),
            ErrorCode::BadDimension, "solve_lyapunov_dense: dimension mismatch");
    SchurForm schur = SchurForm::compute(a);
    require_hurwitz(schur, "solve_lyapunov_dense");
    require_lyap_regular(schur);
    Mat x = solve_lyapunov_schur(schur, w);
    const double res = (a * x + x * a.adjoint() + w).norm();
    const double scale = a.norm() * x.norm() + w.norm();
    require(res <= std::max(tol, 1e3 * tol) * std::max(scale, 1.0),
            ErrorCode::NoConvergence, "Lyapunov residual above tolerance");
    return x;
}

Mat solve_sylvester_dense(const Mat& a, const Mat& h, const Mat& w,
                          double tol) {
    require(a.rows() == w.rows() && h.rows() == w.cols(),
            ErrorCode::BadDimension, "solve_sylvester_dense: dimension mismatch");
    SchurForm sa = SchurForm::compute(a);
    SchurForm sh = SchurForm::compute(h);
    // Spectra of A and -H^* must be disjoint.
    const Vec ea = sa.eigenvalues();
    const Vec eh = sh.eigenvalues();
    double scale = std::max({1.0, ea.cwiseAbs().maxCoeff(), eh.cwiseAbs().maxCoeff()});
    for (Index i = 0; i < ea.size(); ++i)
        for (Index j = 0; j < eh.size(); ++j)
            require(std::abs(ea[i] + std::conj(eh[j])) > 1e-13 * scale,
                    ErrorCode::SpectraOverlap,
                    "spectra of A and -H^* overlap");
    // A X + X H^* = -W  ->  Ta Y + Y Th^* = -Ua^* W Uh.
    Mat rhs = -(sa.u.adjoint() * w * sh.u);
    Mat y = tri_sylv(sa.t, false, sh.t, true, std::move(rhs));
    Mat x = sa.u * y * sh.u.adjoint();
    const double res = (a * x + x * h.adjoint() + w).norm();
    const double nscale = std::max(1.0, a.norm() * x.norm() + w.norm());
    require(res <= 1e3 * tol * nscale, ErrorCode::NoConvergence,
            "Sylvester residual above tolerance");
    return x;
}

Mat kron_oracle_generalized_lyapunov(const Mat& a, const std::vector<Mat>& ns,
                                     const Mat& w) {
    const Index n = a.rows();
    require(n <= 64, ErrorCode::TooLarge, "kron oracle limited to n <= 64");
    const Index nn = n * n;
    Mat id = Mat::Identity(n, n);
    // vec(A P + P A^* + sum N_k P N_k^*) = (I (x) A + conj(A) (x) I
    //   + sum conj(N_k) (x) N_k) vec(P)
    Mat op = Mat::Zero(nn, nn);
    auto add_kron = [&](const Mat& left, const Mat& right) {
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j)
                if (left(i, j) != Complex(0.0))
                    op.block(i * n, j * n, n, n) += left(i, j) * right;
    };
    add_kron(id, a);
    add_kron(a.conjugate(), id);
    for (const Mat& nk : ns) add_kron(nk.conjugate(), nk);
    Vec rhs(nn);
    for (Index j = 0; j < n; ++j) rhs.segment(j * n, n) = -w.col(j);
    Eigen::FullPivLU<Mat> lu(op);
    require(lu.isInvertible(), ErrorCode::SingularOperator,
            "vectorized generalized Lyapunov operator is singular");
    Vec sol = lu.solve(rhs);
    Mat p(n, n);
    for (Index j = 0; j < n; ++j) p.col(j) = sol.segment(j * n, n);
    return p;
}

Mat kron_oracle_generalized_sylvester(const Mat& a, const std::vector<Mat>& ns,
                                      const Mat& ah, const std::vector<Mat>& nhs,
                                      const Mat& w) {
    const Index n = a.rows();
    const Index d = ah.rows();
    require(n * d <= 64 * 64, ErrorCode::TooLarge,
            "kron oracle limited to n*d <= 4096");
    const Index nd = n * d;
    Mat op = Mat::Zero(nd, nd);
    auto add_kron = [&](const Mat& left, const Mat& right) {
        // vec(right * X * left^T) = (left (x) right) vec(X), X is n x d.
        for (Index i = 0; i < d; ++i)
            for (Index j = 0; j < d; ++j)
                if (left(i, j) != Complex(0.0))
                    op.block(i * n, j * n, n, n) += left(i, j) * right;
    };
    add_kron(Mat::Identity(d, d), a);
    add_kron(ah.conjugate(), Mat::Identity(n, n));
    for (size_t k = 0; k < ns.size(); ++k) add_kron(nhs[k].conjugate(), ns[k]);
    Vec rhs(nd);
    for (Index j = 0; j < d; ++j) rhs.segment(j * n, n) = -w.col(j);
    Eigen::FullPivLU<Mat> lu(op);
    require(lu.isInvertible(), ErrorCode::SingularOperator,
            "vectorized generalized Sylvester operator is singular");
    Vec sol = lu.solve(rhs);
    Mat x(n, d);
    for (Index j = 0; j < d; ++j) x.col(j) = sol.segment(j * n, n);
    return x;
}

PsdFactor cholesky_psd(const Mat& m, double tol) {
    const Index n = m.rows();
    require(n == m.cols(), ErrorCode::BadDimension, "cholesky_psd: not square");
    const double scale = std::max(m.norm(), 1e-300);
    require((m - m.adjoint()).norm() <= 1e-10 * scale, ErrorCode::BadDimension,
            "cholesky_psd: matrix not Hermitian");
    // Reject genuinely indefinite inputs before factoring.
    RealVec evs = eig_hermitian(m);
    require(evs.minCoeff() >= -100 * tol * scale, ErrorCode::Indefinite,
            "cholesky_psd: matrix has a negative eigenvalue beyond tolerance");

    Mat u = m;
    std::vector<lapack_int> piv(n);
    lapack_int rank = 0;
    lapack_int info = LAPACKE_zpstrf(LAPACK_COL_MAJOR, 'U',
                                     static_cast<lapack_int>(n), lp(u),
                                     std::max<lapack_int>(1, n), piv.data(),
                                     &rank, -1.0);
    require(info >= 0, ErrorCode::Indefinite, "zpstrf failed");
    // Zero below-diagonal garbage and the non-positive trailing block.
    for (Index j = 0; j < n; ++j)
        for (Index i = j + 1; i < n; ++i) u(i, j) = 0.0;
    for (Index i = rank; i < n; ++i) u.row(i).setZero();
    // Undo the pivoting: P^T M P = U^* U  =>  M = (U P^T)^* (U P^T).
    PsdFactor f;
    f.s = Mat::Zero(n, n);
    for (Index j = 0; j < n; ++j) f.s.col(piv[j] - 1) = u.col(j);
    f.rank = rank;
    return f;
}

Svd svd(const Mat& m) {
    const lapack_int rows = static_cast<lapack_int>(m.rows());
    const lapack_int cols = static_cast<lapack_int>(m.cols());
    const lapack_int k = std::min(rows, cols);
    Svd out;
    Mat a = m;
    out.u.resize(rows, k);
    out.v.resize(cols, k);
    out.sigma.resize(k);
    Mat vt(k, cols);
    lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'S', rows, cols, lp(a),
                                     std::max<lapack_int>(1, rows),
                                     out.sigma.data(), lp(out.u),
                                     std::max<lapack_int>(1, rows), lp(vt),
                                     std::max<lapack_int>(1, k));
    require(info == 0, ErrorCode::NoConvergence, "zgesdd failed");
    out.v = vt.adjoint();
    return out;
}

Vec eig_dense(const Mat& m) {
    Mat a = m;
    const lapack_int n = static_cast<lapack_int>(a.rows());
    Vec w(n);
    lapack_int info = LAPACKE_zgeev(
        LAPACK_COL_MAJOR, 'N', 'N', n, lp(a), std::max<lapack_int>(1, n),
        reinterpret_cast<lapack_complex_double*>(w.data()), nullptr, 1, nullptr,
        1);
    require(info == 0, ErrorCode::NoConvergence, "zgeev failed");
    return w;
}

std::pair<Vec, Mat> eig_dense_vectors(const Mat& m) {
    Mat a = m;
    const lapack_int n = static_cast<lapack_int>(a.rows());
    Vec w(n);
    Mat vr(n, n);
    lapack_int info = LAPACKE_zgeev(
        LAPACK_COL_MAJOR, 'N', 'V', n, lp(a), std::max<lapack_int>(1, n),
        reinterpret_cast<lapack_complex_double*>(w.data()), nullptr, 1, lp(vr),
        std::max<lapack_int>(1, n));
    require(info == 0, ErrorCode::NoConvergence, "zgeev failed");
    return {w, vr};
}

RealVec eig_hermitian(const Mat& m) {
    Mat a = m;
    const lapack_int n = static_cast<lapack_int>(a.rows());
    RealVec w(n);
    lapack_int info = LAPACKE_zheev(LAPACK_COL_MAJOR, 'N', 'U', n, lp(a),
                                    std::max<lapack_int>(1, n), w.data());
    require(info == 0, ErrorCode::NoConvergence, "zheev failed");
    return w;
}

double spectral_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    return svd(m).sigma[0];
}

namespace {

/// Shift-inverted operator (M - shift I)^{-1} with Woodbury handling of the
/// low-rank part of M.
class ShiftInvertOp {
public:
    ShiftInvertOp(const SparseLowRank& m, Complex shift) {
        SpMat shifted = m.core;
        SpMat id(m.rows(), m.rows());
        id.setIdentity();
        shifted = (shifted - shift * id).pruned();
        shifted.makeCompressed();
        lu_.compute(shifted);
        if (lu_.info() != Eigen::Success)
            throw Error(ErrorCode::SingularOperator,
                        "sparse LU at the shift failed; try another shift");
        if (m.has_low_rank()) {
            has_lr_ = true;
            minv_u_ = lu_.solve(Mat(m.u));
            Mat small = Mat::Identity(m.u.cols(), m.u.cols()) +
                        m.v.adjoint() * minv_u_;
            small_lu_.compute(small);
            v_ = m.v;
        }
    }

    Vec apply(const Vec& x) const {
        Vec y = lu_.solve(x);
        if (has_lr_) y -= minv_u_ * small_lu_.solve(v_.adjoint() * y);
        return y;
    }

private:
    Eigen::SparseLU<SpMat> lu_;
    bool has_lr_ = false;
    Mat minv_u_, v_;
    Eigen::PartialPivLU<Mat> small_lu_;
};

} // namespace

SparseEigResult eig_sparse_smallest(const SparseLowRank& m, int k,
                                    Complex shift, double tol, int max_iter) {
    const Index n = m.rows();
    require(k >= 1 && k <= n, ErrorCode::BadDimension,
            "eig_sparse_smallest: bad k");
    ShiftInvertOp op(m, shift);

    // Generous subspace: clustered interior eigenvalues converge very slowly
    // in small Krylov spaces and can silently stagnate at wrong values.
    const Index subspace = std::min<Index>(n, std::max<Index>(8 * k + 24, 60));
    const double norm_m = std::max(m.norm_estimate(), 1e-300);
    Mat basis(n, subspace);
    Mat hess = Mat::Zero(subspace + 1, subspace);

    std::mt19937 rng(20240901);
    std::normal_distribution<double> dist;
    Vec start(n);
    for (Index i = 0; i < n; ++i) start[i] = Complex(dist(rng), dist(rng));
    start /= start.norm();

    SparseEigResult out;
    Mat ritz_vectors;
    Vec ritz_values;
    int used = 0;
    double norm_est = 1.0;
    for (int restart = 0; used < max_iter; ++restart) {
        basis.col(0) = start;
        Index j = 0;
        for (; j < subspace && used < max_iter; ++j, ++used) {
            Vec w = op.apply(basis.col(j));
            // Modified Gram-Schmidt with one reorthogonalization pass.
            for (int pass = 0; pass < 2; ++pass) {
                for (Index i = 0; i <= j; ++i) {
                    Complex h = basis.col(i).dot(w);
                    w -= h * basis.col(i);
                    if (pass == 0) hess(i, j) = h;
                    else hess(i, j) += h;
                }
            }
            double beta = w.norm();
            hess(j + 1, j) = beta;
            norm_est = std::max(norm_est, hess.col(j).norm());
            if (beta < 1e-14 * norm_est) { ++j; break; }
            if (j + 1 < subspace) basis.col(j + 1) = w / beta;
            else start = w / beta; // residual direction seeds the restart
        }
        const Index dim = j;
        Mat h_small = hess.topLeftCorner(dim, dim);
        auto [theta, s] = eig_dense_vectors(h_small);
        // Largest |theta| of the inverted operator <-> closest to the shift.
        std::vector<Index> order(dim);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](Index a, Index b) {
            return std::abs(theta[a]) > std::abs(theta[b]);
        });
        const Index kk = std::min<Index>(k, dim);
        ritz_values.resize(kk);
        ritz_vectors.resize(n, kk);
        bool converged = true;
        for (Index i = 0; i < kk; ++i) {
            Index idx = order[i];
            ritz_values[i] = shift + 1.0 / theta[idx];
            Vec y = s.col(idx);
            ritz_vectors.col(i) = basis.leftCols(dim) * y;
            ritz_vectors.col(i) /= ritz_vectors.col(i).norm();
            // Residual of the inverted problem, scaled by |theta|.
            double res = std::abs(hess(dim, dim - 1) * y[dim - 1]);
            if (res > tol * std::abs(theta[idx]) * norm_est) converged = false;
        }
        if (converged || dim < subspace) {
            // Never trust the Krylov residual estimate alone: verify the
            // candidate pairs against the original operator.
            bool verified = dim > 0;
            for (Index i = 0; i < kk && verified; ++i) {
                Vec mv = m.apply(Vec(ritz_vectors.col(i)));
                const double res = (mv - ritz_values[i] * ritz_vectors.col(i)).norm();
                if (res > std::max(1e3 * tol, 1e-8) * norm_m) verified = false;
            }
            if (verified) {
                out.values = ritz_values;
                out.vectors = ritz_vectors;
                out.iterations = used;
                return out;
            }
        }
        if (dim < subspace) break; // breakdown: invariant subspace found
        // Restart from a combination of the wanted Ritz vectors.
        Vec comb = Vec::Zero(n);
        for (Index i = 0; i < kk; ++i) comb += ritz_vectors.col(i);
        comb += 0.01 * start;
        start = comb / comb.norm();
        hess.setZero();
    }
    throw Error(ErrorCode::NoConvergence,
                "sparse eigensolver failed to produce verified eigenpairs");
}

} // namespace bmr
