#include "bmr/gramians.hpp"

#include <cmath>
#include <functional>

namespace bmr {

namespace {

/// Iterate X_{j+1} = lin(w0 + bilin(X_j)) to a fixed point. `lin` maps a
/// constant term W to the solution of the standard (Lyapunov/Sylvester)
/// equation with that constant term; `bilin` applies the quadratic coupling.
Mat fixed_point(const Mat& w0, const std::function<Mat(const Mat&)>& bilin,
                const std::function<Mat(const Mat&)>& lin, bool has_bilin,
                const FixedPointOptions& opts, FixedPointStats* stats) {
    FixedPointStats local;
    Mat x = lin(w0);
    if (!has_bilin) {
        local.converged = true;
        local.iterations = 1;
        if (stats) *stats = local;
        return x;
    }
    const double x0n = std::max(x.norm(), 1e-300);
    Mat delta;
    for (int it = 1; it <= opts.max_iter; ++it) {
        Mat w = w0 + bilin(x);
        Mat xn = lin(w);
        delta = xn - x;
        const double xnn = xn.norm();
        if (!std::isfinite(xnn) || xnn > 1e12 * (x0n + 1.0))
            throw Error(ErrorCode::UnstableIterate,
                        "Gramian fixed-point iteration diverges; the bilinear "
                        "term is not a contraction for this system");
        local.iterations = it;
        local.rel_change = delta.norm() / std::max(xnn, 1e-300);
        x.swap(xn);
        if (local.rel_change <= opts.tol) {
            local.converged = true;
            break;
        }
    }
    // The iterate solves the standard equation with the previous coupling
    // term exactly, so the generalized residual is bilin(last increment).
    local.residual = bilin(delta).norm();
    if (stats) *stats = local;
    if (!local.converged)
        throw Error(ErrorCode::NoConvergence,
                    "Gramian fixed-point iteration: relative change " +
                        std::to_string(local.rel_change) + " after " +
                        std::to_string(opts.max_iter) + " iterations");
    return x;
}

bool all_zero(const std::vector<Mat>& ns) {
    for (const auto& n : ns)
        if (n.norm() > 0.0) return false;
    return true;
}

} // namespace

Mat solve_generalized_lyapunov(const SchurForm& schur,
                               const std::vector<SparseLowRank>& ns,
                               const Mat& f, bool adjoint,
                               const FixedPointOptions& opts,
                               FixedPointStats* stats) {
    if (f.rows() != schur.n())
        throw Error(ErrorCode::BadDimension, "constant-term factor mismatch");
    if (schur.spectral_abscissa() >= 0.0)
        throw Error(ErrorCode::NonHurwitz, "A is not Hurwitz");
    Mat w0 = f * f.adjoint();
    auto bilin = [&](const Mat& p) {
        Mat out = Mat::Zero(p.rows(), p.cols());
        for (const auto& nk : ns) {
            if (!adjoint) {
                Mat t = nk.apply(p);
                Mat ta = t.adjoint();
                out += nk.apply(ta).adjoint();
            } else {
                Mat t = nk.apply_adjoint(p);
                Mat ta = t.adjoint();
                out += nk.apply_adjoint(ta).adjoint();
            }
        }
        return out;
    };
    auto lin = [&](const Mat& w) {
        return adjoint ? solve_lyapunov_schur_adjoint(schur, w)
                       : solve_lyapunov_schur(schur, w);
    };
    return fixed_point(w0, bilin, lin, !ns.empty(), opts, stats);
}

Mat solve_generalized_lyapunov_dense(const SchurForm& schur,
                                     const std::vector<Mat>& ns, const Mat& f,
                                     bool adjoint, const FixedPointOptions& opts,
                                     FixedPointStats* stats) {
    if (f.rows() != schur.n())
        throw Error(ErrorCode::BadDimension, "constant-term factor mismatch");
    if (schur.spectral_abscissa() >= 0.0)
        throw Error(ErrorCode::NonHurwitz, "A is not Hurwitz");
    Mat w0 = f * f.adjoint();
    auto bilin = [&](const Mat& p) {
        Mat out = Mat::Zero(p.rows(), p.cols());
        for (const auto& n : ns)
            out += adjoint ? Mat(n.adjoint() * p * n) : Mat(n * p * n.adjoint());
        return out;
    };
    auto lin = [&](const Mat& w) {
        return adjoint ? solve_lyapunov_schur_adjoint(schur, w)
                       : solve_lyapunov_schur(schur, w);
    };
    return fixed_point(w0, bilin, lin, !all_zero(ns), opts, stats);
}

Mat solve_generalized_sylvester(const SchurForm& schur_big,
                                const std::vector<SparseLowRank>& ns,
                                const SchurForm& schur_small,
                                const std::vector<Mat>& nhs, const Mat& w,
                                bool adjoint, const FixedPointOptions& opts,
                                FixedPointStats* stats) {
    if (w.rows() != schur_big.n() || w.cols() != schur_small.n())
        throw Error(ErrorCode::BadDimension, "Sylvester constant-term mismatch");
    if (ns.size() != nhs.size())
        throw Error(ErrorCode::BadDimension, "input-channel count mismatch");
    if (schur_big.spectral_abscissa() >= 0.0 ||
        schur_small.spectral_abscissa() >= 0.0)
        throw Error(ErrorCode::NonHurwitz, "both factors must be Hurwitz");
    auto bilin = [&](const Mat& x) {
        Mat out = Mat::Zero(x.rows(), x.cols());
        for (size_t k = 0; k < ns.size(); ++k) {
            if (!adjoint)
                out.noalias() += ns[k].apply(x) * nhs[k].adjoint();
            else
                out.noalias() += ns[k].apply_adjoint(x) * nhs[k];
        }
        return out;
    };
    auto lin = [&](const Mat& rhs) {
        Mat c = -(schur_big.u.adjoint() * rhs * schur_small.u);
        Mat y = solve_triangular_sylvester(schur_big.t, adjoint, schur_small.t,
                                           !adjoint, std::move(c));
        return Mat(schur_big.u * y * schur_small.u.adjoint());
    };
    return fixed_point(w, bilin, lin, !ns.empty(), opts, stats);
}

GramianPair compute_gramians(const BilinearSystem& sys, const SchurForm& schur,
                             const FixedPointOptions& opts) {
    if (sys.B.size() == 0 || sys.C.size() == 0)
        throw Error(ErrorCode::ConfigInvalid,
                    "Gramians need both input and output maps; shift a purely "
                    "bilinear system to standard form first");
    GramianPair g;
    g.p = solve_generalized_lyapunov(schur, sys.N, sys.B, false, opts,
                                     &g.p_stats);
    g.q = solve_generalized_lyapunov(schur, sys.N, sys.C.adjoint(), true, opts,
                                     &g.q_stats);
    return g;
}

double h2_norm(const BilinearSystem& sys, const Mat& p) {
    Mat t = sys.C * p;
    double v = (t.array() * sys.C.array().conjugate()).sum().real();
    return std::sqrt(std::max(v, 0.0));
}

double h2_norm_dual(const BilinearSystem& sys, const Mat& q) {
    Mat t = q * sys.B;
    double v = (sys.B.array().conjugate() * t.array()).sum().real();
    return std::sqrt(std::max(v, 0.0));
}

H2ErrorReport h2_error(const BilinearSystem& full, const SchurForm& schur_full,
                       double full_h2_sq, const Mat& ahat,
                       const std::vector<Mat>& nhat, const Mat& bhat,
                       const Mat& chat, const FixedPointOptions& opts) {
    H2ErrorReport rep;
    rep.full_sq = full_h2_sq;
    SchurForm sh = SchurForm::compute(ahat);
    if (sh.spectral_abscissa() >= 0.0)
        throw Error(ErrorCode::NonHurwitz, "reduced model is not Hurwitz");

    Mat w = full.B * bhat.adjoint();
    Mat x = solve_generalized_sylvester(schur_full, full.N, sh, nhat, w, false,
                                        opts, &rep.x_stats);
    Mat cx = full.C * x;
    rep.cross = (cx.array() * chat.array().conjugate()).sum().real();

    Mat phat = solve_generalized_lyapunov_dense(sh, nhat, bhat, false, opts,
                                                &rep.phat_stats);
    Mat cp = chat * phat;
    rep.reduced_sq = (cp.array() * chat.array().conjugate()).sum().real();

    rep.error_sq = rep.full_sq - 2.0 * rep.cross + rep.reduced_sq;
    rep.resolution_sq = opts.tol * rep.full_sq;
    rep.abs_error =
        std::sqrt(std::max({rep.error_sq, rep.resolution_sq, 0.0}));
    rep.rel_error = rep.abs_error / std::sqrt(std::max(rep.full_sq, 1e-300));
    return rep;
}

} // namespace bmr
