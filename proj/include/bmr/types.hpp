#ifndef BMR_TYPES_HPP
#define BMR_TYPES_HPP

#include <complex>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace bmr {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<Complex>;
using Index = Eigen::Index;

/// Sparse matrix plus an optional low-rank correction u * v^H.
/// The sparsity-preserving stabilization produces matrices of exactly this
/// shape (sparse original blocks minus a rank-one column-times-ones update),
/// and keeping the correction factored avoids densifying large operators.
struct SparseLowRank {
    SpMat core;
    Mat u; // n x r
    Mat v; // n x r

    SparseLowRank() = default;
    explicit SparseLowRank(SpMat c) : core(std::move(c)) {}
    SparseLowRank(SpMat c, Mat lu, Mat lv)
        : core(std::move(c)), u(std::move(lu)), v(std::move(lv)) {}

    Index rows() const { return core.rows(); }
    Index cols() const { return core.cols(); }
    bool has_low_rank() const { return u.size() > 0; }

    Vec apply(const Vec& x) const {
        Vec y = core * x;
        if (has_low_rank()) y.noalias() += u * (v.adjoint() * x);
        return y;
    }
    Vec apply_adjoint(const Vec& x) const {
        Vec y = core.adjoint() * x;
        if (has_low_rank()) y.noalias() += v * (u.adjoint() * x);
        return y;
    }
    Mat apply(const Mat& x) const {
        Mat y = core * x;
        if (has_low_rank()) y.noalias() += u * (v.adjoint() * x);
        return y;
    }
    Mat apply_adjoint(const Mat& x) const {
        Mat y = core.adjoint() * x;
        if (has_low_rank()) y.noalias() += v * (u.adjoint() * x);
        return y;
    }
    /// y += op(this) * x for dense x (op = N or adjoint)
    Mat dense() const {
        Mat d = Mat(core);
        if (has_low_rank()) d.noalias() += u * v.adjoint();
        return d;
    }
    double norm_estimate() const; // spectral norm via power iteration

    static SparseLowRank from_dense(const Mat& d, double drop_tol = 0.0);
};

} // namespace bmr

#endif
