#include <doctest.h>

#include <random>

#include "bmr/linalg.hpp"

using namespace bmr;

namespace {

std::mt19937 rng(12345);

Mat random_mat(Index r, Index c) {
    std::normal_distribution<double> d;
    Mat m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = Complex(d(rng), d(rng));
    return m;
}

Mat random_stable(Index n, double margin = 0.5) {
    Mat a = random_mat(n, n);
    a -= (a.cwiseAbs().rowwise().sum().maxCoeff() + margin) *
         Mat::Identity(n, n);
    return a;
}

} // namespace

TEST_CASE("schur form reconstructs the input") {
    Mat a = random_mat(12, 12);
    SchurForm s = SchurForm::compute(a);
    CHECK(s.reconstruction_error(a) < 1e-12);
    CHECK((s.u.adjoint() * s.u - Mat::Identity(12, 12)).norm() < 1e-12);
    // strictly upper triangular
    for (Index j = 0; j < 12; ++j)
        for (Index i = j + 1; i < 12; ++i) CHECK(std::abs(s.t(i, j)) == 0.0);
}

TEST_CASE("lyapunov solve: diagonal closed form") {
    Mat a = Mat::Zero(2, 2);
    a(0, 0) = -1.0;
    a(1, 1) = -2.0;
    Mat w = Mat::Ones(2, 2);
    Mat x = solve_lyapunov_dense(a, w);
    // X_ij = W_ij / (lambda_i + conj(lambda_j))
    CHECK(std::abs(x(0, 0) - 0.5) < 1e-13);
    CHECK(std::abs(x(0, 1) - 1.0 / 3.0) < 1e-13);
    CHECK(std::abs(x(1, 0) - 1.0 / 3.0) < 1e-13);
    CHECK(std::abs(x(1, 1) - 0.25) < 1e-13);
}

TEST_CASE("lyapunov solve: random residual and hermitian structure") {
    Mat a = random_stable(15);
    Mat f = random_mat(15, 3);
    Mat w = f * f.adjoint();
    Mat x = solve_lyapunov_dense(a, w);
    CHECK((a * x + x * a.adjoint() + w).norm() < 1e-10 * w.norm());
    CHECK((x - x.adjoint()).norm() < 1e-12 * x.norm());
    RealVec ev = eig_hermitian(x);
    CHECK(ev.minCoeff() > -1e-12 * x.norm());
}

TEST_CASE("lyapunov adjoint variant") {
    Mat a = random_stable(9);
    Mat w = Mat::Identity(9, 9);
    SchurForm s = SchurForm::compute(a);
    Mat x = solve_lyapunov_schur_adjoint(s, w);
    CHECK((a.adjoint() * x + x * a + w).norm() < 1e-10 * w.norm());
}

TEST_CASE("sylvester solve residual") {
    Mat a = random_stable(8);
    Mat h = random_stable(5);
    Mat w = random_mat(8, 5);
    Mat x = solve_sylvester_dense(a, h, w);
    CHECK((a * x + x * h.adjoint() + w).norm() < 1e-10 * w.norm());
}

TEST_CASE("sylvester rejects overlapping spectra") {
    Mat a = Mat::Identity(3, 3);           // spectrum {1}
    Mat h = -Mat::Identity(3, 3);          // -H^* has spectrum {1}
    Mat w = Mat::Ones(3, 3);
    CHECK_THROWS_AS(solve_sylvester_dense(a, h, w), Error);
}

TEST_CASE("non-hurwitz drift rejected by lyapunov path") {
    Mat a = Mat::Identity(4, 4);
    CHECK_THROWS_AS(solve_lyapunov_dense(a, Mat::Identity(4, 4)), Error);
}

TEST_CASE("pivoted cholesky reconstructs rank-deficient psd input") {
    Mat f = random_mat(10, 4);
    Mat m = f * f.adjoint();
    PsdFactor fac = cholesky_psd(m);
    CHECK(fac.rank == 4);
    CHECK((fac.s.adjoint() * fac.s - m).norm() < 1e-10 * m.norm());
}

TEST_CASE("pivoted cholesky rejects indefinite input") {
    Mat m = Mat::Identity(3, 3);
    m(2, 2) = -1.0;
    CHECK_THROWS_AS(cholesky_psd(m), Error);
}

TEST_CASE("svd reconstructs and orders singular values") {
    Mat m = random_mat(7, 5);
    Svd dec = svd(m);
    CHECK((dec.u * dec.sigma.asDiagonal() * dec.v.adjoint() - m).norm() <
          1e-12 * m.norm());
    for (Index i = 1; i < dec.sigma.size(); ++i)
        CHECK(dec.sigma[i - 1] >= dec.sigma[i]);
}

TEST_CASE("hermitian eigenvalues ascend") {
    Mat f = random_mat(8, 8);
    Mat m = f + f.adjoint();
    RealVec ev = eig_hermitian(m);
    for (Index i = 1; i < ev.size(); ++i) CHECK(ev[i - 1] <= ev[i]);
    CHECK(std::abs(ev.sum() - m.trace().real()) < 1e-10 * m.norm());
}

TEST_CASE("dense eigenvalues of a triangular matrix are its diagonal") {
    Mat t = Mat::Zero(4, 4);
    t(0, 0) = Complex(-1, 2);
    t(1, 1) = Complex(-3, 0);
    t(2, 2) = Complex(-0.5, -1);
    t(3, 3) = Complex(-2, 0.1);
    t(0, 2) = 5.0;
    Vec ev = eig_dense(t);
    RealVec got = ev.cwiseAbs();
    for (Index i = 0; i < 4; ++i) {
        bool found = false;
        for (Index j = 0; j < 4; ++j)
            if (std::abs(ev[j] - t(i, i)) < 1e-10) found = true;
        CHECK(found);
    }
    (void)got;
}

TEST_CASE("sparse shift-invert finds the smallest-magnitude eigenvalues") {
    const Index n = 400;
    SpMat core(n, n);
    std::vector<Eigen::Triplet<Complex>> trips;
    for (Index i = 0; i < n; ++i)
        trips.emplace_back(i, i, Complex(-0.1 * (i + 1), 0.02 * i));
    core.setFromTriplets(trips.begin(), trips.end());
    SparseLowRank m;
    m.core = core;
    SparseEigResult res = eig_sparse_smallest(m, 3);
    REQUIRE(res.values.size() >= 3);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(res.values[i] - Complex(-0.1 * (i + 1), 0.02 * i)) <
              1e-8);
}

TEST_CASE("triangular sylvester kernel agrees with the dense solver") {
    Mat a = random_stable(6);
    Mat h = random_stable(4);
    Mat w = random_mat(6, 4);
    SchurForm sa = SchurForm::compute(a);
    SchurForm sh = SchurForm::compute(h);
    Mat c = -(sa.u.adjoint() * w * sh.u);
    Mat y = solve_triangular_sylvester(sa.t, false, sh.t, true, std::move(c));
    Mat x = sa.u * y * sh.u.adjoint();
    CHECK((a * x + x * h.adjoint() + w).norm() < 1e-10 * w.norm());
}

TEST_CASE("kron oracle solves the generalized equation directly") {
    Mat a = random_stable(6, 3.0);
    std::vector<Mat> ns{0.2 * random_mat(6, 6)};
    Mat f = random_mat(6, 2);
    Mat w = f * f.adjoint();
    Mat p = kron_oracle_generalized_lyapunov(a, ns, w);
    Mat res = a * p + p * a.adjoint() + ns[0] * p * ns[0].adjoint() + w;
    CHECK(res.norm() < 1e-9 * w.norm());
}
