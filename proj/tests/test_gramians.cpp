#include <doctest.h>

#include <random>

#include "bmr/gramians.hpp"
#include "bmr/linalg.hpp"

using namespace bmr;

namespace {

std::mt19937 rng(777);

Mat random_mat(Index r, Index c) {
    std::normal_distribution<double> d;
    Mat m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = Complex(d(rng), d(rng));
    return m;
}

BilinearSystem random_system(Index n, Index m, double coupling = 0.15) {
    Mat a = random_mat(n, n);
    a -= (a.cwiseAbs().rowwise().sum().maxCoeff() + 0.5) * Mat::Identity(n, n);
    BilinearSystem sys;
    sys.A = SparseLowRank::from_dense(a);
    for (Index k = 0; k < m; ++k)
        sys.N.push_back(SparseLowRank::from_dense(
            Mat(coupling * random_mat(n, n) / std::sqrt(double(n)))));
    sys.B = random_mat(n, m);
    sys.C = random_mat(2, n);
    sys.D = Vec::Zero(2);
    return sys;
}

} // namespace

TEST_CASE("identity coupling closed form") {
    // A = -I, N = I: the equation -2P + P + W = 0 gives P = W.
    Mat a = -Mat::Identity(2, 2);
    SchurForm s = SchurForm::compute(a);
    std::vector<SparseLowRank> ns{
        SparseLowRank::from_dense(Mat(Mat::Identity(2, 2)))};
    Mat f(2, 1);
    f << 1, 0;
    Mat p = solve_generalized_lyapunov(s, ns, f, false);
    CHECK(std::abs(p(0, 0) - 1.0) < 1e-8);
    CHECK(std::abs(p(1, 1)) < 1e-8);
    CHECK(std::abs(p(0, 1)) < 1e-8);
}

TEST_CASE("fixed point matches the kron oracle on random instances") {
    for (int trial = 0; trial < 10; ++trial) {
        BilinearSystem sys = random_system(8, 2);
        Mat a = sys.dense_a();
        SchurForm s = SchurForm::compute(a);
        Mat p = solve_generalized_lyapunov(s, sys.N, sys.B, false);
        Mat oracle =
            kron_oracle_generalized_lyapunov(a, sys.dense_n(), Mat(sys.B * sys.B.adjoint()));
        CHECK((p - oracle).norm() < 1e-8 * oracle.norm());
    }
}

TEST_CASE("adjoint fixed point matches the oracle of the dual system") {
    BilinearSystem sys = random_system(7, 2);
    Mat a = sys.dense_a();
    SchurForm s = SchurForm::compute(a);
    Mat q = solve_generalized_lyapunov(s, sys.N, Mat(sys.C.adjoint()), true);
    std::vector<Mat> ns_adj;
    for (const auto& nk : sys.dense_n()) ns_adj.push_back(nk.adjoint());
    Mat oracle = kron_oracle_generalized_lyapunov(
        a.adjoint(), ns_adj, Mat(sys.C.adjoint() * sys.C));
    CHECK((q - oracle).norm() < 1e-8 * oracle.norm());
}

TEST_CASE("dual gramian identity ties both h2 formulas together") {
    for (int trial = 0; trial < 5; ++trial) {
        BilinearSystem sys = random_system(9, 3);
        SchurForm s = SchurForm::compute(sys.dense_a());
        GramianPair g = compute_gramians(sys, s);
        double h2p = h2_norm(sys, g.p);
        double h2q = h2_norm_dual(sys, g.q);
        CHECK(std::abs(h2p - h2q) < 1e-8 * h2p);
    }
}

TEST_CASE("gramians grow with the bilinear coupling") {
    BilinearSystem weak = random_system(8, 1, 0.0);
    BilinearSystem strong = weak;
    strong.N.clear();
    strong.N.push_back(
        SparseLowRank::from_dense(Mat(0.3 * Mat::Identity(8, 8))));
    SchurForm s = SchurForm::compute(weak.dense_a());
    GramianPair gw = compute_gramians(weak, s);
    GramianPair gs = compute_gramians(strong, s);
    // the extra positive term can only add reachable energy
    CHECK(gs.p.trace().real() >= gw.p.trace().real() - 1e-12);
    RealVec diff = eig_hermitian(Mat(gs.p - gw.p));
    CHECK(diff.minCoeff() > -1e-10 * gs.p.norm());
}

TEST_CASE("strong coupling makes the iteration diverge with a clear error") {
    BilinearSystem sys = random_system(6, 1, 0.0);
    sys.N.clear();
    sys.N.push_back(SparseLowRank::from_dense(Mat(5.0 * Mat::Identity(6, 6))));
    SchurForm s = SchurForm::compute(sys.dense_a());
    CHECK_THROWS_AS(compute_gramians(sys, s), Error);
}

TEST_CASE("generalized sylvester matches its oracle") {
    for (int trial = 0; trial < 5; ++trial) {
        BilinearSystem sys = random_system(8, 2);
        Mat ah = random_mat(3, 3);
        ah -= (ah.cwiseAbs().rowwise().sum().maxCoeff() + 0.5) *
              Mat::Identity(3, 3);
        std::vector<Mat> nh{0.1 * random_mat(3, 3), 0.1 * random_mat(3, 3)};
        Mat w = random_mat(8, 3);
        SchurForm sb = SchurForm::compute(sys.dense_a());
        SchurForm ss = SchurForm::compute(ah);
        Mat x = solve_generalized_sylvester(sb, sys.N, ss, nh, w, false);
        Mat oracle = kron_oracle_generalized_sylvester(sys.dense_a(),
                                                       sys.dense_n(), ah, nh, w);
        CHECK((x - oracle).norm() < 1e-8 * oracle.norm());
    }
}

TEST_CASE("h2 error of a model against itself vanishes") {
    BilinearSystem sys = random_system(8, 2);
    SchurForm s = SchurForm::compute(sys.dense_a());
    GramianPair g = compute_gramians(sys, s);
    double full = h2_norm(sys, g.p);
    H2ErrorReport rep = h2_error(sys, s, full * full, sys.dense_a(),
                                 sys.dense_n(), sys.B, Mat(sys.C));
    // the raw difference of traces is zero up to cancellation noise, and the
    // reported error collapses to the resolution floor of the solves
    CHECK(std::abs(rep.error_sq) < 1e-6 * rep.full_sq);
    CHECK(rep.abs_error <= std::sqrt(rep.resolution_sq) * (1.0 + 1e-12));
}

TEST_CASE("vanishing coupling reduces to the linear gramian") {
    BilinearSystem sys = random_system(8, 1, 0.0);
    sys.N.clear();
    sys.N.push_back(SparseLowRank::from_dense(Mat(Mat::Zero(8, 8))));
    SchurForm s = SchurForm::compute(sys.dense_a());
    GramianPair g = compute_gramians(sys, s);
    Mat lin = solve_lyapunov_dense(sys.dense_a(), Mat(sys.B * sys.B.adjoint()));
    CHECK((g.p - lin).norm() < 1e-9 * lin.norm());
    CHECK(g.p_stats.iterations <= 2);
}
