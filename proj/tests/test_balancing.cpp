#include <doctest.h>

#include <filesystem>
#include <random>

#include <Eigen/LU>

#include "bmr/balancing.hpp"
#include "bmr/gramians.hpp"
#include "bmr/linalg.hpp"

using namespace bmr;

namespace {

std::mt19937 rng(4242);

Mat random_mat(Index r, Index c) {
    std::normal_distribution<double> d;
    Mat m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = Complex(d(rng), d(rng));
    return m;
}

BilinearSystem random_system(Index n, Index m, double coupling = 0.1) {
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

BalancedRealization balance_of(const BilinearSystem& sys, GramianPair* out = nullptr) {
    SchurForm s = SchurForm::compute(sys.dense_a());
    GramianPair g = compute_gramians(sys, s);
    if (out) *out = g;
    return compute_balancing(sys, g);
}

} // namespace

TEST_CASE("balancing maps both gramians to the same diagonal") {
    BilinearSystem sys = random_system(10, 2);
    GramianPair g;
    BalancedRealization bal = balance_of(sys, &g);
    const Index r = bal.rank();
    Mat w = bal.t.adjoint();      // row map
    Mat v = bal.t_inv.adjoint();  // column map
    Mat sigma = bal.sigma.cast<Complex>().asDiagonal();
    CHECK((w * g.p * w.adjoint() - sigma).norm() < 1e-8 * bal.sigma[0]);
    CHECK((v.adjoint() * g.q * v - sigma).norm() < 1e-8 * bal.sigma[0]);
    CHECK((w * v - Mat::Identity(r, r)).norm() < 1e-10);
}

TEST_CASE("balanced singular values are invariant under similarity") {
    BilinearSystem sys = random_system(8, 1);
    BalancedRealization bal1 = balance_of(sys);

    // random similarity transform of the realization
    Mat s = random_mat(8, 8);
    s += 8.0 * Mat::Identity(8, 8);  // well conditioned
    Mat si = s.inverse();
    BilinearSystem t;
    t.A = SparseLowRank::from_dense(Mat(si * sys.dense_a() * s));
    t.N.push_back(SparseLowRank::from_dense(Mat(si * sys.dense_n()[0] * s)));
    t.B = si * sys.B;
    t.C = sys.C * s;
    t.D = sys.D;
    BalancedRealization bal2 = balance_of(t);

    REQUIRE(bal1.rank() == bal2.rank());
    for (Index i = 0; i < bal1.rank(); ++i)
        CHECK(bal1.sigma[i] ==
              doctest::Approx(bal2.sigma[i]).epsilon(1e-6));
}

TEST_CASE("full-order truncation is an exact change of coordinates") {
    BilinearSystem sys = random_system(7, 2);
    BalancedRealization bal = balance_of(sys);
    ReducedModel red = truncate_bt(bal, bal.rank());
    Vec ev_full = eig_dense(sys.dense_a());
    Vec ev_red = eig_dense(red.a);
    // spectra agree as multisets
    for (Index i = 0; i < ev_full.size(); ++i) {
        double best = 1e300;
        for (Index j = 0; j < ev_red.size(); ++j)
            best = std::min(best, std::abs(ev_full[i] - ev_red[j]));
        CHECK(best < 1e-7);
    }
}

TEST_CASE("hankel-type singular values decay and suggest_order respects them") {
    BilinearSystem sys = random_system(12, 1);
    BalancedRealization bal = balance_of(sys);
    for (Index i = 1; i < bal.rank(); ++i)
        CHECK(bal.sigma[i - 1] >= bal.sigma[i] - 1e-14);
    Index d = suggest_order(bal.sigma, 1e-4);
    CHECK(d >= 1);
    CHECK(d <= bal.rank());
    double tail = bal.sigma.tail(bal.rank() - d).sum();
    CHECK(tail <= 1e-4 * bal.sigma.sum() + 1e-16);
}

TEST_CASE("interpolation-free reduction keeps the zero-frequency gain") {
    // For the linear part, eliminating the fast block preserves the
    // steady-state map -C A^{-1} B exactly.
    BilinearSystem sys = random_system(9, 1, 0.0);
    BalancedRealization bal = balance_of(sys);
    Index d = bal.rank() / 2;
    ReducedModel sp = reduce_sp(bal, d);
    Mat g_full = sys.C * sys.dense_a().partialPivLu().solve(sys.B);
    Mat g_red = sp.c * sp.a.partialPivLu().solve(sp.b);
    // exact in exact arithmetic; the balancing transform of a random system
    // is ill conditioned, so allow for roundoff amplification
    CHECK((g_full - g_red).norm() < 1e-4 * g_full.norm());
}

TEST_CASE("bt and sp coincide at full order") {
    BilinearSystem sys = random_system(6, 1);
    BalancedRealization bal = balance_of(sys);
    ReducedModel bt = truncate_bt(bal, bal.rank());
    ReducedModel sp = reduce_sp(bal, bal.rank());
    CHECK((bt.a - sp.a).norm() < 1e-12);
    CHECK((bt.b - sp.b).norm() < 1e-12);
    CHECK((bt.c - sp.c).norm() < 1e-12);
}

TEST_CASE("truncation order bounds are enforced") {
    BilinearSystem sys = random_system(5, 1);
    BalancedRealization bal = balance_of(sys);
    CHECK_THROWS_AS(truncate_bt(bal, 0), Error);
    CHECK_THROWS_AS(truncate_bt(bal, bal.rank() + 1), Error);
    CHECK_THROWS_AS(reduce_sp(bal, bal.rank() + 1), Error);
}

TEST_CASE("stability report passes on a random stable realization") {
    BilinearSystem sys = random_system(10, 1);
    BalancedRealization bal = balance_of(sys);
    for (Index d = 1; d <= bal.rank(); ++d) {
        StabilityReport rep = verify_stability(bal, d);
        CHECK(rep.passed);
    }
}

TEST_CASE("reduced bundle round-trips through disk") {
    BilinearSystem sys = random_system(6, 2);
    BalancedRealization bal = balance_of(sys);
    ReducedModel red = truncate_bt(bal, 3);
    std::string dir = (std::filesystem::temp_directory_path() /
                       "bmr_test_reduced").string();
    save_reduced(red, dir);
    ReducedModel back = load_reduced(dir);
    CHECK(back.method == "bt");
    CHECK(back.order() == 3);
    CHECK((back.a - red.a).norm() < 1e-14);
    CHECK((back.n[0] - red.n[0]).norm() < 1e-14);
    CHECK((back.n[1] - red.n[1]).norm() < 1e-14);
    CHECK((back.b - red.b).norm() < 1e-14);
    CHECK((back.c - red.c).norm() < 1e-14);
    std::filesystem::remove_all(dir);
}
