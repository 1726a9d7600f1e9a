#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "bmr/linalg.hpp"
#include "bmr/system.hpp"

using namespace bmr;

namespace {

// Two-state mass-conserving toy model: symmetric hopping drift, one control
// pushing probability from state 1 to state 2.
BilinearSystem two_state() {
    Mat a(2, 2);
    a << -1, 1, 1, -1;
    Mat n(2, 2);
    n << -0.5, 0, 0.5, 0;
    BilinearSystem sys;
    sys.A = SparseLowRank::from_dense(a);
    sys.N.push_back(SparseLowRank::from_dense(n));
    sys.B = Mat(2, 0);
    sys.C = Mat(1, 2);
    sys.C << 1, 0;
    sys.D = Vec::Zero(1);
    return sys;
}

} // namespace

TEST_CASE("stationary state of the symmetric hopping model") {
    BilinearSystem sys = two_state();
    StationaryState st = stationary_state(sys);
    CHECK(st.residual < 1e-12);
    CHECK(std::abs(st.x_e.sum() - Complex(1.0)) < 1e-12);
    CHECK(std::abs(st.x_e[0] - Complex(0.5)) < 1e-10);
    CHECK(std::abs(st.x_e[1] - Complex(0.5)) < 1e-10);
}

TEST_CASE("stationary state rejects an invertible drift") {
    BilinearSystem sys = two_state();
    Mat a(2, 2);
    a << -1, 0, 0, -2;
    sys.A = SparseLowRank::from_dense(a);
    CHECK_THROWS_AS(stationary_state(sys), Error);
}

TEST_CASE("shift to standard form produces the input and feedthrough terms") {
    BilinearSystem sys = two_state();
    StationaryState st = stationary_state(sys);
    BilinearSystem sh = shift_to_standard_form(sys, st.x_e);
    REQUIRE(sh.B.cols() == 1);
    CHECK((sh.B.col(0) - sys.N[0].apply(st.x_e)).norm() < 1e-12);
    CHECK(std::abs(sh.D[0] - (sys.C * st.x_e)[0]) < 1e-12);
    // A and N are untouched
    CHECK((sh.dense_a() - sys.dense_a()).norm() == 0.0);
}

TEST_CASE("shift requires a purely bilinear system") {
    BilinearSystem sys = two_state();
    sys.B = Mat::Ones(2, 1);
    StationaryState st{Vec::Ones(2) / 2.0, 0.0, "probability"};
    CHECK_THROWS_AS(shift_to_standard_form(sys, st.x_e), Error);
}

TEST_CASE("null-space projection deflates the marginal mode exactly") {
    BilinearSystem sys = two_state();
    StationaryState st = stationary_state(sys);
    BilinearSystem sh = shift_to_standard_form(sys, st.x_e);
    BilinearSystem proj = project_out_null(sh, st.x_e);
    REQUIRE(proj.dim() == 1);
    // remaining mode of [[-1,1],[1,-1]] is -2
    CHECK(std::abs(proj.dense_a()(0, 0) - Complex(-2.0)) < 1e-12);
    // outputs agree: for a state with total mass zero, x2 = -x1
    // so C_proj = C_1 - C_2 = 1 - 0
    CHECK(std::abs(proj.C(0, 0) - Complex(1.0)) < 1e-12);
}

TEST_CASE("projection rejects a non-conservative drift") {
    BilinearSystem sys = two_state();
    Mat a(2, 2);
    a << -1, 1, 2, -2;  // rows sum to zero (x_e stationary), columns do not
    sys.A = SparseLowRank::from_dense(a);
    Vec xe = Vec::Ones(2) / 2.0;
    BilinearSystem sh = shift_to_standard_form(sys, xe);
    CHECK_THROWS_AS(project_out_null(sh, xe), Error);
}

TEST_CASE("discount shifts every eigenvalue by minus alpha") {
    BilinearSystem sys = two_state();
    StationaryState st = stationary_state(sys);
    BilinearSystem sh = shift_to_standard_form(sys, st.x_e);
    BilinearSystem disc = discount_shift(sh, 0.01);
    Vec ev = eig_dense(disc.dense_a());
    double max_re = ev.real().maxCoeff();
    CHECK(max_re < -0.009);
    CHECK(max_re > -0.011);
    CHECK(disc.discount_alpha() == doctest::Approx(0.01));
}

TEST_CASE("control scaling divides N and B and records eta") {
    BilinearSystem sys = two_state();
    StationaryState st = stationary_state(sys);
    BilinearSystem sh = shift_to_standard_form(sys, st.x_e);
    BilinearSystem sc = scale_controls(sh, 10.0);
    CHECK((sc.dense_n()[0] * 10.0 - sh.dense_n()[0]).norm() < 1e-14);
    CHECK((sc.B * 10.0 - sh.B).norm() < 1e-14);
    CHECK(sc.control_scale() == doctest::Approx(10.0));
}

TEST_CASE("stability certificate separates weak and strong coupling") {
    BilinearSystem sys;
    sys.A = SparseLowRank::from_dense(Mat(-Mat::Identity(4, 4)));
    sys.B = Mat::Ones(4, 1);
    sys.C = Mat::Ones(1, 4);
    sys.D = Vec::Zero(1);

    SUBCASE("unit coupling contracts") {
        sys.N.push_back(SparseLowRank::from_dense(Mat(Mat::Identity(4, 4))));
        StabilityCertificate c = check_assumption1(sys);
        CHECK(c.spectral_abscissa == doctest::Approx(-1.0));
        // envelope ||e^{At}|| = e^{-t}: lambda = 1, mu = 1, so the
        // contraction value is ||N||^2 / 2 = 0.5
        CHECK(c.contraction_certified == doctest::Approx(0.5).epsilon(0.05));
        CHECK(c.fixed_point_contraction < 1.0);
        CHECK(c.passed);
    }
    SUBCASE("doubled coupling does not") {
        sys.N.push_back(
            SparseLowRank::from_dense(Mat(2.0 * Mat::Identity(4, 4))));
        StabilityCertificate c = check_assumption1(sys);
        CHECK(c.contraction_certified == doctest::Approx(2.0).epsilon(0.05));
        CHECK(!c.passed);
    }
}

TEST_CASE("system bundle round-trips through disk") {
    BilinearSystem sys = two_state();
    StationaryState st = stationary_state(sys);
    BilinearSystem sh = shift_to_standard_form(sys, st.x_e);
    BilinearSystem sc = scale_controls(discount_shift(sh, 1e-3), 3.0);

    std::string dir = (std::filesystem::temp_directory_path() /
                       "bmr_test_bundle").string();
    save_system(sc, dir);
    BilinearSystem back = load_system(dir);
    CHECK(back.dim() == sc.dim());
    CHECK((back.dense_a() - sc.dense_a()).norm() < 1e-14);
    CHECK((back.dense_n()[0] - sc.dense_n()[0]).norm() < 1e-14);
    CHECK((back.B - sc.B).norm() < 1e-14);
    CHECK((back.C - sc.C).norm() < 1e-14);
    CHECK(back.control_scale() == doctest::Approx(3.0));
    CHECK(back.discount_alpha() == doctest::Approx(1e-3));
    std::filesystem::remove_all(dir);
}

TEST_CASE("loading a missing bundle reports an io error") {
    CHECK_THROWS_AS(load_system("/nonexistent/bundle/dir"), Error);
}
