#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "phl/stabilization.hpp"

using namespace phl;
using namespace phl::stabilization;
using lti::DescriptorRealization;

namespace {

DescriptorRealization scalar_sys(double a, double b = 1.0, double c = 1.0, double d = 0.0) {
    CMat A(1, 1), B(1, 1), C(1, 1), D(1, 1);
    A << a;
    B << b;
    C << c;
    D << d;
    return DescriptorRealization::standard(A, B, C, D);
}

}  // namespace

TEST_CASE("separate: stable input has an empty antistable part") {
    auto split = separate(scalar_sys(-1.0));
    CHECK(split.antistable.order() == 0);
    CHECK(split.stable.order() == 1);
}

TEST_CASE("separate: diagonal example splits into 1/(s+1) and 1/(s-2)") {
    CMat A = CMat::Zero(2, 2);
    A(0, 0) = -1.0;
    A(1, 1) = 2.0;
    CMat B(2, 1), C(1, 2);
    B << 1.0, 1.0;
    C << 1.0, 1.0;
    auto split = separate(DescriptorRealization::standard(A, B, C, CMat::Zero(1, 1)));
    REQUIRE(split.stable.order() == 1);
    REQUIRE(split.antistable.order() == 1);
    for (double w : {0.0, 0.7, 3.0}) {
        const cplx s(0.0, w);
        CHECK(std::abs(lti::eval_transfer(split.stable, s)(0, 0) - 1.0 / (s + 1.0)) < 1e-12);
        CHECK(std::abs(lti::eval_transfer(split.antistable, s)(0, 0) - 1.0 / (s - 2.0)) < 1e-12);
    }
}

TEST_CASE("separate: the parts recombine to the original transfer") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 4; ++trial) {
        const Index n = 6;
        Mat a = oracles::random_mat(rng, n, n);
        auto sys = DescriptorRealization::standard(a.cast<cplx>(),
                                                   oracles::random_mat(rng, n, 2).cast<cplx>(),
                                                   oracles::random_mat(rng, 2, n).cast<cplx>(),
                                                   oracles::random_mat(rng, 2, 2).cast<cplx>());
        auto split = separate(sys);
        for (const cplx& s : oracles::random_eval_points(rng, 10)) {
            CMat h = lti::eval_transfer(sys, s);
            CMat hs = lti::eval_transfer(split.stable, s);
            CMat hu = lti::eval_transfer(split.antistable, s);
            CHECK((hs + hu - h).norm() <= 1e-10 * h.norm());
        }
        CHECK(split.stable.is_real());
        CHECK(split.antistable.is_real());
    }
}

TEST_CASE("separate reflects eigenvalues inside the axis band with a warning") {
    CMat A = CMat::Zero(2, 2);
    A(0, 0) = cplx(1e-12, 1.0);   // numerically on the axis
    A(1, 1) = cplx(-1.0, 0.0);
    CMat B = CMat::Ones(2, 1);
    CMat C = CMat::Ones(1, 2);
    auto split = separate(lti::DescriptorRealization::standard(A, B, C, CMat::Zero(1, 1)));
    CHECK(split.antistable.order() == 0);
    CHECK(split.stable.order() == 2);
    REQUIRE(!split.warnings.empty());
    CHECK(split.warnings.front().find("axis band") != std::string::npos);
    for (const cplx& ev : split.stable_eigs) CHECK(ev.real() < 0.0);
}

TEST_CASE("separate requires an invertible E") {
    auto sys = scalar_sys(-1.0);
    sys.E(0, 0) = 0.0;
    CHECK_THROWS_AS(separate(sys), std::runtime_error);
}

TEST_CASE("hankel_gramians of 1/(s-1)") {
    auto [P, Q] = hankel_gramians(scalar_sys(1.0));
    CHECK(P(0, 0).real() == doctest::Approx(0.5));
    CHECK(Q(0, 0).real() == doctest::Approx(0.5));
    CHECK(largest_hankel_sv(P, Q) == doctest::Approx(0.5));
}

TEST_CASE("hankel_gramians of the empty system") {
    DescriptorRealization zero;
    zero.E = zero.A = CMat::Zero(0, 0);
    zero.B = CMat::Zero(0, 1);
    zero.C = CMat::Zero(1, 0);
    zero.D = CMat::Zero(1, 1);
    auto [P, Q] = hankel_gramians(zero);
    CHECK(largest_hankel_sv(P, Q) == 0.0);
}

TEST_CASE("hankel_gramians match the eigendecomposition oracle") {
    std::mt19937_64 rng(37);
    auto sys = oracles::random_antistable(rng, 5, 2);
    auto [P, Q] = hankel_gramians(sys);
    CMat P_ref = oracles::gramian_eigen_oracle(CMat(-sys.A), CMat(-sys.B));
    CMat Q_ref = oracles::gramian_eigen_oracle(CMat(-sys.A.adjoint()), CMat(sys.C.adjoint()));
    CHECK((P - P_ref).norm() <= 1e-8 * P_ref.norm());
    CHECK((Q - Q_ref).norm() <= 1e-8 * Q_ref.norm());
}

TEST_CASE("hankel_gramians reject stable spectra") {
    CHECK_THROWS_AS(hankel_gramians(scalar_sys(-1.0)), std::invalid_argument);
}

TEST_CASE("p_infinity of 1/(s-1) is the constant -1/2") {
    auto res = p_infinity(scalar_sys(1.0));
    CHECK(res.hankel_bound == doctest::Approx(0.5));
    CHECK(res.achieved_error == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(res.projected.order() == 0);
    CHECK(std::abs(res.projected.D(0, 0) - cplx(-0.5, 0.0)) < 1e-12);
    // |1/(i w - 1) + 1/2| = 1/2 for every w.
    for (double w : {0.0, 0.5, 3.0, 40.0}) {
        const cplx s(0.0, w);
        CHECK(std::abs(1.0 / (s - 1.0) + 0.5) == doctest::Approx(0.5));
    }
}

TEST_CASE("p_infinity leaves stable systems untouched") {
    auto sys = scalar_sys(-1.0);
    auto res = p_infinity(sys);
    CHECK(res.achieved_error == 0.0);
    CHECK(res.hankel_bound == 0.0);
    CHECK((res.projected.A - sys.A).norm() == 0.0);
}

TEST_CASE("p_infinity error equals the Hankel bound of the antistable part") {
    // H = 1/(s+1) + 1/(s-2): sigma_1 of 1/(s-2) is 1/4.
    CMat A = CMat::Zero(2, 2);
    A(0, 0) = -1.0;
    A(1, 1) = 2.0;
    CMat B(2, 1), C(1, 2);
    B << 1.0, 1.0;
    C << 1.0, 1.0;
    auto res = p_infinity(DescriptorRealization::standard(A, B, C, CMat::Zero(1, 1)));
    CHECK(res.hankel_bound == doctest::Approx(0.25));
    CHECK(res.achieved_error == doctest::Approx(0.25).epsilon(0.01));
    for (const cplx& ev : res.eigs_after) CHECK(ev.real() < 0.0);
}

TEST_CASE("p_infinity is all-pass optimal for random antistable systems") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 6; ++trial) {
        const Index n = 2 + static_cast<Index>(trial % 5);
        const Index m = 1 + static_cast<Index>(trial % 2);
        auto sys = oracles::random_antistable(rng, n, m);
        auto res = p_infinity(sys);
        CHECK_FALSE(res.used_fallback);
        CHECK(res.achieved_error <= res.hankel_bound * 1.01);
        CHECK(res.achieved_error >= res.hankel_bound * 0.99);
        for (const cplx& ev : res.eigs_after) CHECK(ev.real() < 0.0);

        // All-pass within 1% across a wide grid.
        for (double w : linalg::log_grid(1e-2, 1e3, 60)) {
            CMat diff = lti::eval_transfer(sys, cplx(0.0, w)) -
                        lti::eval_transfer(res.projected, cplx(0.0, w));
            CHECK(linalg::spectral_norm(diff) <= res.hankel_bound * 1.01);
        }
    }
}

TEST_CASE("p_infinity is idempotent") {
    std::mt19937_64 rng(43);
    auto sys = oracles::random_antistable(rng, 4, 1);
    auto once = p_infinity(sys);
    auto twice = p_infinity(once.projected);
    CHECK(twice.hankel_bound <= 1e-12);
    for (const cplx& s : oracles::random_eval_points(rng, 8)) {
        CMat a = lti::eval_transfer(once.projected, s);
        CMat b = lti::eval_transfer(twice.projected, s);
        CHECK((a - b).norm() <= 1e-12 * std::max(1.0, a.norm()));
    }
}

TEST_CASE("reflect mode stabilizes without the AAK machinery") {
    std::mt19937_64 rng(47);
    auto sys = oracles::random_antistable(rng, 4, 1);
    auto res = p_infinity(sys, StabilizeMode::Reflect);
    CHECK(res.used_fallback);
    for (const cplx& ev : res.eigs_after) CHECK(ev.real() < 0.0);
    // Suboptimal in general but still bounded on the grid.
    CHECK(res.achieved_error >= res.hankel_bound * 0.99);
}

TEST_CASE("off mode is a no-op") {
    auto sys = scalar_sys(1.0);
    auto res = p_infinity(sys, StabilizeMode::Off);
    CHECK((res.projected.A - sys.A).norm() == 0.0);
}

TEST_CASE("near-interpolation preservation for weak antistable parts") {
    // Stable part 1/(s+1), negligible antistable residue.
    CMat A = CMat::Zero(2, 2);
    A(0, 0) = -1.0;
    A(1, 1) = 1.0;
    CMat B(2, 1), C(1, 2);
    B << 1.0, 1e-8;
    C << 1.0, 1e-8;
    auto sys = DescriptorRealization::standard(A, B, C, CMat::Zero(1, 1));
    auto res = p_infinity(sys);
    CHECK(res.hankel_bound <= 1e-14);
    for (double w : {0.1, 1.0, 10.0}) {
        const cplx s(0.0, w);
        CMat before = lti::eval_transfer(sys, s);
        CMat after = lti::eval_transfer(res.projected, s);
        CHECK((before - after).norm() <= res.hankel_bound + 1e-12);
    }
}
