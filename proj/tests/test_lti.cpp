#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "phl/lti.hpp"

using namespace phl;
using lti::DescriptorRealization;
using lti::PHRealization;

namespace {

DescriptorRealization scalar_sys(double a, double b, double c, double d) {
    CMat A(1, 1), B(1, 1), C(1, 1), D(1, 1);
    A << a;
    B << b;
    C << c;
    D << d;
    return DescriptorRealization::standard(A, B, C, D);
}

// The worked-chain pH model with transfer 1/(s+1) + 1.
PHRealization worked_chain_ph() {
    const double rt2 = std::sqrt(2.0);
    Mat one = Mat::Identity(1, 1);
    PHRealization ph;
    ph.M = one;
    ph.Q = one;
    ph.J = 0.0 * one;
    ph.R = one;
    ph.G = rt2 * one;
    ph.P = -one;
    ph.N = 0.0 * one;
    ph.S = one;
    return ph;
}

std::vector<double> test_grid() { return linalg::log_grid(1e-2, 1e2, 50); }

}  // namespace

TEST_CASE("eval_transfer on the scalar descriptor 1/(s+1)") {
    auto sys = scalar_sys(-1.0, 1.0, 1.0, 0.0);
    CHECK(lti::eval_transfer(sys, cplx(0.0, 0.0))(0, 0).real() == doctest::Approx(1.0));
    CHECK(lti::eval_transfer(sys, cplx(1.0, 0.0))(0, 0).real() == doctest::Approx(0.5));
    // Closed form 1/(s+1) at an off-axis point.
    const cplx s(0.7, 1.3);
    CHECK(std::abs(lti::eval_transfer(sys, s)(0, 0) - 1.0 / (s + 1.0)) < 1e-14);
}

TEST_CASE("eval_transfer rejects singular shifts") {
    auto sys = scalar_sys(-1.0, 1.0, 1.0, 0.0);
    CHECK_THROWS_AS(lti::eval_transfer(sys, cplx(-1.0, 0.0)), std::runtime_error);
}

TEST_CASE("eval_transfer on the worked-chain pH model") {
    PHRealization ph = worked_chain_ph();
    // (G+P)^T Q (sM - (J-R)Q)^{-1} (G-P) + (N+S) = 1/(s+1) + 1.
    CHECK(lti::eval_transfer(ph, cplx(0.0, 0.0))(0, 0).real() == doctest::Approx(2.0));
    const cplx s(0.5, 2.0);
    CHECK(std::abs(lti::eval_transfer(ph, s)(0, 0) - (1.0 / (s + 1.0) + 1.0)) < 1e-14);
}

TEST_CASE("spectral density of 1/(s+1) + 1") {
    auto sys = scalar_sys(-1.0, 1.0, 1.0, 1.0);
    CHECK(lti::spectral_density(sys, cplx(0.0, 0.0))(0, 0).real() == doctest::Approx(4.0));
    // Phi(s) = 2 + 2/(1 - s^2) vanishes at s = sqrt(2).
    CHECK(std::abs(lti::spectral_density(sys, cplx(std::sqrt(2.0), 0.0))(0, 0)) < 1e-13);
}

TEST_CASE("spectral density is Hermitian on the axis and symmetric under s -> -s") {
    std::mt19937_64 rng(7);
    auto ph = oracles::random_strict_ph(rng, 6, 2);
    auto sys = lti::ph_to_descriptor(ph);
    for (double w : {0.3, 1.7, 12.0}) {
        CMat phi = lti::spectral_density(sys, cplx(0.0, w));
        CHECK(linalg::hermitian_err(phi) < 1e-12);
    }
    for (const cplx& s : oracles::random_eval_points(rng, 5)) {
        CMat a = lti::spectral_density(sys, s);
        CMat b = lti::spectral_density(sys, -s);
        CHECK((a - b.transpose()).norm() < 1e-10 * a.norm());
    }
}

TEST_CASE("classify_passivity on the three reference transfers") {
    auto grid = test_grid();
    auto strict = lti::classify_passivity(scalar_sys(-1, 1, 1, 1), grid);
    CHECK(strict.classification == lti::PassivityClass::StrictlyPassive);
    CHECK(strict.stability == lti::Stability::AsymptoticallyStable);

    // D = 0: positive real on the grid but the infimum at infinity is zero.
    auto passive = lti::classify_passivity(scalar_sys(-1, 1, 1, 0), grid);
    CHECK(passive.classification == lti::PassivityClass::Passive);

    auto unstable = lti::classify_passivity(scalar_sys(1, 1, 1, 0), grid);
    CHECK(unstable.classification == lti::PassivityClass::NotPassive);
    CHECK(unstable.stability == lti::Stability::Unstable);
}

TEST_CASE("classify_passivity stability edge cases") {
    auto grid = test_grid();
    // Simple pole at the origin: stable but not asymptotically; Phi == 0.
    auto lossless = lti::classify_passivity(scalar_sys(0.0, 1.0, 1.0, 0.0), grid);
    CHECK(lossless.stability == lti::Stability::Stable);
    CHECK(lossless.classification == lti::PassivityClass::Undetermined);

    // Repeated pole on the axis: clustered eigenvalues, hence unstable.
    CMat A = CMat::Zero(2, 2);
    A(0, 1) = 1.0;
    CMat B(2, 1), C(1, 2), D(1, 1);
    B << 0.0, 1.0;
    C << 1.0, 0.0;
    D << 0.0;
    auto rep = lti::classify_passivity(DescriptorRealization::standard(A, B, C, D), grid);
    CHECK(rep.stability == lti::Stability::Unstable);
}

TEST_CASE("classify_passivity requires a grid") {
    CHECK_THROWS_AS(lti::classify_passivity(scalar_sys(-1, 1, 1, 0), {}), std::invalid_argument);
}

TEST_CASE("ph_to_descriptor matches the worked chain and the identity case") {
    const double rt2 = std::sqrt(2.0);
    auto d = lti::ph_to_descriptor(worked_chain_ph());
    CHECK(d.E(0, 0).real() == doctest::Approx(1.0));
    CHECK(d.A(0, 0).real() == doctest::Approx(-1.0));
    CHECK(d.B(0, 0).real() == doctest::Approx(rt2 + 1.0));
    CHECK(d.C(0, 0).real() == doctest::Approx(rt2 - 1.0));
    CHECK(d.D(0, 0).real() == doctest::Approx(1.0));

    PHRealization id;
    const Index n = 3;
    id.M = Mat::Identity(n, n);
    id.Q = Mat::Identity(n, n);
    id.J = Mat::Zero(n, n);
    id.R = Mat::Identity(n, n);
    id.G = Mat::Identity(n, n);
    id.P = Mat::Zero(n, n);
    id.N = Mat::Zero(n, n);
    id.S = Mat::Zero(n, n);
    auto di = lti::ph_to_descriptor(id);
    CHECK((di.A + CMat::Identity(n, n)).norm() == 0.0);
    CHECK((di.B - CMat::Identity(n, n)).norm() == 0.0);
    CHECK(di.D.norm() == 0.0);
}

TEST_CASE("ph_to_descriptor preserves the transfer function pointwise") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 3; ++trial) {
        auto ph = oracles::random_strict_ph(rng, 8, 2);
        auto d = lti::ph_to_descriptor(ph);
        for (const cplx& s : oracles::random_eval_points(rng, 10)) {
            CMat a = lti::eval_transfer(ph, s);
            CMat b = lti::eval_transfer(d, s);
            CHECK((a - b).norm() <= 1e-12 * a.norm());
        }
    }
}

TEST_CASE("to_coenergy") {
    std::mt19937_64 rng(3);
    auto ph = oracles::random_strict_ph(rng, 5, 1);

    SUBCASE("Q = I is a no-op") {
        auto co = lti::to_coenergy(ph);
        CHECK((co.M - ph.M).norm() == 0.0);
        CHECK((co.Q - Mat::Identity(5, 5)).norm() == 0.0);
    }
    SUBCASE("scalar Q keeps the transfer") {
        PHRealization scaled = ph;
        scaled.Q = 2.0 * Mat::Identity(5, 5);
        auto co = lti::to_coenergy(scaled);
        CHECK((co.Q - Mat::Identity(5, 5)).norm() == 0.0);
        for (const cplx& s : oracles::random_eval_points(rng, 5)) {
            CMat a = lti::eval_transfer(scaled, s);
            CMat b = lti::eval_transfer(co, s);
            CHECK((a - b).norm() <= 1e-12 * a.norm());
        }
    }
    SUBCASE("singular Q is rejected") {
        PHRealization bad = ph;
        bad.Q = Mat::Zero(5, 5);
        CHECK_THROWS_AS(lti::to_coenergy(bad), std::invalid_argument);
    }
}

TEST_CASE("structure report flags violations") {
    std::mt19937_64 rng(11);
    auto ph = oracles::random_strict_ph(rng, 6, 2);
    CHECK(ph.check_structure().ok);

    PHRealization bad = ph;
    bad.J(0, 1) += 0.5;
    auto rep = bad.check_structure();
    CHECK_FALSE(rep.ok);
    CHECK(rep.summary.find("skew") != std::string::npos);

    PHRealization indef = ph;
    indef.S -= 10.0 * Mat::Identity(2, 2);
    CHECK_FALSE(indef.check_structure().ok);
}

TEST_CASE("valid pH structure is never classified not-passive") {
    std::mt19937_64 rng(13);
    auto grid = test_grid();
    for (int trial = 0; trial < 5; ++trial) {
        auto ph = oracles::random_strict_ph(rng, 7, 2);
        REQUIRE(ph.check_structure().ok);
        auto rep = lti::classify_passivity(ph, grid);
        CHECK(rep.classification != lti::PassivityClass::NotPassive);
    }
}
