#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "phl/wave2d.hpp"

using namespace phl;
using namespace phl::wave;

namespace {

Mat dense(const SpMat& m) { return Mat(m); }

double min_eig_sym(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("mesh_lshape combinatorics at h = 1 and h = 0.5") {
    auto coarse = mesh_lshape(1.0);
    CHECK(coarse.num_triangles() == 6);
    CHECK(coarse.boundary_edges.size() == 8);
    CHECK(coarse.num_vertices() == 8);
    for (size_t t = 0; t < 6; ++t) {
        CHECK(coarse.triangle_area(t) == doctest::Approx(0.5));
    }

    auto fine = mesh_lshape(0.5);
    CHECK(fine.num_triangles() == 24);
    for (size_t t = 0; t < 24; ++t) {
        CHECK(fine.triangle_area(t) == doctest::Approx(0.5 * 0.5 * 0.5));
    }
}

TEST_CASE("mesh_lshape boundary starts at the origin and runs counterclockwise") {
    auto mesh = mesh_lshape(0.5);
    const auto& first = mesh.vertices[static_cast<size_t>(mesh.boundary_vertices.front())];
    CHECK(first.x() == 0.0);
    CHECK(first.y() == 0.0);
    // Signed area of the boundary polygon is positive for CCW orientation.
    double area2 = 0.0;
    const auto& bv = mesh.boundary_vertices;
    for (size_t k = 0; k < bv.size(); ++k) {
        const auto& a = mesh.vertices[static_cast<size_t>(bv[k])];
        const auto& b = mesh.vertices[static_cast<size_t>(bv[(k + 1) % bv.size()])];
        area2 += a.x() * b.y() - b.x() * a.y();
    }
    CHECK(0.5 * area2 == doctest::Approx(3.0));  // L-shape area
}

TEST_CASE("mesh_lshape rejects oversized and non-dividing h") {
    CHECK_THROWS_AS(mesh_lshape(2.0), std::invalid_argument);
    CHECK_THROWS_AS(mesh_lshape(0.3), std::invalid_argument);
    CHECK_THROWS_AS(mesh_lshape(0.0), std::invalid_argument);
}

TEST_CASE("assemble reproduces the P1 mass matrix on a single triangle") {
    Mesh tri;
    tri.vertices = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    tri.triangles = {{0, 1, 2}};
    tri.boundary_edges = {{0, 1}, {1, 2}, {2, 0}};
    tri.boundary_vertices = {0, 1, 2};
    tri.domain_tag = "single";
    tri.h = 1.0;
    WaveParams params;
    params.eps = 0.0;
    auto fem = assemble(tri, params);

    const double area = 0.5;
    Mat mp_ref(3, 3);
    mp_ref << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    mp_ref *= area / 12.0;
    CHECK((dense(fem.M_p) - mp_ref).norm() < 1e-15);
    CHECK(fem.M_eps.nonZeros() == 0);

    // T = I: the stress block is area * I_2.
    CHECK((dense(fem.M_q) - area * Mat::Identity(2, 2)).norm() < 1e-15);
}

TEST_CASE("boundary mass blocks are the 1D P1 edge matrices") {
    auto mesh = mesh_lshape(0.5);
    WaveParams params;
    auto fem = assemble(mesh, params);
    Mat mb = dense(fem.M_bnd);
    const double len = 0.5;
    // Interior of an edge chain: diagonal 2*(len/3), off-diagonal len/6.
    CHECK(mb(1, 1) == doctest::Approx(2.0 * len / 3.0));
    CHECK(mb(1, 2) == doctest::Approx(len / 6.0));
    CHECK(mb(2, 1) == doctest::Approx(len / 6.0));
    CHECK(min_eig_sym(mb) > 0.0);
}

TEST_CASE("assemble validates parameters") {
    auto mesh = mesh_lshape(1.0);
    WaveParams bad;
    bad.rho = -1.0;
    CHECK_THROWS_AS(assemble(mesh, bad), std::invalid_argument);
    WaveParams bad_t;
    bad_t.T_tensor << 1.0, 2.0, 2.0, 1.0;  // indefinite
    CHECK_THROWS_AS(assemble(mesh, bad_t), std::invalid_argument);
    WaveParams wrong_size;
    wrong_size.eps_per_element = {1.0, 2.0};
    CHECK_THROWS_AS(assemble(mesh, wrong_size), std::invalid_argument);
}

TEST_CASE("per-element parameter fields") {
    auto mesh = mesh_lshape(0.5);
    const size_t nt = static_cast<size_t>(mesh.num_triangles());

    SUBCASE("constant fields reproduce the uniform assembly") {
        WaveParams uniform;
        uniform.rho = 2.0;
        uniform.eps = 0.25;
        WaveParams fields = uniform;
        fields.rho_per_element.assign(nt, 2.0);
        fields.eps_per_element.assign(nt, 0.25);
        fields.T_per_element.assign(nt, Eigen::Matrix2d::Identity());
        auto a = assemble(mesh, uniform);
        auto b = assemble(mesh, fields);
        CHECK((Mat(a.M_p) - Mat(b.M_p)).norm() == 0.0);
        CHECK((Mat(a.M_eps) - Mat(b.M_eps)).norm() == 0.0);
        CHECK((Mat(a.M_q) - Mat(b.M_q)).norm() == 0.0);
    }
    SUBCASE("anisotropic tensor enters through its inverse") {
        WaveParams aniso;
        aniso.T_tensor << 2.0, 0.5, 0.5, 1.0;
        auto fem = assemble(mesh, aniso);
        const double area = mesh.triangle_area(0);
        Mat block = Mat(fem.M_q).topLeftCorner(2, 2);
        Mat expected = area * aniso.T_tensor.inverse();
        CHECK((block - expected).norm() < 1e-14);
    }
}

TEST_CASE("fom_realization carries the block structure") {
    auto mesh = mesh_lshape(0.5);
    WaveParams params;
    auto fem = assemble(mesh, params);
    auto ph = fom_realization(fem);

    CHECK(ph.order() == fem.state_dim());
    CHECK(ph.num_ports() == fem.N_bnd);
    // J is exactly skew: identical stored triplets with opposite signs.
    CHECK((ph.J + ph.J.transpose()).norm() == 0.0);
    CHECK(min_eig_sym(ph.M) > 0.0);
    CHECK(ph.check_structure().ok);

    WaveParams lossless;
    lossless.eps = 0.0;
    auto ph0 = fom_realization(assemble(mesh, lossless));
    CHECK(ph0.R.norm() == 0.0);
}

TEST_CASE("fom counts for the h = 0.25 L-shape") {
    auto mesh = mesh_lshape(0.25);
    auto fem = assemble(mesh, WaveParams{});
    CHECK(fem.N_q == 2 * 96);        // 48 cells, two triangles each
    CHECK(fem.N_p == 65);            // 81 grid nodes minus 16 removed
    CHECK(fem.N_bnd == 32);          // perimeter 8 over h = 0.25
    CHECK(fem.state_dim() == 257);
}

TEST_CASE("discrete_hamiltonian") {
    auto mesh = mesh_lshape(0.5);
    WaveParams params;
    auto fem = assemble(mesh, params);

    Vec zq = Vec::Zero(fem.N_q);
    Vec zp = Vec::Zero(fem.N_p);
    CHECK(discrete_hamiltonian(fem, zq, zp) == 0.0);

    // Constant velocity field: H = 1/2 * rho * area(Omega) = 1.5.
    Vec ones = Vec::Ones(fem.N_p);
    CHECK(discrete_hamiltonian(fem, zq, ones) == doctest::Approx(1.5));

    std::mt19937_64 rng(97);
    Vec eq = oracles::random_mat(rng, fem.N_q, 1);
    Vec ep = oracles::random_mat(rng, fem.N_p, 1);
    const double h1 = discrete_hamiltonian(fem, eq, ep);
    CHECK(discrete_hamiltonian(fem, Vec(2 * eq), Vec(2 * ep)) == doctest::Approx(4.0 * h1));
}

TEST_CASE("implicit midpoint conserves the lossless Hamiltonian") {
    auto mesh = mesh_lshape(0.5);
    WaveParams params;
    params.eps = 0.0;
    auto fem = assemble(mesh, params);
    std::mt19937_64 rng(101);
    State state{oracles::random_mat(rng, fem.N_q, 1), oracles::random_mat(rng, fem.N_p, 1)};
    const Vec u = Vec::Zero(fem.N_bnd);
    MidpointStepper stepper(fem, 0.05);
    double h_prev = discrete_hamiltonian(fem, state.e_q, state.e_p);
    const double h0 = h_prev;
    for (int step = 0; step < 200; ++step) {
        auto [next, y] = stepper.step(state, u);
        const double h_next = discrete_hamiltonian(fem, next.e_q, next.e_p);
        CHECK(std::abs(h_next - h_prev) <= 1e-12 * h0);
        h_prev = h_next;
        state = next;
    }
}

TEST_CASE("damping makes the free Hamiltonian non-increasing") {
    auto mesh = mesh_lshape(0.5);
    WaveParams params;
    params.eps = 1e-2;
    auto fem = assemble(mesh, params);
    std::mt19937_64 rng(103);
    State state{oracles::random_mat(rng, fem.N_q, 1), oracles::random_mat(rng, fem.N_p, 1)};
    const Vec u = Vec::Zero(fem.N_bnd);
    MidpointStepper stepper(fem, 0.05);
    double h_prev = discrete_hamiltonian(fem, state.e_q, state.e_p);
    for (int step = 0; step < 100; ++step) {
        auto [next, y] = stepper.step(state, u);
        const double h_next = discrete_hamiltonian(fem, next.e_q, next.e_p);
        CHECK(h_next <= h_prev * (1.0 + 1e-12));
        h_prev = h_next;
        state = next;
    }
}

TEST_CASE("discrete power balance holds at the midpoint to 1e-10") {
    auto mesh = mesh_lshape(0.5);
    WaveParams params;
    params.eps = 1e-3;
    auto fem = assemble(mesh, params);
    std::mt19937_64 rng(107);
    State state{oracles::random_mat(rng, fem.N_q, 1), oracles::random_mat(rng, fem.N_p, 1)};
    const double dt = 0.02;
    MidpointStepper stepper(fem, dt);
    const Mat M_bnd = dense(fem.M_bnd);
    for (int step = 0; step < 50; ++step) {
        Vec u = oracles::random_mat(rng, fem.N_bnd, 1);
        auto [next, y] = stepper.step(state, u);
        const double h0 = discrete_hamiltonian(fem, state.e_q, state.e_p);
        const double h1 = discrete_hamiltonian(fem, next.e_q, next.e_p);
        const Vec ep_mid = 0.5 * (state.e_p + next.e_p);
        const double supplied = u.dot(M_bnd * y);
        const double dissipated = ep_mid.dot(dense(fem.M_eps) * ep_mid);
        const double residual = std::abs((h1 - h0) / dt - (supplied - dissipated));
        const double scale = std::max({std::abs(supplied), std::abs(dissipated),
                                       std::abs(h1 - h0) / dt, 1.0});
        CHECK(residual <= 1e-10 * scale);
        state = next;
    }
}

TEST_CASE("sample_fom shapes and reciprocity") {
    auto mesh = mesh_lshape(0.25);
    auto fem = assemble(mesh, WaveParams{});
    auto grid = linalg::log_grid(1e-1, 1e2, 20);

    auto siso = sample_fom(fem, grid, {1});
    CHECK(siso.size() == 20);
    CHECK(siso.front().value.rows() == 1);

    const int far = static_cast<int>(fem.N_bnd / 2);
    auto mimo = sample_fom(fem, grid, {1, 2, far});
    CHECK(mimo.front().value.rows() == 3);
    for (const auto& sample : mimo) {
        CHECK((sample.value - sample.value.transpose()).norm() <= 1e-10 * sample.value.norm());
    }

    // Adjacent boundary channels are closer to each other than to the
    // geometrically distant one.
    double d12 = 0.0, d13 = 0.0, scale = 0.0;
    for (const auto& sample : mimo) {
        d12 += std::abs(sample.value(0, 0) - sample.value(1, 1));
        d13 += std::abs(sample.value(0, 0) - sample.value(2, 2));
        scale += std::abs(sample.value(0, 0));
    }
    CHECK(d12 < d13);
    CHECK(d12 < 0.5 * scale);
}

TEST_CASE("sample_fom validates channels") {
    auto mesh = mesh_lshape(0.5);
    auto fem = assemble(mesh, WaveParams{});
    auto grid = linalg::log_grid(1e-1, 1e1, 3);
    CHECK_THROWS_AS(sample_fom(fem, grid, {}), std::invalid_argument);
    CHECK_THROWS_AS(sample_fom(fem, grid, {0}), std::invalid_argument);
    CHECK_THROWS_AS(sample_fom(fem, grid, {static_cast<int>(fem.N_bnd) + 1}),
                    std::invalid_argument);
}

TEST_CASE("sample_fom agrees with the dense pH realization") {
    auto mesh = mesh_lshape(0.5);
    auto fem = assemble(mesh, WaveParams{});
    auto ph = fom_realization(fem);
    auto dense_sys = lti::ph_to_descriptor(ph);
    auto grid = linalg::log_grid(1e-1, 1e1, 5);
    auto sparse_samples = sample_fom(fem, grid, {1, 3});
    std::vector<int> keep{0, 2};
    for (size_t i = 0; i < grid.size(); ++i) {
        CMat full = lti::eval_transfer(dense_sys, cplx(0.0, grid[i]));
        CMat restricted(2, 2);
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) restricted(a, b) = full(keep[a], keep[b]);
        }
        CHECK((sparse_samples[i].value - restricted).norm() <= 1e-10 * restricted.norm());
    }
}

TEST_CASE("FOM classifies as passive (not strict) on a sampled grid") {
    auto mesh = mesh_lshape(0.5);
    WaveParams params;
    params.eps = 1e-3;
    auto fem = assemble(mesh, params);
    auto ph = fom_realization(fem);
    auto rep = lti::classify_passivity(ph, linalg::log_grid(1e-1, 1e2, 50));
    CHECK(rep.classification == lti::PassivityClass::Passive);
}

TEST_CASE("transfer values converge under mesh refinement") {
    std::vector<double> values;
    for (double h : {0.5, 0.25, 0.125}) {
        auto fem = assemble(mesh_lshape(h), WaveParams{});
        auto samples = sample_fom(fem, {0.5}, {1});
        values.push_back(std::abs(samples.front().value(0, 0)));
    }
    const double d1 = std::abs(values[1] - values[0]);
    const double d2 = std::abs(values[2] - values[1]);
    CHECK(d2 < d1);
}

TEST_CASE("midpoint step validates inputs") {
    auto fem = assemble(mesh_lshape(1.0), WaveParams{});
    CHECK_THROWS_AS(MidpointStepper(fem, 0.0), std::invalid_argument);
    State bad{Vec::Zero(1), Vec::Zero(fem.N_p)};
    CHECK_THROWS_AS(step_midpoint(fem, bad, Vec::Zero(fem.N_bnd), 0.1), std::invalid_argument);
}
