#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "phl/io.hpp"

using namespace phl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("phl_io_test_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("MatrixMarket round trip") {
    TempDir dir;
    std::mt19937_64 rng(5);
    io::SpMat mat(7, 5);
    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < 12; ++k) {
        trips.emplace_back(static_cast<int>(rng() % 7), static_cast<int>(rng() % 5),
                           oracles::random_mat(rng, 1, 1)(0, 0));
    }
    mat.setFromTriplets(trips.begin(), trips.end());
    io::write_matrix_market(mat, dir.file("m.mtx"));
    io::SpMat back = io::read_matrix_market(dir.file("m.mtx"));
    CHECK((Mat(mat) - Mat(back)).norm() == 0.0);
}

TEST_CASE("MatrixMarket rejects junk") {
    TempDir dir;
    std::ofstream(dir.file("bad.mtx")) << "not a matrix\n1 1 1\n";
    CHECK_THROWS_AS(io::read_matrix_market(dir.file("bad.mtx")), std::runtime_error);
    CHECK_THROWS_AS(io::read_matrix_market(dir.file("missing.mtx")), std::invalid_argument);
}

TEST_CASE("descriptor realization JSON round trip keeps complex entries") {
    TempDir dir;
    std::mt19937_64 rng(11);
    lti::DescriptorRealization sys;
    sys.E = oracles::random_mat(rng, 3, 3).cast<cplx>();
    sys.A = oracles::random_mat(rng, 3, 3).cast<cplx>() +
            cplx(0, 1) * oracles::random_mat(rng, 3, 3).cast<cplx>();
    sys.B = oracles::random_mat(rng, 3, 2).cast<cplx>();
    sys.C = oracles::random_mat(rng, 2, 3).cast<cplx>();
    sys.D = oracles::random_mat(rng, 2, 2).cast<cplx>();
    io::save_realization(sys, dir.file("sys.json"));
    auto file = io::load_realization(dir.file("sys.json"));
    CHECK(file.kind == "descriptor");
    REQUIRE(file.descriptor.has_value());
    CHECK((file.descriptor->A - sys.A).norm() < 1e-15);
    CHECK((file.descriptor->E - sys.E).norm() < 1e-15);
}

TEST_CASE("pH realization JSON round trip") {
    TempDir dir;
    std::mt19937_64 rng(13);
    auto ph = oracles::random_strict_ph(rng, 4, 2);
    io::save_realization(ph, dir.file("ph.json"));
    auto file = io::load_realization(dir.file("ph.json"));
    CHECK(file.kind == "ph");
    REQUIRE(file.ph.has_value());
    CHECK((file.ph->J - ph.J).norm() < 1e-15);
    CHECK((file.ph->S - ph.S).norm() < 1e-15);
}

TEST_CASE("realization JSON accepts MatrixMarket references") {
    TempDir dir;
    io::SpMat m(2, 2);
    m.insert(0, 0) = 2.0;
    m.insert(1, 1) = 3.0;
    m.makeCompressed();
    io::write_matrix_market(m, dir.file("M.mtx"));
    std::ofstream(dir.file("ph.json")) << R"({
      "kind": "ph", "n": 2, "m": 1,
      "M": {"mm": "M.mtx"},
      "Q": [[1, 0], [0, 1]],
      "J": [[0, 1], [-1, 0]],
      "R": [[0.1, 0], [0, 0.1]],
      "G": [[1], [0]],
      "P": [[0], [0]],
      "N": [[0]],
      "S": [[0.5]]
    })";
    auto file = io::load_realization(dir.file("ph.json"));
    REQUIRE(file.ph.has_value());
    CHECK(file.ph->M(0, 0) == 2.0);
    CHECK(file.ph->M(1, 1) == 3.0);
    CHECK(file.ph->check_structure().ok);
}

TEST_CASE("tangential CSV round trip") {
    TempDir dir;
    auto oracle = [](cplx s) { return CMat(CMat::Identity(2, 2) / (s + 1.0)); };
    tangential::SamplingPlan plan;
    plan.omega_grid = linalg::log_grid(1e-1, 1e2, 14);
    auto [right, left] = tangential::sample_data(oracle, plan);
    io::write_tangential_csv(right, left, dir.file("data.csv"));
    auto [r2, l2] = io::read_tangential_csv(dir.file("data.csv"));
    CHECK(r2.size() == right.size());
    CHECK(l2.size() == left.size());
    CHECK((r2.points - right.points).norm() < 1e-15);
    CHECK((r2.responses - right.responses).norm() < 1e-15);
    CHECK((l2.directions - left.directions).norm() < 1e-15);
}

TEST_CASE("tangential JSON round trip keeps off-axis points") {
    TempDir dir;
    tangential::RightData right;
    right.points = CVec(2);
    right.points << cplx(0.5, 1.0), cplx(0.5, -1.0);
    right.directions = CMat::Ones(1, 2);
    right.responses = CMat::Random(1, 2);
    tangential::LeftData left;
    left.points = CVec::Constant(1, cplx(-0.5, 2.0));
    left.directions = CMat::Ones(1, 1);
    left.responses = CMat::Random(1, 1);
    io::write_tangential_json(right, left, dir.file("d.json"));
    auto [r2, l2] = io::read_tangential_json(dir.file("d.json"));
    CHECK((r2.points - right.points).norm() == 0.0);
    CHECK((r2.responses - right.responses).norm() < 1e-15);
    CHECK((l2.points - left.points).norm() == 0.0);
}

TEST_CASE("pencil dump carries the data hash") {
    TempDir dir;
    std::ofstream(dir.file("data.csv")) << "stub";
    auto oracle = [](cplx s) { return CMat(CMat::Constant(1, 1, 1.0 / (s + 1.0))); };
    tangential::SamplingPlan plan;
    plan.omega_grid = linalg::log_grid(1e-1, 1e1, 8);
    auto [right, left] = tangential::sample_data(oracle, plan);
    auto pencil = loewner::build_loewner(right, left);
    io::save_pencil(pencil, io::file_hash(dir.file("data.csv")), dir.file("pencil.json"));
    std::ifstream in(dir.file("pencil.json"));
    std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(contents.find("data_hash") != std::string::npos);
    CHECK(contents.find("\"sL\"") != std::string::npos);
}

TEST_CASE("FOM manifest round trip") {
    TempDir dir;
    auto mesh = wave::mesh_lshape(0.5);
    wave::WaveParams params;
    auto fem = wave::assemble(mesh, params);
    io::write_fom(fem, mesh, params, dir.file("wave"));
    auto mf = io::read_fom(dir.file("wave_fom.json"));
    CHECK(mf.fem.N_q == fem.N_q);
    CHECK(mf.fem.N_p == fem.N_p);
    CHECK(mf.fem.N_bnd == fem.N_bnd);
    CHECK((Mat(mf.fem.G) - Mat(fem.G)).norm() == 0.0);
    CHECK((Mat(mf.fem.M_bnd) - Mat(fem.M_bnd)).norm() == 0.0);
    CHECK(mf.boundary_coords.size() == static_cast<size_t>(fem.N_bnd));
    CHECK(mf.h == 0.5);
}

TEST_CASE("tangential CSV rejects points off the imaginary axis") {
    TempDir dir;
    tangential::RightData right;
    right.points = CVec::Constant(1, cplx(0.3, 1.0));
    right.directions = CMat::Ones(1, 1);
    right.responses = CMat::Ones(1, 1);
    tangential::LeftData left;
    left.points = CVec::Constant(1, cplx(0.0, 2.0));
    left.directions = CMat::Ones(1, 1);
    left.responses = CMat::Ones(1, 1);
    CHECK_THROWS_AS(io::write_tangential_csv(right, left, dir.file("bad.csv")),
                    std::invalid_argument);
}

TEST_CASE("file_hash is stable and content-sensitive") {
    TempDir dir;
    std::ofstream(dir.file("a.txt")) << "alpha";
    std::ofstream(dir.file("b.txt")) << "alpha";
    std::ofstream(dir.file("c.txt")) << "beta";
    CHECK(io::file_hash(dir.file("a.txt")) == io::file_hash(dir.file("b.txt")));
    CHECK(io::file_hash(dir.file("a.txt")) != io::file_hash(dir.file("c.txt")));
}

TEST_CASE("spectral zero CSV") {
    TempDir dir;
    passive::SpectralZeroSet zeros;
    zeros.zeros = {cplx(1.0, 2.0), cplx(1.0, -2.0)};
    zeros.directions = CMat::Ones(1, 2);
    zeros.p_aux = zeros.q_aux = CMat::Zero(1, 2);
    io::write_spectral_zero_csv(zeros, dir.file("z.csv"));
    std::ifstream in(dir.file("z.csv"));
    std::string header;
    std::getline(in, header);
    CHECK(header == "re,im,direction_residual");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 2);
}
