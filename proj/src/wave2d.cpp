#include "phl/wave2d.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace phl::wave {

double Mesh::triangle_area(size_t t) const {
    const auto& tri = triangles[t];
    const Eigen::Vector2d a = vertices[static_cast<size_t>(tri[0])];
    const Eigen::Vector2d b = vertices[static_cast<size_t>(tri[1])];
    const Eigen::Vector2d c = vertices[static_cast<size_t>(tri[2])];
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

void Mesh::validate() const {
    for (size_t t = 0; t < triangles.size(); ++t) {
        if (triangle_area(t) <= 0.0) {
            throw std::invalid_argument("Mesh: non-positive triangle area at " + std::to_string(t));
        }
    }
    if (boundary_edges.size() != boundary_vertices.size()) {
        throw std::invalid_argument("Mesh: boundary loop not closed");
    }
    for (size_t e = 0; e < boundary_edges.size(); ++e) {
        const int a = boundary_edges[e][0];
        const int next = boundary_edges[(e + 1) % boundary_edges.size()][0];
        if (boundary_edges[e][1] != next || a != boundary_vertices[e]) {
            throw std::invalid_argument("Mesh: boundary edges are not a consistent CCW loop");
        }
    }
}

Mesh mesh_lshape(double h) {
    if (!(h > 0.0) || h > 1.0) {
        throw std::invalid_argument("mesh_lshape: need 0 < h <= 1 (domain feature size)");
    }
    const int k = static_cast<int>(std::llround(1.0 / h));
    if (std::abs(k * h - 1.0) > 1e-12) {
        throw std::invalid_argument("mesh_lshape: h must divide the unit leg length");
    }
    const int n_seg = 2 * k;  // segments per side of the bounding square
    const double step = 1.0 / k;

    Mesh mesh;
    mesh.domain_tag = "l-shape";
    mesh.h = step;

    // Grid nodes of [0,2]^2 with the open upper-right quadrant removed.
    std::vector<std::vector<int>> node_id(static_cast<size_t>(n_seg + 1),
                                          std::vector<int>(static_cast<size_t>(n_seg + 1), -1));
    for (int j = 0; j <= n_seg; ++j) {
        for (int i = 0; i <= n_seg; ++i) {
            if (i > k && j > k) continue;
            node_id[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                static_cast<int>(mesh.vertices.size());
            mesh.vertices.emplace_back(i * step, j * step);
        }
    }
    auto id = [&](int i, int j) { return node_id[static_cast<size_t>(i)][static_cast<size_t>(j)]; };

    // Two CCW triangles per retained cell, split along the main diagonal.
    for (int j = 0; j < n_seg; ++j) {
        for (int i = 0; i < n_seg; ++i) {
            if (i >= k && j >= k) continue;
            const int v00 = id(i, j);
            const int v10 = id(i + 1, j);
            const int v11 = id(i + 1, j + 1);
            const int v01 = id(i, j + 1);
            mesh.triangles.push_back({v00, v10, v11});
            mesh.triangles.push_back({v00, v11, v01});
        }
    }

    // Boundary loop, counterclockwise from the origin corner.
    auto walk = [&](int i0, int j0, int di, int dj, int count) {
        for (int s = 0; s < count; ++s) {
            const int a = id(i0 + s * di, j0 + s * dj);
            const int b = id(i0 + (s + 1) * di, j0 + (s + 1) * dj);
            mesh.boundary_vertices.push_back(a);
            mesh.boundary_edges.push_back({a, b});
        }
    };
    walk(0, 0, 1, 0, n_seg);      // (0,0) -> (2,0)
    walk(n_seg, 0, 0, 1, k);      // (2,0) -> (2,1)
    walk(n_seg, k, -1, 0, k);     // (2,1) -> (1,1)
    walk(k, k, 0, 1, k);          // (1,1) -> (1,2)
    walk(k, n_seg, -1, 0, k);     // (1,2) -> (0,2)
    walk(0, n_seg, 0, -1, n_seg); // (0,2) -> (0,0)

    mesh.validate();
    return mesh;
}

namespace {

// Gradients of the three P1 hat functions on a triangle; constant vectors.
std::array<Eigen::Vector2d, 3> p1_gradients(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                            const Eigen::Vector2d& c, double area) {
    const double f = 1.0 / (2.0 * area);
    return {Eigen::Vector2d(f * (b.y() - c.y()), f * (c.x() - b.x())),
            Eigen::Vector2d(f * (c.y() - a.y()), f * (a.x() - c.x())),
            Eigen::Vector2d(f * (a.y() - b.y()), f * (b.x() - a.x()))};
}

}  // namespace

FEMatrices assemble(const Mesh& mesh, const WaveParams& params) {
    mesh.validate();
    const size_t nt = mesh.triangles.size();
    auto check_field = [&](size_t sz, const char* what) {
        if (sz != 0 && sz != nt) {
            throw std::invalid_argument(std::string("assemble: per-element field '") + what +
                                        "' has wrong size");
        }
    };
    check_field(params.rho_per_element.size(), "rho");
    check_field(params.eps_per_element.size(), "eps");
    check_field(params.T_per_element.size(), "T");

    FEMatrices fem;
    fem.N_q = 2 * static_cast<Index>(nt);
    fem.N_p = mesh.num_vertices();
    fem.N_bnd = mesh.num_boundary();

    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> t_mq, t_mp, t_meps, t_g;
    t_mq.reserve(4 * nt);
    t_mp.reserve(9 * nt);
    t_meps.reserve(9 * nt);
    t_g.reserve(6 * nt);

    for (size_t e = 0; e < nt; ++e) {
        const auto& tri = mesh.triangles[e];
        const Eigen::Vector2d a = mesh.vertices[static_cast<size_t>(tri[0])];
        const Eigen::Vector2d b = mesh.vertices[static_cast<size_t>(tri[1])];
        const Eigen::Vector2d c = mesh.vertices[static_cast<size_t>(tri[2])];
        const double area = mesh.triangle_area(e);
        const double rho = params.rho_at(e);
        const double eps = params.eps_at(e);
        const Eigen::Matrix2d& T = params.tensor_at(e);
        if (!(rho > 0.0) || eps < 0.0) {
            throw std::invalid_argument("assemble: need rho > 0 and eps >= 0");
        }
        Eigen::Matrix2d Tinv = T.inverse();
        if (!(T.determinant() > 0.0) || !(T(0, 0) > 0.0) ||
            (T - T.transpose()).norm() > 1e-12 * T.norm()) {
            throw std::invalid_argument("assemble: T must be symmetric positive definite");
        }

        // M_q: per-element 2x2 block, integral of e_c . T^{-1} . e_d.
        const Index q0 = 2 * static_cast<Index>(e);
        for (int cc = 0; cc < 2; ++cc) {
            for (int dd = 0; dd < 2; ++dd) {
                t_mq.emplace_back(q0 + cc, q0 + dd, area * Tinv(cc, dd));
            }
        }

        // P1 mass matrices: (area/12) [[2,1,1],[1,2,1],[1,1,2]].
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double mass = area / 12.0 * (i == j ? 2.0 : 1.0);
                t_mp.emplace_back(tri[static_cast<size_t>(i)], tri[static_cast<size_t>(j)],
                                  rho * mass);
                if (eps != 0.0) {
                    t_meps.emplace_back(tri[static_cast<size_t>(i)], tri[static_cast<size_t>(j)],
                                        eps * mass);
                }
            }
        }

        // G: integral of e_c . grad(phi_j) = area * (grad phi_j)_c.
        const auto grads = p1_gradients(a, b, c, area);
        for (int j = 0; j < 3; ++j) {
            for (int cc = 0; cc < 2; ++cc) {
                t_g.emplace_back(q0 + cc, tri[static_cast<size_t>(j)],
                                 area * grads[static_cast<size_t>(j)](cc));
            }
        }
    }

    // Boundary: P1 mass per edge and the trace coupling B.
    std::vector<Triplet> t_mb, t_b;
    std::map<int, int> bnd_index;  // volume vertex -> boundary index
    for (size_t kk = 0; kk < mesh.boundary_vertices.size(); ++kk) {
        bnd_index[mesh.boundary_vertices[kk]] = static_cast<int>(kk);
    }
    for (const auto& edge : mesh.boundary_edges) {
        const int va = edge[0];
        const int vb = edge[1];
        const int ka = bnd_index.at(va);
        const int kb = bnd_index.at(vb);
        const double len =
            (mesh.vertices[static_cast<size_t>(vb)] - mesh.vertices[static_cast<size_t>(va)]).norm();
        const double diag = len / 3.0;
        const double off = len / 6.0;
        t_mb.emplace_back(ka, ka, diag);
        t_mb.emplace_back(kb, kb, diag);
        t_mb.emplace_back(ka, kb, off);
        t_mb.emplace_back(kb, ka, off);
        t_b.emplace_back(va, ka, diag);
        t_b.emplace_back(vb, kb, diag);
        t_b.emplace_back(va, kb, off);
        t_b.emplace_back(vb, ka, off);
    }

    fem.M_q.resize(fem.N_q, fem.N_q);
    fem.M_q.setFromTriplets(t_mq.begin(), t_mq.end());
    fem.M_p.resize(fem.N_p, fem.N_p);
    fem.M_p.setFromTriplets(t_mp.begin(), t_mp.end());
    fem.M_eps.resize(fem.N_p, fem.N_p);
    fem.M_eps.setFromTriplets(t_meps.begin(), t_meps.end());
    fem.M_bnd.resize(fem.N_bnd, fem.N_bnd);
    fem.M_bnd.setFromTriplets(t_mb.begin(), t_mb.end());
    fem.G.resize(fem.N_q, fem.N_p);
    fem.G.setFromTriplets(t_g.begin(), t_g.end());
    fem.B.resize(fem.N_p, fem.N_bnd);
    fem.B.setFromTriplets(t_b.begin(), t_b.end());
    return fem;
}

lti::PHRealization fom_realization(const FEMatrices& fem) {
    const Index nq = fem.N_q;
    const Index np = fem.N_p;
    const Index n = nq + np;
    const Index m = fem.N_bnd;

    lti::PHRealization ph;
    ph.M = Mat::Zero(n, n);
    ph.M.topLeftCorner(nq, nq) = Mat(fem.M_q);
    ph.M.bottomRightCorner(np, np) = Mat(fem.M_p);
    ph.Q = Mat::Identity(n, n);
    ph.J = Mat::Zero(n, n);
    ph.J.topRightCorner(nq, np) = Mat(fem.G);
    ph.J.bottomLeftCorner(np, nq) = -Mat(fem.G).transpose();
    ph.R = Mat::Zero(n, n);
    ph.R.bottomRightCorner(np, np) = Mat(fem.M_eps);
    ph.G = Mat::Zero(n, m);
    ph.G.bottomRows(np) = Mat(fem.B);
    ph.P = Mat::Zero(n, m);
    ph.N = Mat::Zero(m, m);
    ph.S = Mat::Zero(m, m);
    return ph;
}

namespace {

SpMat state_mass(const FEMatrices& fem) {
    SpMat M(fem.state_dim(), fem.state_dim());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(fem.M_q.nonZeros() + fem.M_p.nonZeros()));
    for (int k = 0; k < fem.M_q.outerSize(); ++k) {
        for (SpMat::InnerIterator it(fem.M_q, k); it; ++it) {
            trips.emplace_back(it.row(), it.col(), it.value());
        }
    }
    for (int k = 0; k < fem.M_p.outerSize(); ++k) {
        for (SpMat::InnerIterator it(fem.M_p, k); it; ++it) {
            trips.emplace_back(fem.N_q + it.row(), fem.N_q + it.col(), it.value());
        }
    }
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

// (J - R) over the (e_q, e_p) state.
SpMat state_dynamics(const FEMatrices& fem) {
    SpMat A(fem.state_dim(), fem.state_dim());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(2 * fem.G.nonZeros() + fem.M_eps.nonZeros()));
    for (int k = 0; k < fem.G.outerSize(); ++k) {
        for (SpMat::InnerIterator it(fem.G, k); it; ++it) {
            trips.emplace_back(it.row(), fem.N_q + it.col(), it.value());
            trips.emplace_back(fem.N_q + it.col(), it.row(), -it.value());
        }
    }
    for (int k = 0; k < fem.M_eps.outerSize(); ++k) {
        for (SpMat::InnerIterator it(fem.M_eps, k); it; ++it) {
            trips.emplace_back(fem.N_q + it.row(), fem.N_q + it.col(), -it.value());
        }
    }
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
}

void check_channels(const std::vector<int>& channels, Index m) {
    if (channels.empty()) throw std::invalid_argument("channels: empty selection");
    for (int c : channels) {
        if (c < 1 || c > m) {
            throw std::invalid_argument("channels: index " + std::to_string(c) +
                                        " outside 1.." + std::to_string(m));
        }
    }
}

}  // namespace

lti::SparseStateSpace fom_sparse(const FEMatrices& fem, const std::vector<int>& channels) {
    check_channels(channels, fem.N_bnd);
    const Index ms = static_cast<Index>(channels.size());
    lti::SparseStateSpace sys;
    sys.E = state_mass(fem);
    sys.A = state_dynamics(fem);
    sys.B = Mat::Zero(fem.state_dim(), ms);
    const Mat B_full(fem.B);
    for (Index j = 0; j < ms; ++j) {
        sys.B.col(j).tail(fem.N_p) = B_full.col(channels[static_cast<size_t>(j)] - 1);
    }
    sys.C = sys.B.transpose();
    sys.D = Mat::Zero(ms, ms);
    return sys;
}

double discrete_hamiltonian(const FEMatrices& fem, const Vec& e_q, const Vec& e_p) {
    if (e_q.size() != fem.N_q || e_p.size() != fem.N_p) {
        throw std::invalid_argument("discrete_hamiltonian: state dimension mismatch");
    }
    return 0.5 * e_q.dot(fem.M_q * e_q) + 0.5 * e_p.dot(fem.M_p * e_p);
}

MidpointStepper::MidpointStepper(const FEMatrices& fem, double dt) : fem_(fem), dt_(dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("MidpointStepper: dt must be positive");
    const SpMat M = state_mass(fem);
    const SpMat A = state_dynamics(fem);
    SpMat minus = M - (0.5 * dt) * A;
    plus_ = M + (0.5 * dt) * A;
    minus.makeCompressed();
    solver_.compute(minus);
    if (solver_.info() != Eigen::Success) {
        throw std::runtime_error("MidpointStepper: factorization failed");
    }
    bnd_solver_.compute(fem.M_bnd);
    if (bnd_solver_.info() != Eigen::Success) {
        throw std::runtime_error("MidpointStepper: boundary mass factorization failed");
    }
}

std::pair<State, Vec> MidpointStepper::step(const State& state, const Vec& u_bnd) const {
    if (state.e_q.size() != fem_.N_q || state.e_p.size() != fem_.N_p ||
        u_bnd.size() != fem_.N_bnd) {
        throw std::invalid_argument("MidpointStepper: dimension mismatch");
    }
    Vec z(fem_.state_dim());
    z << state.e_q, state.e_p;
    Vec forcing = Vec::Zero(fem_.state_dim());
    forcing.tail(fem_.N_p) = fem_.B * u_bnd;
    Vec rhs = plus_ * z + dt_ * forcing;
    Vec z_next = solver_.solve(rhs);
    if (solver_.info() != Eigen::Success) {
        throw std::runtime_error("MidpointStepper: solve failed");
    }
    State out;
    out.e_q = z_next.head(fem_.N_q);
    out.e_p = z_next.tail(fem_.N_p);

    // Physical boundary output M_bnd y = B^T e_p at the midpoint state.
    Vec e_p_mid = 0.5 * (state.e_p + out.e_p);
    Vec y = bnd_solver_.solve(fem_.B.transpose() * e_p_mid);
    return {std::move(out), std::move(y)};
}

std::pair<State, Vec> step_midpoint(const FEMatrices& fem, const State& state, const Vec& u_bnd,
                                    double dt) {
    return MidpointStepper(fem, dt).step(state, u_bnd);
}

std::vector<lti::TransferSample> sample_fom(const FEMatrices& fem,
                                            const std::vector<double>& omega_grid,
                                            const std::vector<int>& channels, int threads) {
    check_channels(channels, fem.N_bnd);
    const lti::SparseStateSpace sys = fom_sparse(fem, channels);
    std::vector<lti::TransferSample> samples(omega_grid.size());
    std::exception_ptr failure;
    std::mutex failure_mutex;
    linalg::parallel_for(static_cast<Index>(omega_grid.size()), threads, [&](Index i) {
        try {
            const cplx s(0.0, omega_grid[static_cast<size_t>(i)]);
            samples[static_cast<size_t>(i)] = {s, lti::eval_transfer(sys, s)};
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);
    return samples;
}

}  // namespace phl::wave
