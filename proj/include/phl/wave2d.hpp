// Structure-preserving FEM discretization of the damped 2D wave equation in
// co-energy form on an L-shaped membrane: vector-valued piecewise-constant
// stresses, continuous piecewise-linear velocities and piecewise-linear
// boundary traces. The gradient of the velocity family lies exactly in the
// stress family, so the discrete power balance holds to machine precision.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "phl/linalg.hpp"
#include "phl/lti.hpp"

namespace phl::wave {

using SpMat = Eigen::SparseMatrix<double>;

struct WaveParams {
    double rho = 1.0;
    double eps = 1e-3;
    Eigen::Matrix2d T_tensor = Eigen::Matrix2d::Identity();
    // Optional per-element fields; empty means uniform.
    std::vector<double> rho_per_element;
    std::vector<double> eps_per_element;
    std::vector<Eigen::Matrix2d> T_per_element;

    double rho_at(size_t e) const { return rho_per_element.empty() ? rho : rho_per_element[e]; }
    double eps_at(size_t e) const { return eps_per_element.empty() ? eps : eps_per_element[e]; }
    const Eigen::Matrix2d& tensor_at(size_t e) const {
        return T_per_element.empty() ? T_tensor : T_per_element[e];
    }
};

struct Mesh {
    std::vector<Eigen::Vector2d> vertices;
    std::vector<std::array<int, 3>> triangles;       // counterclockwise
    std::vector<std::array<int, 2>> boundary_edges;  // ordered CCW loop
    std::vector<int> boundary_vertices;              // CCW from the origin corner
    std::string domain_tag;
    double h = 0.0;

    Index num_vertices() const { return static_cast<Index>(vertices.size()); }
    Index num_triangles() const { return static_cast<Index>(triangles.size()); }
    Index num_boundary() const { return static_cast<Index>(boundary_vertices.size()); }
    double triangle_area(size_t t) const;
    void validate() const;
};

struct FEMatrices {
    SpMat M_q;    // N_q x N_q, SPD
    SpMat M_p;    // N_p x N_p, SPD
    SpMat M_eps;  // N_p x N_p, PSD
    SpMat M_bnd;  // N_bnd x N_bnd, SPD
    SpMat G;      // N_q x N_p
    SpMat B;      // N_p x N_bnd
    Index N_q = 0, N_p = 0, N_bnd = 0;

    Index state_dim() const { return N_q + N_p; }
};

struct HamiltonianTrace {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> supplied_power;
    std::vector<double> dissipated_power;
};

struct State {
    Vec e_q, e_p;
};

// Structured triangulation of [0,2]^2 minus the open square (1,2]^2 with
// target edge length h (h must divide 1); boundary ordered counterclockwise
// starting at the origin corner.
Mesh mesh_lshape(double h);

// Exact closed-form element integrals of all mass, damping, boundary and
// gradient-coupling matrices.
FEMatrices assemble(const Mesh& mesh, const WaveParams& params);

// Dense pH realization M = blkdiag(M_q, M_p), J = [[0, G], [-G^T, 0]],
// R = blkdiag(0, M_eps), G_port = [0; B], Q = I. Outputs carry the
// M_bnd-weighted collocated trace. Intended for small meshes; the sampling
// path below stays sparse.
lti::PHRealization fom_realization(const FEMatrices& fem);

// Sparse descriptor form restricted to the selected boundary channels
// (1-based indices along the CCW boundary ordering).
lti::SparseStateSpace fom_sparse(const FEMatrices& fem, const std::vector<int>& channels);

// H^d = 1/2 e_q^T M_q e_q + 1/2 e_p^T M_p e_p.
double discrete_hamiltonian(const FEMatrices& fem, const Vec& e_q, const Vec& e_p);

// Implicit midpoint step of M z' = (J - R) z + B_in u; caches the sparse
// factorization for a fixed step size. step() returns the new state and the
// boundary output y at the midpoint.
class MidpointStepper {
public:
    MidpointStepper(const FEMatrices& fem, double dt);
    std::pair<State, Vec> step(const State& state, const Vec& u_bnd) const;

private:
    const FEMatrices& fem_;
    double dt_;
    SpMat plus_;  // M + dt/2 (J - R)
    Eigen::SparseLU<SpMat> solver_;
    Eigen::SimplicialLDLT<SpMat> bnd_solver_;
};

std::pair<State, Vec> step_midpoint(const FEMatrices& fem, const State& state,
                                    const Vec& u_bnd, double dt);

// Sparse frequency sweep H(i omega) over the selected channels; one complex
// sparse factorization per grid point, grid order preserved.
std::vector<lti::TransferSample> sample_fom(const FEMatrices& fem,
                                            const std::vector<double>& omega_grid,
                                            const std::vector<int>& channels,
                                            int threads = 1);

}  // namespace phl::wave
