// Realization containers for LTI systems (descriptor, standard and
// port-Hamiltonian forms), transfer-function and spectral-density
// evaluation, and sampled passivity / stability classification.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

#include "phl/linalg.hpp"

namespace phl::lti {

using SpMat = Eigen::SparseMatrix<double>;

// E x' = A x + B u, y = C x + D u. Entries may be complex; E = I and D = 0
// recover the standard and strictly proper forms.
struct DescriptorRealization {
    CMat E, A, B, C, D;

    DescriptorRealization() = default;
    DescriptorRealization(CMat E_, CMat A_, CMat B_, CMat C_, CMat D_);
    static DescriptorRealization standard(CMat A, CMat B, CMat C, CMat D);

    Index order() const { return A.rows(); }
    Index num_ports() const { return B.cols(); }
    bool is_real(double rel_tol = 1e-13) const;
    void validate() const;
};

// M x' = (J - R) Q x + (G - P) u, y = (G + P)^T Q x + (N + S) u.
// All blocks real; J skew, N skew, M SPD, Q PSD and the extended dissipation
// block [[R, P], [P^T, S]] PSD for a structurally passive model.
struct PHRealization {
    Mat M, Q, J, R, G, P, N, S;

    PHRealization() = default;
    PHRealization(Mat M_, Mat Q_, Mat J_, Mat R_, Mat G_, Mat P_, Mat N_, Mat S_);

    Index order() const { return J.rows(); }
    Index num_ports() const { return G.cols(); }
    Mat dissipation_block() const;  // [[R, P], [P^T, S]]

    struct StructureReport {
        bool ok = false;
        double j_skew_err = 0.0;       // relative
        double n_skew_err = 0.0;
        double m_sym_err = 0.0;
        double q_sym_err = 0.0;
        double m_min_eig = 0.0;
        double q_min_eig = 0.0;
        double dissipation_min_eig = 0.0;
        std::string summary;
    };
    // Checks the invariants above; PSD conditions are judged against
    // -rel_tol * ||.||_F of the block in question.
    StructureReport check_structure(double rel_tol = 1e-10) const;
};

struct TransferSample {
    cplx s;
    CMat value;
};

// Sparse real state space in descriptor form, used for large models (the
// assembled wave FOM) where dense storage is not an option.
struct SparseStateSpace {
    SpMat E, A;
    Mat B, C, D;

    Index order() const { return A.rows(); }
    Index num_ports() const { return B.cols(); }
};

enum class Stability { AsymptoticallyStable, Stable, Unstable };
enum class PassivityClass { StrictlyPassive, Passive, NotPassive, Undetermined };

const char* to_string(Stability s);
const char* to_string(PassivityClass c);

struct PassivityReport {
    PassivityClass classification = PassivityClass::Undetermined;
    Stability stability = Stability::Unstable;
    // (omega, smallest eigenvalue of the Hermitian part of Phi(i omega))
    std::vector<std::pair<double, double>> min_eig_curve;
    std::vector<cplx> poles;
};

// H(s); throws when the resolvent is numerically singular at s.
CMat eval_transfer(const DescriptorRealization& sys, cplx s);
CMat eval_transfer(const PHRealization& sys, cplx s);
CMat eval_transfer(const SparseStateSpace& sys, cplx s);

// Phi(s) = H(s) + H(-s)^T.
template <class System>
CMat spectral_density(const System& sys, cplx s) {
    return eval_transfer(sys, s) + eval_transfer(sys, -s).transpose();
}

DescriptorRealization ph_to_descriptor(const PHRealization& ph);

// Change of variables e = Q x; returns an equivalent realization with
// Q = I and the same transfer function. Q must be SPD and compatible with M
// (M Q^{-1} symmetric).
PHRealization to_coenergy(const PHRealization& ph);

PassivityReport classify_passivity(const DescriptorRealization& sys,
                                   const std::vector<double>& omega_grid,
                                   double rel_tol = 1e-10);
PassivityReport classify_passivity(const PHRealization& sys,
                                   const std::vector<double>& omega_grid,
                                   double rel_tol = 1e-10);

}  // namespace phl::lti
