// Passive port-Hamiltonian identification from tangential data: spectral
// zero computation through the block generalized eigenproblem, strictly
// passive data selection, the structured (Hermitian / skew-Hermitian)
// Loewner pencil, Cholesky normalization, pH extraction, and the full
// shift -> identify -> stabilize -> unshift pipeline for data generated by
// systems that are passive but not strictly so.
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phl/linalg.hpp"
#include "phl/loewner.hpp"
#include "phl/lti.hpp"
#include "phl/stabilization.hpp"
#include "phl/tangential.hpp"

namespace phl::passive {

struct SpectralZeroSet {
    std::vector<cplx> zeros;
    CMat directions;  // m x count, columns x_j with ||x_j|| = 1
    CMat p_aux;       // n x count eigenvector components, diagnostics
    CMat q_aux;       // n x count
    Vec residuals;    // ||Phi(xi_j) x_j|| when computed, else empty

    Index size() const { return static_cast<Index>(zeros.size()); }
};

// Structured pencil built from spectral-zero data: L Hermitian (expected
// positive definite), sL skew-Hermitian before the unshift step.
struct PassiveLoewnerPencil {
    CMat L, sL;   // r x r
    CMat V;       // r x m stacked left responses
    CMat W;       // m x r right responses
    CMat Lambda;  // r x r right points (diagonal; 2x2 blocks once realified)
    CMat Rdir;    // m x r right directions
    CMat Ldir;    // r x m stacked left directions
    Mat T;        // Cholesky factor with L = T^T T, set by normalize_ph
    bool realified = false;
    bool unshifted = false;

    Index order() const { return L.rows(); }
    Index num_ports() const { return W.rows(); }
};

// S = [[-A, -B], [C, D]] of a normalized (E = I) realization; its
// symmetric/skew split yields the pH blocks.
struct SMatrix {
    Mat S;
    Index n = 0;
    Index m = 0;
};

// Solves the block generalized eigenproblem
//   [[0, A, B], [A^T, 0, C^T], [B^T, C, D + D^T]] v = xi [[0, E, 0], [-E^T, 0, 0], [0, 0, 0]] v
// for the spectral zeros (finite eigenvalues) and their directions (the
// trailing eigenvector block). The realization must be real. When D + D^T
// is singular the trailing block degenerates and zeros drift to the axis or
// to infinity; the computation still runs so callers can observe it.
SpectralZeroSet spectral_zeros(const lti::DescriptorRealization& sys,
                               double inf_tol = 1e-12);

// Keeps zeros with Re > zero_tol_factor * max|xi|, sorted by |Im| with
// conjugate pairs adjacent (upper member first) and enforced exact
// conjugacy. Throws with the near-axis offenders when the count is not r.
SpectralZeroSet select_positive(const SpectralZeroSet& zeros, Index r,
                                double zero_tol_factor = 1e-9);

// Right data (xi_j, x_j, H(xi_j) x_j), left data (-conj(xi_i), x_i^H, -w_i^H).
std::pair<tangential::RightData, tangential::LeftData> build_passive_data(
    const SpectralZeroSet& zeros, const tangential::FrequencyResponse& model);

// Loewner pencil of the passive data; asserts Hermitian L / skew-Hermitian
// sL structure and throws (reporting the smallest eigenvalue) when L is not
// positive definite.
PassiveLoewnerPencil passive_loewner(const tangential::RightData& right,
                                     const tangential::LeftData& left);

// Same per-pair unitary on both sides; keeps L symmetric positive definite.
PassiveLoewnerPencil realify(const PassiveLoewnerPencil& pencil);

// sL <- sL - Ldir D_s Rdir, V <- V - Ldir D_s, W <- W - D_s Rdir.
PassiveLoewnerPencil unshift_pencil(const PassiveLoewnerPencil& pencil, const Mat& D_s);

// Cholesky L = T^T T and congruence to the normalized form
// (I, T A T^{-1}, T B, C T^{-1}, D_s); returns the realization and the
// assembled S matrix. Fails with a remediation hint when L is indefinite.
std::pair<lti::DescriptorRealization, SMatrix> normalize_ph(PassiveLoewnerPencil& pencil,
                                                            const Mat& D_s);

// [[ -J, -G], [G^T, N]] = (S - S^T)/2 and [[R, P], [P^T, S]] = (S + S^T)/2,
// with M = Q = I.
lti::PHRealization extract_ph(const SMatrix& smat);

struct IdentifyOptions {
    int order = -1;         // -1: rank-revealed order
    double rank_tol = 1e-10;
    stabilization::StabilizeMode stabilize = stabilization::StabilizeMode::Nehari;
    // The shift is the native feedthrough of strictly passive data: skip the
    // final S <- S - D_s so the model keeps it.
    bool native_feedthrough = false;
    double zero_tol_factor = 1e-9;
    bool close_conjugates = true;
};

struct IdentifyDiagnostics {
    loewner::OrderReport order_report;
    std::optional<stabilization::ProjectionResult> stabilization;
    SpectralZeroSet zeros_all;
    SpectralZeroSet zeros_selected;
    double loewner_hermitian_err = 0.0;
    double shifted_loewner_skew_err = 0.0;
    double passive_gram_min_eig = 0.0;
    double max_zero_residual = 0.0;  // max_j ||Phi(xi_j) x_j||
    std::vector<std::string> warnings;
};

struct IdentifyResult {
    lti::PHRealization ph;
    lti::DescriptorRealization loewner_model;      // plain interpolant of the input data
    lti::DescriptorRealization normalized_model;   // (I, TAT^{-1}, TB, CT^{-1}, D_s)
    IdentifyDiagnostics diag;
};

// The twelve-step identification: shift, Loewner interpolation at order r,
// standard form with feedthrough D_s, stable projection, spectral zeros,
// positive selection, passive pencil, unshift, Cholesky, normalization,
// extraction, shift-back. D_s + D_s^T should be positive definite; a
// singular (e.g. zero) shift is allowed through with a warning so the
// downstream failure modes stay observable.
IdentifyResult identify_ph(const tangential::RightData& right,
                           const tangential::LeftData& left, const Mat& D_s,
                           const IdentifyOptions& options = {});

}  // namespace phl::passive
