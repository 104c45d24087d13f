// Closest-stable projection onto RH-infinity: additive stable/antistable
// separation, Hankel Gramians of the antistable part, and the optimal
// Nehari (AAK) stable approximation whose L-infinity error equals the
// largest Hankel singular value.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "phl/linalg.hpp"
#include "phl/lti.hpp"

namespace phl::stabilization {

struct AdditiveSplit {
    lti::DescriptorRealization stable;      // spectrum in the open left half-plane
    lti::DescriptorRealization antistable;  // spectrum in the open right half-plane
    std::vector<cplx> stable_eigs;
    std::vector<cplx> antistable_eigs;
    std::vector<std::string> warnings;
};

struct ProjectionResult {
    lti::DescriptorRealization projected;
    double achieved_error = 0.0;  // grid L-infinity estimate of ||H - P(H)||
    double hankel_bound = 0.0;    // largest Hankel singular value of the antistable part
    std::vector<cplx> eigs_before;
    std::vector<cplx> eigs_after;
    bool used_fallback = false;
    std::vector<std::string> warnings;
};

enum class StabilizeMode { Nehari, Reflect, Off };

// Converts to standard form (E must be invertible) and block-diagonalizes
// along the imaginary axis via an ordered Schur form. Eigenvalues within
// axis_tol_factor * spectral radius of the axis are reflected to the stable
// side first, with a warning. The feedthrough goes to the stable part.
AdditiveSplit separate(const lti::DescriptorRealization& sys,
                       double axis_tol_factor = 1e-8);

// Controllability and observability Gramians of the reflected system
// G(-s); the input must have its whole spectrum in the open right
// half-plane. Largest Hankel singular value = sqrt(lambda_max(P Q)).
std::pair<CMat, CMat> hankel_gramians(const lti::DescriptorRealization& antistable);

double largest_hankel_sv(const CMat& P, const CMat& Q);

// Best stable approximation in the L-infinity sense. Stable inputs are
// returned unchanged with zero error. Mode Reflect flips antistable
// eigenvalues across the axis instead of running the AAK construction
// (robust but suboptimal); mode Off returns the input untouched.
ProjectionResult p_infinity(const lti::DescriptorRealization& sys,
                            StabilizeMode mode = StabilizeMode::Nehari);

}  // namespace phl::stabilization
