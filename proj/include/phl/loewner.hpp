// Loewner and shifted-Loewner pencil assembly from tangential data,
// Sylvester-residual verification, rank-revealing order detection, reduced
// realization construction, and realification of conjugate-closed pencils.
#pragma once

#include <string>
#include <utility>

#include "phl/linalg.hpp"
#include "phl/lti.hpp"
#include "phl/tangential.hpp"

namespace phl::loewner {

// Pencil (L, sL) with the generating data kept in matrix form. After
// realify() the point matrices Lambda/Mu carry 2x2 rotation blocks instead
// of a complex diagonal; all stored matrices stay mutually consistent.
struct LoewnerPencil {
    CMat L;       // q x k Loewner matrix
    CMat sL;      // q x k shifted Loewner matrix
    CMat V;       // q x m stacked left responses (row i = v_i^T)
    CMat W;       // m x k right responses
    CMat Lambda;  // k x k right points
    CMat Mu;      // q x q left points
    CMat Rdir;    // m x k right directions
    CMat Ldir;    // q x m stacked left directions (row i = l_i^T)
    bool realified = false;

    Index rows() const { return L.rows(); }
    Index cols() const { return L.cols(); }
    Index num_ports() const { return W.rows(); }
};

struct OrderReport {
    int r = 0;                // rational order, rank of the concatenations
    int nu = 0;               // McMillan degree, rank of L
    Vec singular_values;      // spectrum of [L, sL]
    Vec singular_values_col;  // spectrum of [L; sL]
    double tol_used = 0.0;
    bool rank_mismatch = false;
    std::string note;
};

// Entrywise Eq.-(5)-style divided differences; throws when a right and a
// left point coincide.
LoewnerPencil build_loewner(const tangential::RightData& right,
                            const tangential::LeftData& left);

// Relative Frobenius residuals of the two Sylvester identities
// Mu L - L Lambda = V R - L_dir W and Mu sL - sL Lambda = Mu V R - L_dir W Lambda.
std::pair<double, double> sylvester_residual(const LoewnerPencil& pencil);

// Numerical ranks of [L, sL] / [L; sL] (rational order r, must agree) and of
// L (McMillan degree nu), with singular values >= tol * sigma_max counted.
OrderReport detect_orders(const LoewnerPencil& pencil, double tol = 1e-10);

// Projects onto the dominant rank-r subspaces of the concatenations and
// returns (E, A, B, C, D) = (-Y^H L X, -Y^H sL X, Y^H V, W X, 0).
lti::DescriptorRealization reduce_realization(const LoewnerPencil& pencil, int r,
                                              double tol = 1e-10);

// Applies the block-diagonal unitary with per-conjugate-pair blocks
// (1/sqrt(2)) [[1, 1], [i, -i]] on both sides; requires conjugate-closed
// data with pairs adjacent. Residual imaginary parts above 1e-10 relative
// signal an unclosed set and raise an error.
LoewnerPencil realify(const LoewnerPencil& pencil);

// Unitary k x k realification map for a conjugate-adjacent point list; the
// same transform realifies every object indexed by these points.
CMat realifier(const CVec& points);

}  // namespace phl::loewner
