// Dense linear-algebra kernels shared across the library: Lyapunov solves,
// ordered Schur forms, spectral splits and a few small matrix helpers that
// Eigen does not ship.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <vector>

namespace phl {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;
using Index = Eigen::Index;

namespace linalg {

// Relative Frobenius distance ||a - b|| / max(||a||, ||b||), 0 for two zeros.
double rel_fro_err(const CMat& a, const CMat& b);
double rel_fro_err(const Mat& a, const Mat& b);

// ||imag(a)|| / max(||a||, floor); realness diagnostic.
double imag_fraction(const CMat& a);

// Drops an imaginary part known to be roundoff; throws if it exceeds
// rel_tol * ||a||.
Mat require_real(const CMat& a, double rel_tol, const char* what);

// Hermitian / skew-Hermitian deviation, relative to ||a||.
double hermitian_err(const CMat& a);
double skew_hermitian_err(const CMat& a);

// Eigenvalues of the pencil (A, E); E must be numerically invertible.
std::vector<cplx> pencil_eigenvalues(const CMat& A, const CMat& E);

// Solves A X + X A^H + W = 0 for Hurwitz A via Bartels-Stewart on the
// complex Schur form. W is Hermitian; the result is Hermitian.
CMat lyapunov(const CMat& A, const CMat& W);

// Symmetric PSD square root with eigenvalue clamping at zero.
CMat sqrt_psd(const CMat& a);

// Reorders a complex Schur decomposition A = U T U^H in place so that the
// eigenvalues satisfying `select` occupy the leading diagonal positions.
// Returns the number of selected eigenvalues.
Index order_schur(CMat& U, CMat& T, const std::function<bool(cplx)>& select);

// Orthonormal real basis of the column span of [Re(Z), Im(Z)], truncated to
// `dim` columns. Used to realify conjugation-closed invariant subspaces.
Mat real_span_basis(const CMat& Z, Index dim);

// Largest singular value.
double spectral_norm(const CMat& a);

// Logarithmically spaced grid, endpoints included.
std::vector<double> log_grid(double omega_min, double omega_max, int count);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written by index so the output ordering stays deterministic.
void parallel_for(Index n, int threads, const std::function<void(Index)>& fn);

}  // namespace linalg
}  // namespace phl
