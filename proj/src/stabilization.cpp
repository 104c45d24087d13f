#include "phl/stabilization.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace phl::stabilization {

namespace {

struct StandardForm {
    CMat A, B, C, D;
    bool was_real = false;
};

StandardForm to_standard(const lti::DescriptorRealization& sys) {
    StandardForm out;
    Eigen::PartialPivLU<CMat> lu(sys.E);
    out.A = lu.solve(sys.A);
    out.B = lu.solve(sys.B);
    if (!out.A.allFinite() ||
        (sys.E * out.A - sys.A).norm() > 1e-8 * std::max(sys.A.norm(), 1.0)) {
        throw std::runtime_error("separate: E is numerically singular; cannot standardize");
    }
    out.C = sys.C;
    out.D = sys.D;
    out.was_real = sys.is_real();
    return out;
}

// Reflects eigenvalues inside the axis band to Re <= 0 via a full
// eigendecomposition; keeps conjugate symmetry for real inputs.
CMat reflect_band_eigenvalues(const CMat& A, double band,
                              const std::function<cplx(cplx)>& map_eig,
                              std::vector<std::string>& warnings, const char* reason) {
    Eigen::ComplexEigenSolver<CMat> es(A);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("separate: eigen decomposition failed");
    }
    CVec vals = es.eigenvalues();
    bool touched = false;
    for (Index i = 0; i < vals.size(); ++i) {
        const cplx mapped = map_eig(vals(i));
        if (mapped != vals(i)) {
            touched = true;
            vals(i) = mapped;
        }
    }
    if (!touched) return A;
    warnings.push_back(std::string(reason) + " (band " + std::to_string(band) + ")");
    Eigen::PartialPivLU<CMat> lu(es.eigenvectors());
    CMat A_new = es.eigenvectors() * vals.asDiagonal() * lu.inverse();
    return A_new;
}

std::vector<cplx> eigenvalues_of(const CMat& A) {
    if (A.rows() == 0) return {};
    Eigen::ComplexEigenSolver<CMat> es(A, /*computeEigenvectors=*/false);
    return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

lti::DescriptorRealization make_standard_sys(CMat A, CMat B, CMat C, CMat D, bool realify) {
    if (realify) {
        A = linalg::require_real(A, 1e-8, "separate part A").cast<cplx>();
        B = linalg::require_real(B, 1e-8, "separate part B").cast<cplx>();
        C = linalg::require_real(C, 1e-8, "separate part C").cast<cplx>();
        D = linalg::require_real(D, 1e-8, "separate part D").cast<cplx>();
    }
    lti::DescriptorRealization sys;
    sys.E = CMat::Identity(A.rows(), A.rows());
    sys.A = std::move(A);
    sys.B = std::move(B);
    sys.C = std::move(C);
    sys.D = std::move(D);
    return sys;
}

}  // namespace

AdditiveSplit separate(const lti::DescriptorRealization& sys, double axis_tol_factor) {
    AdditiveSplit split;
    StandardForm std_form = to_standard(sys);
    const Index n = std_form.A.rows();
    const Index m = sys.num_ports();

    double radius = 0.0;
    for (const cplx& ev : eigenvalues_of(std_form.A)) radius = std::max(radius, std::abs(ev));
    const double band = axis_tol_factor * std::max(radius, 1e-300);

    CMat A = reflect_band_eigenvalues(
        std_form.A, band,
        [band](cplx ev) {
            if (std::abs(ev.real()) <= band) {
                return cplx(-std::max(std::abs(ev.real()), band), ev.imag());
            }
            return ev;
        },
        split.warnings, "separate: eigenvalues within the axis band reflected to the stable side");

    Eigen::ComplexSchur<CMat> schur(A);
    if (schur.info() != Eigen::Success) {
        throw std::runtime_error("separate: Schur decomposition failed");
    }
    CMat U = schur.matrixU();
    CMat T = schur.matrixT();
    auto is_stable = [](cplx ev) { return ev.real() < 0.0; };
    const Index n_s = linalg::order_schur(U, T, is_stable);
    const Index n_u = n - n_s;

    // Invariant bases for both spectral classes; realified when the input is
    // real (conjugate-symmetric spectrum within each class).
    CMat basis_s = U.leftCols(n_s);
    CMat T_flip = T;
    CMat U_flip = U;
    linalg::order_schur(U_flip, T_flip, [](cplx ev) { return ev.real() >= 0.0; });
    CMat basis_u = U_flip.leftCols(n_u);

    CMat X(n, n);
    if (std_form.was_real) {
        Mat xb(n, n);
        if (n_s > 0) xb.leftCols(n_s) = linalg::real_span_basis(basis_s, n_s);
        if (n_u > 0) xb.rightCols(n_u) = linalg::real_span_basis(basis_u, n_u);
        X = xb.cast<cplx>();
    } else {
        X.leftCols(n_s) = basis_s;
        X.rightCols(n_u) = basis_u;
    }

    Eigen::PartialPivLU<CMat> lu(X);
    CMat A_bd = lu.solve(A * X);
    CMat B_bd = lu.solve(std_form.B);
    CMat C_bd = std_form.C * X;

    const double cross = std::max(A_bd.topRightCorner(n_s, n_u).norm(),
                                  A_bd.bottomLeftCorner(n_u, n_s).norm());
    if (cross > 1e-8 * std::max(A_bd.norm(), 1.0)) {
        throw std::runtime_error("separate: block-diagonalization residual too large");
    }

    split.stable = make_standard_sys(A_bd.topLeftCorner(n_s, n_s), B_bd.topRows(n_s),
                                     C_bd.leftCols(n_s), std_form.D, std_form.was_real);
    split.antistable = make_standard_sys(A_bd.bottomRightCorner(n_u, n_u), B_bd.bottomRows(n_u),
                                         C_bd.rightCols(n_u), CMat::Zero(m, m),
                                         std_form.was_real);
    split.stable_eigs = eigenvalues_of(split.stable.A);
    split.antistable_eigs = eigenvalues_of(split.antistable.A);
    for (const cplx& ev : split.antistable_eigs) {
        if (ev.real() <= 0.0) {
            throw std::runtime_error("separate: antistable block contains a stable eigenvalue");
        }
    }
    return split;
}

std::pair<CMat, CMat> hankel_gramians(const lti::DescriptorRealization& antistable) {
    if (antistable.order() == 0) return {CMat(0, 0), CMat(0, 0)};
    for (const cplx& ev : eigenvalues_of(antistable.A)) {
        if (ev.real() <= 0.0) {
            throw std::invalid_argument(
                "hankel_gramians: spectrum must lie in the open right half-plane");
        }
    }
    // Reflected system G(-s) = (-A, -B, C).
    CMat Ar = -antistable.A;
    CMat Br = -antistable.B;
    CMat P = linalg::lyapunov(Ar, CMat(Br * Br.adjoint()));
    CMat Q = linalg::lyapunov(CMat(Ar.adjoint()), CMat(antistable.C.adjoint() * antistable.C));
    return {P, Q};
}

double largest_hankel_sv(const CMat& P, const CMat& Q) {
    if (P.rows() == 0) return 0.0;
    const CMat Ph = linalg::sqrt_psd(P);
    Eigen::SelfAdjointEigenSolver<CMat> es(CMat(Ph * Q * Ph), Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

namespace {

// Best anticausal-plus-constant approximation of the stable system
// (A, B, C): Glover's order-zero construction. Returns (Aw, Bw, Cw, Dw)
// with ||G - W||_inf = sigma_1 and Aw antistable. Runs in real arithmetic
// for real systems; the complex SVD phases would otherwise leak into the
// balanced realization.
struct AakResult {
    CMat A, B, C, D;
    bool ok = false;
    std::string why;
};

template <typename MatX>
MatX sqrt_psd_generic(const MatX& a) {
    Eigen::SelfAdjointEigenSolver<MatX> es(MatX(0.5 * (a + a.adjoint())));
    Vec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

template <typename MatX>
AakResult aak_order_zero(const MatX& A, const MatX& B, const MatX& C, const MatX& P,
                         const MatX& Q) {
    using Scalar = typename MatX::Scalar;
    using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    AakResult res;
    const Index m = B.cols();

    // Square-root balancing.
    const MatX Lp = sqrt_psd_generic(P);
    const MatX Lq = sqrt_psd_generic(Q);
    Eigen::BDCSVD<MatX> svd(MatX(Lq.adjoint() * Lp), Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vec sig = svd.singularValues();
    const double sigma1 = sig.size() ? sig(0) : 0.0;
    if (sigma1 <= 0.0) {
        res.why = "antistable part is numerically zero";
        return res;
    }
    // Drop non-minimal states.
    Index rho = 0;
    while (rho < sig.size() && sig(rho) > 1e-13 * sigma1) ++rho;
    Vec s = sig.head(rho);
    const VecX s_invsqrt = s.cwiseSqrt().cwiseInverse().template cast<Scalar>();
    MatX T = Lp * svd.matrixV().leftCols(rho) * s_invsqrt.asDiagonal();
    MatX Tinv = s_invsqrt.asDiagonal() * svd.matrixU().leftCols(rho).adjoint() * Lq.adjoint();

    MatX Ab = Tinv * A * T;
    MatX Bb = Tinv * B;
    MatX Cb = C * T;

    // Multiplicity block of sigma_1, moved to the trailing position: the
    // permuted ordering is (sigma_{r1+1}, ..., sigma_rho, sigma_1 block).
    Index r1 = 0;
    while (r1 < rho && s(r1) >= sigma1 * (1.0 - 1e-8)) ++r1;
    const Index n1 = rho - r1;  // remaining states
    std::vector<Index> perm(static_cast<size_t>(rho));
    std::iota(perm.begin(), perm.end(), 0);
    std::rotate(perm.begin(), perm.begin() + r1, perm.end());
    MatX Ap(rho, rho), Bp(rho, m), Cp(m, rho);
    for (Index i = 0; i < rho; ++i) {
        Bp.row(i) = Bb.row(perm[static_cast<size_t>(i)]);
        Cp.col(i) = Cb.col(perm[static_cast<size_t>(i)]);
        for (Index j = 0; j < rho; ++j) {
            Ap(i, j) = Ab(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
        }
    }
    Vec s1(n1);
    for (Index i = 0; i < n1; ++i) s1(i) = s(r1 + i);

    const MatX A11 = Ap.topLeftCorner(n1, n1);
    const MatX B1 = Bp.topRows(n1);
    const MatX C1 = Cp.leftCols(n1);
    const MatX B2 = Bp.bottomRows(r1);
    const MatX C2 = Cp.rightCols(r1);

    // U with B2 = -C2^H U.
    Eigen::CompleteOrthogonalDecomposition<MatX> cod(MatX(C2.adjoint()));
    MatX Uu = -cod.solve(B2);
    if ((B2 + C2.adjoint() * Uu).norm() > 1e-8 * std::max(B2.norm(), 1.0)) {
        res.why = "no unitary solution of B2 = -C2^H U";
        return res;
    }

    double gap = 1.0;
    for (Index i = 0; i < n1; ++i) {
        gap = std::min(gap, std::abs(s1(i) * s1(i) - sigma1 * sigma1) / (sigma1 * sigma1));
    }
    if (n1 > 0 && gap < 1e-10) {
        res.why = "Hankel singular value too close to sigma_1; AAK system singular";
        return res;
    }
    const Vec gamma_diag = s1.array().square() - sigma1 * sigma1;
    const MatX S1 = s1.template cast<Scalar>().asDiagonal();
    const MatX Gamma_inv = gamma_diag.cwiseInverse().template cast<Scalar>().asDiagonal();

    MatX Aw = Gamma_inv * (sigma1 * sigma1 * A11.adjoint() + S1 * A11 * S1 -
                           sigma1 * C1.adjoint() * Uu * B1.adjoint());
    MatX Bw = Gamma_inv * (S1 * B1 + sigma1 * C1.adjoint() * Uu);
    MatX Cw = C1 * S1 + sigma1 * Uu * B1.adjoint();
    MatX Dw = -sigma1 * Uu;
    res.A = Aw.template cast<cplx>();
    res.B = Bw.template cast<cplx>();
    res.C = Cw.template cast<cplx>();
    res.D = Dw.template cast<cplx>();
    for (const cplx& ev : eigenvalues_of(res.A)) {
        if (ev.real() <= 0.0) {
            res.why = "AAK approximant not antistable";
            return res;
        }
    }
    res.ok = true;
    return res;
}

lti::DescriptorRealization combine_parallel(const lti::DescriptorRealization& a,
                                            const lti::DescriptorRealization& b) {
    const Index na = a.order();
    const Index nb = b.order();
    const Index m = a.num_ports();
    lti::DescriptorRealization sys;
    sys.E = CMat::Identity(na + nb, na + nb);
    sys.A = CMat::Zero(na + nb, na + nb);
    sys.A.topLeftCorner(na, na) = a.A;
    sys.A.bottomRightCorner(nb, nb) = b.A;
    sys.B = CMat::Zero(na + nb, m);
    sys.B.topRows(na) = a.B;
    sys.B.bottomRows(nb) = b.B;
    sys.C = CMat::Zero(m, na + nb);
    sys.C.leftCols(na) = a.C;
    sys.C.rightCols(nb) = b.C;
    sys.D = a.D + b.D;
    return sys;
}

// L-infinity grid estimate of the largest singular value of H over a log
// grid spanning two decades beyond the spectral content of the system.
double grid_linf_norm(const lti::DescriptorRealization& sys, int points = 2000) {
    if (sys.order() == 0) return linalg::spectral_norm(sys.D);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const cplx& ev : eigenvalues_of(sys.A)) {
        const double mag = std::abs(ev);
        if (mag > 1e-12) {
            lo = std::min(lo, mag);
            hi = std::max(hi, mag);
        }
    }
    if (!(hi > 0.0)) {
        lo = 1e-2;
        hi = 1e2;
    }
    double best = linalg::spectral_norm(sys.D);  // omega -> infinity
    auto probe = [&](double w) {
        // Grid points landing on top of a pole are skipped; this is an
        // estimate over a dense grid, not a norm solver.
        try {
            best = std::max(best, linalg::spectral_norm(lti::eval_transfer(sys, cplx(0.0, w))));
        } catch (const std::exception&) {
        }
    };
    for (double w : linalg::log_grid(1e-2 * lo, 1e2 * hi, points)) probe(w);
    probe(0.0);
    return best;
}

lti::DescriptorRealization reflect_realization(const lti::DescriptorRealization& sys) {
    StandardForm std_form = to_standard(sys);
    std::vector<std::string> warnings;
    CMat A = reflect_band_eigenvalues(
        std_form.A, 0.0,
        [](cplx ev) { return ev.real() > 0.0 ? cplx(-ev.real(), ev.imag()) : ev; },
        warnings, "reflect");
    if (std_form.was_real) {
        A = linalg::require_real(A, 1e-8, "reflect A").cast<cplx>();
    }
    lti::DescriptorRealization out;
    out.E = CMat::Identity(A.rows(), A.rows());
    out.A = std::move(A);
    out.B = std_form.B;
    out.C = std_form.C;
    out.D = std_form.D;
    return out;
}

}  // namespace

ProjectionResult p_infinity(const lti::DescriptorRealization& sys, StabilizeMode mode) {
    ProjectionResult res;
    res.eigs_before = linalg::pencil_eigenvalues(sys.A, sys.E);
    if (mode == StabilizeMode::Off) {
        res.projected = sys;
        res.eigs_after = res.eigs_before;
        return res;
    }

    AdditiveSplit split = separate(sys);
    res.warnings = split.warnings;
    if (split.antistable.order() == 0) {
        res.projected = sys;
        res.eigs_after = res.eigs_before;
        return res;
    }

    auto [P, Q] = hankel_gramians(split.antistable);
    res.hankel_bound = largest_hankel_sv(P, Q);

    lti::DescriptorRealization approx;  // stable replacement of the antistable part
    bool fell_back = (mode == StabilizeMode::Reflect);
    if (mode == StabilizeMode::Nehari) {
        // AAK on the reflected (stable) system; mapping s -> -s swaps the
        // Gramian roles.
        AakResult aak;
        if (sys.is_real()) {
            aak = aak_order_zero<Mat>(-split.antistable.A.real(), -split.antistable.B.real(),
                                      split.antistable.C.real(), P.real(),
                                      Q.real());
        } else {
            aak = aak_order_zero<CMat>(-split.antistable.A, -split.antistable.B,
                                       split.antistable.C, P, Q);
        }
        if (aak.ok) {
            // W(-s) = (-Aw, Bw, -Cw, Dw) is the stable Nehari solution.
            approx.E = CMat::Identity(aak.A.rows(), aak.A.rows());
            approx.A = -aak.A;
            approx.B = aak.B;
            approx.C = -aak.C;
            approx.D = aak.D;
        } else {
            fell_back = true;
            res.warnings.push_back("nehari construction failed (" + aak.why +
                                   "); falling back to eigenvalue reflection");
        }
    }
    if (fell_back) {
        res.used_fallback = true;
        approx = reflect_realization(split.antistable);
    }

    res.projected = combine_parallel(split.stable, approx);

    // Error system H - P(H) = G_u - approx.
    lti::DescriptorRealization err = approx;
    err.B = -err.B;
    err.D = -err.D;
    res.achieved_error = grid_linf_norm(combine_parallel(split.antistable, err));
    res.eigs_after = linalg::pencil_eigenvalues(res.projected.A, res.projected.E);
    return res;
}

}  // namespace phl::stabilization
