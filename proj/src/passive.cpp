#include "phl/passive.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace phl::passive {

using tangential::LeftData;
using tangential::RightData;

SpectralZeroSet spectral_zeros(const lti::DescriptorRealization& sys, double inf_tol) {
    if (!sys.is_real(1e-12)) {
        throw std::invalid_argument("spectral_zeros: realization must be real (realify first)");
    }
    const Index n = sys.order();
    const Index m = sys.num_ports();
    const Mat E = sys.E.real();
    const Mat A = sys.A.real();
    const Mat B = sys.B.real();
    const Mat C = sys.C.real();
    const Mat D = sys.D.real();
    const Mat DD = D + D.transpose();

    const Index N = 2 * n + m;
    Mat lhs = Mat::Zero(N, N);
    lhs.block(0, n, n, n) = A;
    lhs.block(0, 2 * n, n, m) = B;
    lhs.block(n, 0, n, n) = A.transpose();
    lhs.block(n, 2 * n, n, m) = C.transpose();
    lhs.block(2 * n, 0, m, n) = B.transpose();
    lhs.block(2 * n, n, m, n) = C;
    lhs.block(2 * n, 2 * n, m, m) = DD;

    Mat rhs = Mat::Zero(N, N);
    rhs.block(0, n, n, n) = E;
    rhs.block(n, 0, n, n) = -E.transpose();

    // Balance the trailing block so the pencil mixes comparable magnitudes.
    const double dd_norm = DD.norm();
    const double tau = dd_norm > 0.0 ? 1.0 / std::sqrt(dd_norm) : 1.0;
    Vec scale = Vec::Ones(N);
    scale.tail(m).setConstant(tau);
    lhs = scale.asDiagonal() * lhs * scale.asDiagonal();
    rhs = scale.asDiagonal() * rhs * scale.asDiagonal();

    Eigen::GeneralizedEigenSolver<Mat> ges;
    ges.setMaxIterations(400 * static_cast<int>(N));
    ges.compute(lhs, rhs, /*computeEigenvectors=*/true);
    if (ges.info() != Eigen::Success) {
        throw std::runtime_error("spectral_zeros: QZ iteration failed");
    }

    const auto& alphas = ges.alphas();
    const auto& betas = ges.betas();
    double beta_max = 0.0;
    for (Index i = 0; i < betas.size(); ++i) beta_max = std::max(beta_max, std::abs(betas(i)));
    if (beta_max == 0.0) {
        throw std::runtime_error("spectral_zeros: pencil has no finite eigenvalues");
    }

    SpectralZeroSet out;
    std::vector<Index> finite;
    for (Index i = 0; i < betas.size(); ++i) {
        if (std::abs(betas(i)) > inf_tol * beta_max) finite.push_back(i);
    }
    out.directions.resize(m, static_cast<Index>(finite.size()));
    out.p_aux.resize(n, static_cast<Index>(finite.size()));
    out.q_aux.resize(n, static_cast<Index>(finite.size()));
    Index col = 0;
    for (Index i : finite) {
        const cplx xi = alphas(i) / betas(i);
        CVec v = ges.eigenvectors().col(i);
        // Undo the balancing on the direction block. Eigenpairs whose
        // direction block vanishes are pencil artifacts (the defining
        // property needs a nonzero x), not spectral zeros.
        CVec x = v.tail(m) * tau;
        const double xn = x.norm();
        if (!(xn > 1e-8 * v.norm()) || !std::isfinite(xn)) continue;
        x /= xn;
        // Deterministic phase: largest component real positive.
        Index imax = 0;
        x.cwiseAbs().maxCoeff(&imax);
        const cplx pivot = x(imax);
        const cplx phase = std::abs(pivot) > 0.0 ? pivot / std::abs(pivot) : cplx(1.0);
        x /= phase;
        out.zeros.push_back(xi);
        out.directions.col(col) = x;
        out.p_aux.col(col) = v.head(n) / (xn * phase);
        out.q_aux.col(col) = v.segment(n, n) / (xn * phase);
        ++col;
    }
    out.directions.conservativeResize(m, col);
    out.p_aux.conservativeResize(n, col);
    out.q_aux.conservativeResize(n, col);
    return out;
}

SpectralZeroSet select_positive(const SpectralZeroSet& zeros, Index r,
                                double zero_tol_factor) {
    double xi_max = 0.0;
    for (const cplx& z : zeros.zeros) xi_max = std::max(xi_max, std::abs(z));
    const double tol = zero_tol_factor * std::max(xi_max, 1e-300);

    std::vector<Index> keep;
    std::vector<cplx> near_axis;
    for (Index j = 0; j < zeros.size(); ++j) {
        const cplx z = zeros.zeros[static_cast<size_t>(j)];
        if (z.real() > tol) {
            keep.push_back(j);
        } else if (std::abs(z.real()) <= tol) {
            near_axis.push_back(z);
        }
    }
    if (static_cast<Index>(keep.size()) != r) {
        std::ostringstream oss;
        oss << "select_positive: expected " << r << " zeros in the open right half-plane, found "
            << keep.size() << "; " << near_axis.size() << " zero(s) within |Re| <= " << tol
            << " of the imaginary axis";
        if (!near_axis.empty()) {
            oss << " [";
            for (size_t i = 0; i < near_axis.size() && i < 8; ++i) {
                if (i) oss << ", ";
                oss << "(" << near_axis[i].real() << ", " << near_axis[i].imag() << ")";
            }
            if (near_axis.size() > 8) oss << ", ...";
            oss << "]";
        }
        throw std::runtime_error(oss.str());
    }

    // Sort by |Im|, then pair conjugates adjacently (upper first) and make
    // the pairing exact so realification is clean.
    std::sort(keep.begin(), keep.end(), [&](Index a, Index b) {
        const cplx za = zeros.zeros[static_cast<size_t>(a)];
        const cplx zb = zeros.zeros[static_cast<size_t>(b)];
        const double ia = std::abs(za.imag());
        const double ib = std::abs(zb.imag());
        if (ia != ib) return ia < ib;
        return za.imag() > zb.imag();
    });

    SpectralZeroSet out;
    const Index m = zeros.directions.rows();
    out.directions.resize(m, r);
    out.p_aux.resize(zeros.p_aux.rows(), r);
    out.q_aux.resize(zeros.q_aux.rows(), r);

    std::vector<bool> used(keep.size(), false);
    Index col = 0;
    const double imag_floor = 1e-12 * std::max(xi_max, 1e-300);
    for (size_t a = 0; a < keep.size(); ++a) {
        if (used[a]) continue;
        used[a] = true;
        const Index ja = keep[a];
        cplx za = zeros.zeros[static_cast<size_t>(ja)];
        if (std::abs(za.imag()) <= imag_floor) {
            out.zeros.push_back(cplx(za.real(), 0.0));
            // Real zero of a real pencil: the direction is real up to phase.
            out.directions.col(col) = zeros.directions.col(ja);
            out.p_aux.col(col) = zeros.p_aux.col(ja);
            out.q_aux.col(col) = zeros.q_aux.col(ja);
            ++col;
            continue;
        }
        // Find the conjugate partner.
        size_t partner = keep.size();
        for (size_t b = a + 1; b < keep.size(); ++b) {
            if (used[b]) continue;
            const cplx zb = zeros.zeros[static_cast<size_t>(keep[b])];
            if (std::abs(zb - std::conj(za)) <= 1e-8 * std::max(std::abs(za), 1.0)) {
                partner = b;
                break;
            }
        }
        if (partner == keep.size()) {
            throw std::runtime_error(
                "select_positive: retained zeros are not closed under conjugation");
        }
        used[partner] = true;
        const Index jb = keep[partner];
        const bool a_upper = za.imag() > 0.0;
        const Index j_up = a_upper ? ja : jb;
        // Symmetrize the pair from the upper member.
        const cplx z_up = a_upper ? za : zeros.zeros[static_cast<size_t>(jb)];
        out.zeros.push_back(z_up);
        out.directions.col(col) = zeros.directions.col(j_up);
        out.p_aux.col(col) = zeros.p_aux.col(j_up);
        out.q_aux.col(col) = zeros.q_aux.col(j_up);
        ++col;
        out.zeros.push_back(std::conj(z_up));
        out.directions.col(col) = zeros.directions.col(j_up).conjugate();
        out.p_aux.col(col) = zeros.p_aux.col(j_up).conjugate();
        out.q_aux.col(col) = zeros.q_aux.col(j_up).conjugate();
        ++col;
    }
    return out;
}

std::pair<RightData, LeftData> build_passive_data(const SpectralZeroSet& zeros,
                                                  const tangential::FrequencyResponse& model) {
    const Index r = zeros.size();
    if (r == 0) throw std::invalid_argument("build_passive_data: empty zero set");
    const Index m = zeros.directions.rows();

    RightData right;
    right.points.resize(r);
    right.directions.resize(m, r);
    right.responses.resize(m, r);
    for (Index j = 0; j < r; ++j) {
        const cplx xi = zeros.zeros[static_cast<size_t>(j)];
        if (!(xi.real() > 0.0)) {
            throw std::invalid_argument("build_passive_data: zeros must lie strictly in the RHP");
        }
        right.points(j) = xi;
        right.directions.col(j) = zeros.directions.col(j);
        right.responses.col(j) = model(xi) * zeros.directions.col(j);
    }

    LeftData left;
    left.points.resize(r);
    left.directions.resize(m, r);
    left.responses.resize(m, r);
    for (Index i = 0; i < r; ++i) {
        left.points(i) = -std::conj(right.points(i));
        // l_i^T = x_i^H and v_i^T = -w_i^H.
        left.directions.col(i) = right.directions.col(i).conjugate();
        left.responses.col(i) = -right.responses.col(i).conjugate();
    }
    return {std::move(right), std::move(left)};
}

PassiveLoewnerPencil passive_loewner(const RightData& right, const LeftData& left) {
    loewner::LoewnerPencil base = loewner::build_loewner(right, left);
    PassiveLoewnerPencil p;
    p.L = base.L;
    p.sL = base.sL;
    p.V = base.V;
    p.W = base.W;
    p.Lambda = base.Lambda;
    p.Rdir = base.Rdir;
    p.Ldir = base.Ldir;

    const double herm = linalg::hermitian_err(p.L);
    const double skew = linalg::skew_hermitian_err(p.sL);
    if (herm > 1e-10) {
        throw std::runtime_error("passive_loewner: L is not Hermitian (relative deviation " +
                                 std::to_string(herm) + ")");
    }
    if (skew > 1e-10) {
        throw std::runtime_error("passive_loewner: sL is not skew-Hermitian (relative deviation " +
                                 std::to_string(skew) + ")");
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(CMat(0.5 * (p.L + p.L.adjoint())),
                                           Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig <= 0.0) {
        throw std::runtime_error(
            "passive_loewner: L is not positive definite (smallest eigenvalue " +
            std::to_string(min_eig) + "); Cholesky decomposition is impossible");
    }

    // Jacobi equilibration: rescaling direction j (and its response) by
    // 1/sqrt(L_jj) is an exact congruence of the whole pencil that tames the
    // Pick-matrix conditioning ahead of the Cholesky step. Conjugate pairs
    // share their (real) diagonal entry, so the pair structure survives.
    CVec scale(p.order());
    for (Index j = 0; j < p.order(); ++j) {
        scale(j) = 1.0 / std::sqrt(std::max(p.L(j, j).real(), 1e-300));
    }
    p.L = scale.asDiagonal() * p.L * scale.asDiagonal();
    p.sL = scale.asDiagonal() * p.sL * scale.asDiagonal();
    p.V = scale.asDiagonal() * p.V;
    p.W = p.W * scale.asDiagonal();
    p.Rdir = p.Rdir * scale.asDiagonal();
    p.Ldir = scale.asDiagonal() * p.Ldir;
    return p;
}

PassiveLoewnerPencil realify(const PassiveLoewnerPencil& p) {
    if (p.realified) return p;
    const CMat U = loewner::realifier(p.Lambda.diagonal());
    auto realify_mat = [](const CMat& a, const char* what) {
        return linalg::require_real(a, 1e-10, what).cast<cplx>().eval();
    };
    PassiveLoewnerPencil out;
    out.realified = true;
    out.unshifted = p.unshifted;
    out.L = realify_mat(U.adjoint() * p.L * U, "passive realify L");
    out.sL = realify_mat(U.adjoint() * p.sL * U, "passive realify sL");
    out.V = realify_mat(U.adjoint() * p.V, "passive realify V");
    out.W = realify_mat(p.W * U, "passive realify W");
    out.Lambda = U.adjoint() * p.Lambda * U;
    out.Rdir = realify_mat(p.Rdir * U, "passive realify Rdir");
    out.Ldir = realify_mat(U.adjoint() * p.Ldir, "passive realify Ldir");
    return out;
}

PassiveLoewnerPencil unshift_pencil(const PassiveLoewnerPencil& p, const Mat& D_s) {
    if (D_s.rows() != p.num_ports() || D_s.cols() != p.num_ports()) {
        throw std::invalid_argument("unshift_pencil: D_s dimension mismatch");
    }
    PassiveLoewnerPencil out = p;
    const CMat Ds = D_s.cast<cplx>();
    out.sL = p.sL - p.Ldir * Ds * p.Rdir;
    out.V = p.V - p.Ldir * Ds;
    out.W = p.W - Ds * p.Rdir;
    out.unshifted = true;
    return out;
}

std::pair<lti::DescriptorRealization, SMatrix> normalize_ph(PassiveLoewnerPencil& p,
                                                            const Mat& D_s) {
    const Index r = p.order();
    const Index m = p.num_ports();
    Mat L = linalg::require_real(p.L, 1e-10, "normalize_ph L");
    L = 0.5 * (L + L.transpose());
    const Mat sL = linalg::require_real(p.sL, 1e-10, "normalize_ph sL");
    const Mat V = linalg::require_real(p.V, 1e-10, "normalize_ph V");
    const Mat W = linalg::require_real(p.W, 1e-10, "normalize_ph W");

    // Roundoff-scale indefiniteness gets one jitter pass; genuine
    // indefiniteness is a hard error.
    Eigen::SelfAdjointEigenSolver<Mat> es(L, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    const double l_norm = std::max(L.norm(), 1e-300);
    if (min_eig <= 0.0) {
        if (min_eig > -1e-12 * l_norm) {
            L.diagonal().array() += 1e-12 * l_norm;
        } else {
            throw std::runtime_error(
                "normalize_ph: Loewner matrix indefinite (smallest eigenvalue " +
                std::to_string(min_eig) +
                "); increase the shift D_s or check the stabilization step");
        }
    }
    Eigen::LLT<Mat> llt(L);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error(
            "normalize_ph: Cholesky failed; increase the shift D_s or check stabilization");
    }
    const Mat T = Mat(llt.matrixL()).transpose();  // L = T^T T, T upper triangular

    // With L = T^T T, the similarity T (L^{-1} sL) T^{-1} collapses to the
    // congruence T^{-T} sL T^{-1}, which avoids squaring the condition
    // number of L (and transports the symmetric part of sL congruently).
    const Mat T_inv = T.triangularView<Eigen::Upper>().solve(Mat::Identity(r, r));
    const Mat A_n = T_inv.transpose() * sL * T_inv;
    const Mat B_n = -T_inv.transpose() * V;
    const Mat C_n = W * T_inv;

    p.T = T;

    lti::DescriptorRealization normalized;
    normalized.E = CMat::Identity(r, r);
    normalized.A = A_n.cast<cplx>();
    normalized.B = B_n.cast<cplx>();
    normalized.C = C_n.cast<cplx>();
    normalized.D = D_s.cast<cplx>();

    SMatrix smat;
    smat.n = r;
    smat.m = m;
    smat.S.resize(r + m, r + m);
    smat.S << -A_n, -B_n, C_n, D_s;
    return {std::move(normalized), std::move(smat)};
}

lti::PHRealization extract_ph(const SMatrix& smat) {
    const Index n = smat.n;
    const Index m = smat.m;
    if (smat.S.rows() != n + m || smat.S.cols() != n + m) {
        throw std::invalid_argument("extract_ph: S dimension mismatch");
    }
    const Mat skew = 0.5 * (smat.S - smat.S.transpose());
    const Mat sym = 0.5 * (smat.S + smat.S.transpose());

    lti::PHRealization ph;
    ph.M = Mat::Identity(n, n);
    ph.Q = Mat::Identity(n, n);
    ph.J = -skew.topLeftCorner(n, n);
    ph.G = -skew.topRightCorner(n, m);
    ph.N = skew.bottomRightCorner(m, m);
    ph.R = sym.topLeftCorner(n, n);
    ph.P = sym.topRightCorner(n, m);
    ph.S = sym.bottomRightCorner(m, m);
    return ph;
}

namespace {

void require_shift(const Mat& D_s, Index m, std::vector<std::string>& warnings) {
    if (D_s.rows() != m || D_s.cols() != m) {
        throw std::invalid_argument("identify_ph: D_s dimension mismatch");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (D_s + D_s.transpose()),
                                          Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    const double scale = std::max(D_s.norm(), 1.0);
    if (min_eig < -1e-12 * scale) {
        throw std::invalid_argument("identify_ph: D_s + D_s^T must be positive definite");
    }
    if (min_eig <= 1e-12 * scale) {
        warnings.push_back(
            "identify_ph: D_s + D_s^T is singular; the spectral-zero pencil will degenerate "
            "for non-strictly passive data");
    }
}

}  // namespace

IdentifyResult identify_ph(const RightData& right_in, const LeftData& left_in,
                           const Mat& D_s, const IdentifyOptions& options) {
    IdentifyResult res;
    auto& diag = res.diag;
    const Index m = right_in.num_ports();
    require_shift(D_s, m, diag.warnings);

    auto stage = [](int step, const std::string& what) {
        return "identify_ph step " + std::to_string(step) + " (" + what + ")";
    };
    auto rethrow = [&](int step, const char* what, const std::exception& e) -> void {
        throw std::runtime_error(stage(step, what) + ": " + e.what());
    };

    {
        // Steps 1-2: the pencil is assembled from the original (strictly
        // proper) data; the shift enters through the feedthrough slot of the
        // standard form, which is what makes the interpolant match the
        // shifted data while keeping the Loewner matrix invertible.
        RightData right = right_in;
        LeftData left = left_in;
        if (options.close_conjugates) {
            std::tie(right, left) = tangential::conjugate_close(right, left);
        }

        loewner::LoewnerPencil pencil;
        try {
            pencil = loewner::build_loewner(right, left);
            pencil = loewner::realify(pencil);
        } catch (const std::exception& e) {
            rethrow(2, "Loewner pencil", e);
        }
        try {
            diag.order_report = loewner::detect_orders(pencil, options.rank_tol);
        } catch (const std::exception& e) {
            rethrow(2, "order detection", e);
        }
        if (!diag.order_report.note.empty()) diag.warnings.push_back(diag.order_report.note);
        int r = options.order > 0 ? options.order : diag.order_report.r;
        r = std::min<int>(r, static_cast<int>(std::min(pencil.rows(), pencil.cols())));
        if (r < 1) throw std::runtime_error(stage(2, "order detection") + ": empty model");

        try {
            res.loewner_model = loewner::reduce_realization(pencil, r, options.rank_tol);
        } catch (const std::exception& e) {
            rethrow(2, "reduction", e);
        }

        // Step 3: standard form with D = D_s.
        lti::DescriptorRealization shifted_model;
        try {
            Eigen::PartialPivLU<CMat> lu(res.loewner_model.E);
            shifted_model.E = CMat::Identity(r, r);
            shifted_model.A = lu.solve(res.loewner_model.A);
            if (!shifted_model.A.allFinite() ||
                (res.loewner_model.E * shifted_model.A - res.loewner_model.A).norm() >
                    1e-8 * std::max(res.loewner_model.A.norm(), 1.0)) {
                throw std::runtime_error("reduced Loewner matrix is numerically singular");
            }
            shifted_model.B = lu.solve(res.loewner_model.B);
            shifted_model.C = res.loewner_model.C;
            shifted_model.D = D_s.cast<cplx>();
        } catch (const std::exception& e) {
            rethrow(3, "standard form", e);
        }

        // Step 4: closest-stable projection.
        lti::DescriptorRealization work = shifted_model;
        if (options.stabilize != stabilization::StabilizeMode::Off) {
            try {
                diag.stabilization = stabilization::p_infinity(shifted_model, options.stabilize);
                work = diag.stabilization->projected;
                for (const auto& w : diag.stabilization->warnings) diag.warnings.push_back(w);
            } catch (const std::exception& e) {
                rethrow(4, "stable projection", e);
            }
        }

        // Step 5: spectral zeros of the (projected) shifted model.
        try {
            diag.zeros_all = spectral_zeros(work);
        } catch (const std::exception& e) {
            rethrow(5, "spectral zeros", e);
        }

        // Step 6: positive selection; expect one zero per state of `work`.
        try {
            diag.zeros_selected =
                select_positive(diag.zeros_all, work.order(), options.zero_tol_factor);
        } catch (const std::exception& e) {
            rethrow(6, "zero selection", e);
        }

        // Residual of the defining property Phi(xi_j) x_j = 0. Diagnostic
        // only: evaluating Phi needs H(-xi), which can sit next to a stable
        // pole; such zeros are skipped rather than failing the run.
        double phi_scale = 0.0;
        diag.zeros_selected.residuals = Vec::Zero(diag.zeros_selected.size());
        for (Index j = 0; j < diag.zeros_selected.size(); ++j) {
            const cplx xi = diag.zeros_selected.zeros[static_cast<size_t>(j)];
            try {
                const CMat phi = lti::spectral_density(work, xi);
                phi_scale = std::max(phi_scale, phi.norm());
                const double resid = (phi * diag.zeros_selected.directions.col(j)).norm();
                diag.zeros_selected.residuals(j) = resid;
                diag.max_zero_residual = std::max(diag.max_zero_residual, resid);
            } catch (const std::exception&) {
                diag.warnings.push_back("zero residual diagnostic skipped at a pole-adjacent zero");
            }
        }
        if (phi_scale > 0.0) diag.max_zero_residual /= phi_scale;

        // Steps 6-7: strictly passive data and the structured pencil.
        PassiveLoewnerPencil ppencil;
        try {
            auto model = [&work](cplx s) { return lti::eval_transfer(work, s); };
            auto [pright, pleft] = build_passive_data(diag.zeros_selected, model);
            ppencil = passive_loewner(pright, pleft);
        } catch (const std::exception& e) {
            rethrow(7, "passive Loewner pencil", e);
        }
        diag.loewner_hermitian_err = linalg::hermitian_err(ppencil.L);
        diag.shifted_loewner_skew_err = linalg::skew_hermitian_err(ppencil.sL);
        {
            Eigen::SelfAdjointEigenSolver<CMat> es(CMat(0.5 * (ppencil.L + ppencil.L.adjoint())),
                                                   Eigen::EigenvaluesOnly);
            diag.passive_gram_min_eig = es.eigenvalues().minCoeff();
        }

        try {
            ppencil = realify(ppencil);
        } catch (const std::exception& e) {
            rethrow(7, "pencil realification", e);
        }

        // Step 8: remove the shift from the pencil data.
        try {
            ppencil = unshift_pencil(ppencil, D_s);
        } catch (const std::exception& e) {
            rethrow(8, "unshift", e);
        }

        // Steps 9-11: Cholesky, normalized model, pH extraction.
        SMatrix smat;
        try {
            std::tie(res.normalized_model, smat) = normalize_ph(ppencil, D_s);
        } catch (const std::exception& e) {
            rethrow(9, "Cholesky normalization", e);
        }
        res.ph = extract_ph(smat);

        // The extracted dissipation block is PSD in exact arithmetic; its
        // smallest eigenvalues sit at the Pick-matrix conditioning floor and
        // roundoff can push them slightly negative. Project noise-scale
        // violations back onto the PSD cone; anything larger is left alone
        // (and reported), since it signals a genuine problem.
        {
            const Index rn = res.ph.order();
            const Index m_loc = res.ph.num_ports();
            Mat block = res.ph.dissipation_block();
            Eigen::SelfAdjointEigenSolver<Mat> bes(0.5 * (block + block.transpose()));
            const double bmin = bes.eigenvalues().minCoeff();
            const double bscale = std::max(block.norm(), 1e-300);
            if (bmin < 0.0 && bmin > -1e-6 * bscale) {
                Vec clipped = bes.eigenvalues().cwiseMax(0.0);
                block = bes.eigenvectors() * clipped.asDiagonal() * bes.eigenvectors().transpose();
                res.ph.R = block.topLeftCorner(rn, rn);
                res.ph.P = block.topRightCorner(rn, m_loc);
                res.ph.S = block.bottomRightCorner(m_loc, m_loc);
                diag.warnings.push_back(
                    "dissipation block projected onto the PSD cone (smallest eigenvalue " +
                    std::to_string(bmin) + ")");
            }
        }

        // Step 12: shift back unless the data's feedthrough was genuine.
        if (!options.native_feedthrough) {
            res.ph.S -= D_s;
        }
    }
    return res;
}

}  // namespace phl::passive
