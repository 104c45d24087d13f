#include "phl/lti.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace phl::lti {

namespace {

void check_dims(Index n, Index m, const CMat& E, const CMat& A, const CMat& B,
                const CMat& C, const CMat& D) {
    if (A.rows() != n || A.cols() != n || E.rows() != n || E.cols() != n ||
        B.rows() != n || B.cols() != m || C.rows() != m || C.cols() != n ||
        D.rows() != m || D.cols() != m) {
        throw std::invalid_argument("DescriptorRealization: inconsistent dimensions");
    }
}

double min_sym_eig(const Mat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()),
                                          Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double rel_asym(const Mat& a) {
    const double scale = std::max(a.norm(), 1e-300);
    return (a + a.transpose()).norm() / (2.0 * scale);
}

}  // namespace

DescriptorRealization::DescriptorRealization(CMat E_, CMat A_, CMat B_, CMat C_, CMat D_)
    : E(std::move(E_)), A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), D(std::move(D_)) {
    if (D.size() == 0) D = CMat::Zero(B.cols(), B.cols());
    validate();
}

DescriptorRealization DescriptorRealization::standard(CMat A, CMat B, CMat C, CMat D) {
    CMat E = CMat::Identity(A.rows(), A.cols());
    return DescriptorRealization(std::move(E), std::move(A), std::move(B),
                                 std::move(C), std::move(D));
}

bool DescriptorRealization::is_real(double rel_tol) const {
    return linalg::imag_fraction(E) <= rel_tol && linalg::imag_fraction(A) <= rel_tol &&
           linalg::imag_fraction(B) <= rel_tol && linalg::imag_fraction(C) <= rel_tol &&
           linalg::imag_fraction(D) <= rel_tol;
}

void DescriptorRealization::validate() const {
    check_dims(A.rows(), B.cols(), E, A, B, C, D);
}

PHRealization::PHRealization(Mat M_, Mat Q_, Mat J_, Mat R_, Mat G_, Mat P_, Mat N_, Mat S_)
    : M(std::move(M_)), Q(std::move(Q_)), J(std::move(J_)), R(std::move(R_)),
      G(std::move(G_)), P(std::move(P_)), N(std::move(N_)), S(std::move(S_)) {
    const Index n = J.rows();
    const Index m = G.cols();
    if (M.rows() != n || M.cols() != n || Q.rows() != n || Q.cols() != n ||
        J.cols() != n || R.rows() != n || R.cols() != n || G.rows() != n ||
        P.rows() != n || P.cols() != m || N.rows() != m || N.cols() != m ||
        S.rows() != m || S.cols() != m) {
        throw std::invalid_argument("PHRealization: inconsistent dimensions");
    }
}

Mat PHRealization::dissipation_block() const {
    const Index n = order();
    const Index m = num_ports();
    Mat block(n + m, n + m);
    block << R, P, P.transpose(), S;
    return block;
}

PHRealization::StructureReport PHRealization::check_structure(double rel_tol) const {
    StructureReport rep;
    rep.j_skew_err = rel_asym(J);
    rep.n_skew_err = rel_asym(N);
    const double m_scale = std::max(M.norm(), 1e-300);
    const double q_scale = std::max(Q.norm(), 1e-300);
    rep.m_sym_err = (M - M.transpose()).norm() / (2.0 * m_scale);
    rep.q_sym_err = (Q - Q.transpose()).norm() / (2.0 * q_scale);
    rep.m_min_eig = min_sym_eig(M);
    rep.q_min_eig = min_sym_eig(Q);
    const Mat diss = dissipation_block();
    rep.dissipation_min_eig = min_sym_eig(diss);
    const double diss_scale = std::max(diss.norm(), 1e-300);

    std::ostringstream oss;
    rep.ok = true;
    auto fail = [&](const std::string& msg) {
        rep.ok = false;
        if (oss.tellp() > 0) oss << "; ";
        oss << msg;
    };
    if (rep.j_skew_err > rel_tol) fail("J not skew-symmetric");
    if (rep.n_skew_err > rel_tol) fail("N not skew-symmetric");
    if (rep.m_sym_err > rel_tol) fail("M not symmetric");
    if (rep.q_sym_err > rel_tol) fail("Q not symmetric");
    if (rep.m_min_eig <= rel_tol * m_scale) fail("M not positive definite");
    if (rep.q_min_eig < -rel_tol * q_scale) fail("Q not positive semidefinite");
    if (rep.dissipation_min_eig < -rel_tol * diss_scale) {
        fail("dissipation block not positive semidefinite");
    }
    rep.summary = rep.ok ? "ok" : oss.str();
    return rep;
}

const char* to_string(Stability s) {
    switch (s) {
        case Stability::AsymptoticallyStable: return "asymptotically-stable";
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
    }
    return "?";
}

const char* to_string(PassivityClass c) {
    switch (c) {
        case PassivityClass::StrictlyPassive: return "strictly-passive";
        case PassivityClass::Passive: return "passive";
        case PassivityClass::NotPassive: return "not-passive";
        case PassivityClass::Undetermined: return "undetermined";
    }
    return "?";
}

CMat eval_transfer(const DescriptorRealization& sys, cplx s) {
    CMat K = s * sys.E - sys.A;
    Eigen::PartialPivLU<CMat> lu(K);
    CMat X = lu.solve(sys.B);
    if (!X.allFinite() || (K * X - sys.B).norm() > 1e-8 * std::max(sys.B.norm(), 1.0)) {
        throw std::runtime_error("eval_transfer: sE - A numerically singular at s = (" +
                                 std::to_string(s.real()) + ", " + std::to_string(s.imag()) + ")");
    }
    return sys.C * X + sys.D;
}

CMat eval_transfer(const PHRealization& sys, cplx s) {
    const Mat JR = (sys.J - sys.R) * sys.Q;
    CMat K = s * sys.M.cast<cplx>() - JR.cast<cplx>();
    CMat B = (sys.G - sys.P).cast<cplx>();
    Eigen::PartialPivLU<CMat> lu(K);
    CMat X = lu.solve(B);
    if (!X.allFinite() || (K * X - B).norm() > 1e-8 * std::max(B.norm(), 1.0)) {
        throw std::runtime_error("eval_transfer: sM - (J-R)Q numerically singular");
    }
    Mat C = (sys.G + sys.P).transpose() * sys.Q;
    return C.cast<cplx>() * X + (sys.N + sys.S).cast<cplx>();
}

CMat eval_transfer(const SparseStateSpace& sys, cplx s) {
    using CSpMat = Eigen::SparseMatrix<cplx>;
    CSpMat K = (s * sys.E.cast<cplx>() - sys.A.cast<cplx>()).pruned();
    K.makeCompressed();
    Eigen::SparseLU<CSpMat> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success) {
        throw std::runtime_error("eval_transfer: sparse factorization failed (singular shift?)");
    }
    CMat X = lu.solve(sys.B.cast<cplx>().eval());
    return sys.C.cast<cplx>() * X + sys.D.cast<cplx>();
}

DescriptorRealization ph_to_descriptor(const PHRealization& ph) {
    DescriptorRealization d;
    d.E = ph.M.cast<cplx>();
    d.A = ((ph.J - ph.R) * ph.Q).cast<cplx>();
    d.B = (ph.G - ph.P).cast<cplx>();
    d.C = ((ph.G + ph.P).transpose() * ph.Q).cast<cplx>();
    d.D = (ph.N + ph.S).cast<cplx>();
    return d;
}

PHRealization to_coenergy(const PHRealization& ph) {
    Eigen::LLT<Mat> llt(0.5 * (ph.Q + ph.Q.transpose()));
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("to_coenergy: Q is not positive definite");
    }
    Mat M_new = llt.solve(ph.M.transpose()).transpose();  // M Q^{-1}
    const double asym = (M_new - M_new.transpose()).norm();
    if (asym > 1e-8 * std::max(M_new.norm(), 1e-300)) {
        throw std::invalid_argument("to_coenergy: M Q^{-1} not symmetric; incompatible (M, Q) pair");
    }
    M_new = 0.5 * (M_new + M_new.transpose());
    PHRealization out = ph;
    out.M = M_new;
    out.Q = Mat::Identity(ph.order(), ph.order());
    return out;
}

namespace {

// Axis eigenvalue clusters flag candidate repeated poles; a cluster only
// disqualifies stability when it is defective (geometric multiplicity below
// the cluster size), since semi-simple multiplicities stay bounded and are
// typical of unobservable kernel modes.
Stability classify_stability(const std::vector<cplx>& poles, const CMat& A, const CMat& E,
                             double axis_factor, double cluster_gap) {
    double radius = 0.0;
    for (const cplx& p : poles) radius = std::max(radius, std::abs(p));
    const double band = axis_factor * std::max(radius, 1e-300);
    bool any_axis = false;
    for (const cplx& p : poles) {
        if (p.real() > band) return Stability::Unstable;
        if (std::abs(p.real()) <= band) any_axis = true;
    }
    if (!any_axis) return Stability::AsymptoticallyStable;

    std::vector<cplx> axis;
    for (const cplx& p : poles) {
        if (std::abs(p.real()) <= band) axis.push_back(p);
    }
    const double gap = cluster_gap * std::max(radius, 1e-300);
    std::vector<bool> used(axis.size(), false);
    for (size_t i = 0; i < axis.size(); ++i) {
        if (used[i]) continue;
        std::vector<cplx> cluster{axis[i]};
        for (size_t j = i + 1; j < axis.size(); ++j) {
            if (!used[j] && std::abs(axis[i] - axis[j]) <= gap) {
                used[j] = true;
                cluster.push_back(axis[j]);
            }
        }
        if (cluster.size() < 2) continue;
        cplx center(0.0, 0.0);
        for (const cplx& z : cluster) center += z;
        center /= static_cast<double>(cluster.size());
        Eigen::BDCSVD<CMat> svd(CMat(A - center * E));
        const Vec& sv = svd.singularValues();
        const double cutoff = 1e-8 * std::max(sv(0), 1e-300);
        Index rank = 0;
        for (Index k = 0; k < sv.size(); ++k) {
            if (sv(k) > cutoff) ++rank;
        }
        const Index geometric = A.rows() - rank;
        if (geometric < static_cast<Index>(cluster.size())) return Stability::Unstable;
    }
    return Stability::Stable;
}

template <class System>
PassivityReport classify_impl(const System& sys, const CMat& A, const CMat& E,
                              const Mat& D_plus_Dt, const std::vector<double>& omega_grid,
                              double rel_tol) {
    if (omega_grid.empty()) {
        throw std::invalid_argument("classify_passivity: empty frequency grid");
    }
    PassivityReport rep;
    rep.poles = linalg::pencil_eigenvalues(A, E);
    rep.stability = classify_stability(rep.poles, A, E, 1e-10, 1e-8);

    double min_eig = std::numeric_limits<double>::infinity();
    double phi_scale = 0.0;
    rep.min_eig_curve.reserve(omega_grid.size());
    for (double w : omega_grid) {
        CMat phi = spectral_density(sys, cplx(0.0, w));
        CMat herm = 0.5 * (phi + phi.adjoint());
        Eigen::SelfAdjointEigenSolver<CMat> es(herm, Eigen::EigenvaluesOnly);
        const double lmin = es.eigenvalues().minCoeff();
        rep.min_eig_curve.emplace_back(w, lmin);
        min_eig = std::min(min_eig, lmin);
        phi_scale = std::max(phi_scale, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    const double tol = rel_tol * std::max(phi_scale, 1e-300);

    if (rep.stability == Stability::Unstable) {
        rep.classification = PassivityClass::NotPassive;
        return rep;
    }
    if (min_eig < -tol) {
        rep.classification = PassivityClass::NotPassive;
    } else if (min_eig <= tol) {
        rep.classification = PassivityClass::Undetermined;
    } else if (rep.stability == Stability::AsymptoticallyStable &&
               min_sym_eig(0.5 * D_plus_Dt) > tol) {
        // Strict positive realness must survive omega -> inf, where
        // Phi(i omega) -> D + D^T.
        rep.classification = PassivityClass::StrictlyPassive;
    } else {
        rep.classification = PassivityClass::Passive;
    }
    return rep;
}

}  // namespace

PassivityReport classify_passivity(const DescriptorRealization& sys,
                                   const std::vector<double>& omega_grid, double rel_tol) {
    Mat dd = (sys.D + sys.D.transpose()).real();
    return classify_impl(sys, sys.A, sys.E, dd, omega_grid, rel_tol);
}

PassivityReport classify_passivity(const PHRealization& sys,
                                   const std::vector<double>& omega_grid, double rel_tol) {
    const Mat A = (sys.J - sys.R) * sys.Q;
    const Mat D = sys.N + sys.S;
    return classify_impl(sys, A.cast<cplx>().eval(), sys.M.cast<cplx>().eval(),
                         Mat(D + D.transpose()), omega_grid, rel_tol);
}

}  // namespace phl::lti
