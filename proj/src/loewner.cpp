#include "phl/loewner.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phl::loewner {

LoewnerPencil build_loewner(const tangential::RightData& right,
                            const tangential::LeftData& left) {
    const Index k = right.size();
    const Index q = left.size();
    const Index m = right.num_ports();
    if (k < 1 || q < 1) throw std::invalid_argument("build_loewner: empty data");
    if (left.num_ports() != m) {
        throw std::invalid_argument("build_loewner: port count mismatch between sides");
    }

    LoewnerPencil p;
    p.L.resize(q, k);
    p.sL.resize(q, k);
    for (Index i = 0; i < q; ++i) {
        const cplx mu = left.points(i);
        for (Index j = 0; j < k; ++j) {
            const cplx lam = right.points(j);
            const cplx denom = mu - lam;
            if (std::abs(denom) <= 1e-14 * std::max({std::abs(mu), std::abs(lam), 1.0})) {
                throw std::invalid_argument(
                    "build_loewner: coincident left/right points at (i=" +
                    std::to_string(i) + ", j=" + std::to_string(j) + ")");
            }
            const cplx vr = left.responses.col(i).transpose() * right.directions.col(j);
            const cplx lw = left.directions.col(i).transpose() * right.responses.col(j);
            p.L(i, j) = (vr - lw) / denom;
            p.sL(i, j) = (mu * vr - lw * lam) / denom;
        }
    }
    p.V = left.responses.transpose();
    p.W = right.responses;
    p.Lambda = right.points.asDiagonal();
    p.Mu = left.points.asDiagonal();
    p.Rdir = right.directions;
    p.Ldir = left.directions.transpose();
    return p;
}

std::pair<double, double> sylvester_residual(const LoewnerPencil& p) {
    const CMat lhs1 = p.Mu * p.L - p.L * p.Lambda;
    const CMat rhs1 = p.V * p.Rdir - p.Ldir * p.W;
    const CMat lhs2 = p.Mu * p.sL - p.sL * p.Lambda;
    const CMat rhs2 = p.Mu * p.V * p.Rdir - p.Ldir * p.W * p.Lambda;
    auto rel = [](const CMat& a, const CMat& b) {
        const double scale = std::max(a.norm(), b.norm());
        if (scale == 0.0) return 0.0;
        return (a - b).norm() / scale;
    };
    return {rel(lhs1, rhs1), rel(lhs2, rhs2)};
}

namespace {

int count_rank(const Vec& svals, double tol) {
    if (svals.size() == 0) return 0;
    const double cutoff = tol * svals(0);
    int r = 0;
    for (Index i = 0; i < svals.size(); ++i) {
        if (svals(i) >= cutoff && svals(i) > 0.0) ++r;
    }
    return r;
}

}  // namespace

OrderReport detect_orders(const LoewnerPencil& p, double tol) {
    if (!(tol > 0.0 && tol < 1.0)) {
        throw std::invalid_argument("detect_orders: tol must lie in (0, 1)");
    }
    CMat row_cat(p.rows(), 2 * p.cols());
    row_cat << p.L, p.sL;
    CMat col_cat(2 * p.rows(), p.cols());
    col_cat << p.L, p.sL;

    OrderReport rep;
    rep.tol_used = tol;
    Eigen::BDCSVD<CMat> svd_row(row_cat);
    Eigen::BDCSVD<CMat> svd_col(col_cat);
    Eigen::BDCSVD<CMat> svd_l(p.L);
    rep.singular_values = svd_row.singularValues();
    rep.singular_values_col = svd_col.singularValues();

    const int r_row = count_rank(rep.singular_values, tol);
    const int r_col = count_rank(rep.singular_values_col, tol);
    rep.nu = count_rank(svd_l.singularValues(), tol);
    if (r_row == r_col) {
        rep.r = r_row;
    } else if (std::abs(r_row - r_col) == 1) {
        rep.r = std::max(r_row, r_col);
        rep.rank_mismatch = true;
        rep.note = "row/column concatenation ranks differ by one (" +
                   std::to_string(r_row) + " vs " + std::to_string(r_col) +
                   "); taking the maximum";
    } else {
        throw std::runtime_error("detect_orders: concatenation ranks differ by " +
                                 std::to_string(std::abs(r_row - r_col)) +
                                 "; data is ill-posed");
    }
    rep.nu = std::min(rep.nu, rep.r);
    return rep;
}

lti::DescriptorRealization reduce_realization(const LoewnerPencil& p, int r, double tol) {
    if (r < 1) throw std::invalid_argument("reduce_realization: order must be positive");
    CMat row_cat(p.rows(), 2 * p.cols());
    row_cat << p.L, p.sL;
    CMat col_cat(2 * p.rows(), p.cols());
    col_cat << p.L, p.sL;

    Eigen::BDCSVD<CMat> svd_row(row_cat, Eigen::ComputeThinU);
    Eigen::BDCSVD<CMat> svd_col(col_cat, Eigen::ComputeThinV);
    const int max_rank = count_rank(svd_row.singularValues(), tol);
    if (r > max_rank) {
        throw std::invalid_argument("reduce_realization: requested order " + std::to_string(r) +
                                    " exceeds numerical rank " + std::to_string(max_rank));
    }
    CMat Y = svd_row.matrixU().leftCols(r);
    CMat X = svd_col.matrixV().leftCols(r);

    lti::DescriptorRealization sys;
    sys.E = -(Y.adjoint() * p.L * X);
    sys.A = -(Y.adjoint() * p.sL * X);
    sys.B = Y.adjoint() * p.V;
    sys.C = p.W * X;
    sys.D = CMat::Zero(p.num_ports(), p.num_ports());
    if (p.realified) {
        sys.E = linalg::require_real(sys.E, 1e-10, "reduce_realization E").cast<cplx>();
        sys.A = linalg::require_real(sys.A, 1e-10, "reduce_realization A").cast<cplx>();
        sys.B = linalg::require_real(sys.B, 1e-10, "reduce_realization B").cast<cplx>();
        sys.C = linalg::require_real(sys.C, 1e-10, "reduce_realization C").cast<cplx>();
    }
    return sys;
}

CMat realifier(const CVec& points) {
    const Index n = points.size();
    CMat U = CMat::Zero(n, n);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Index j = 0;
    while (j < n) {
        const cplx pt = points(j);
        const bool is_real = std::abs(pt.imag()) <= 1e-14 * std::max(std::abs(pt), 1.0);
        if (is_real) {
            U(j, j) = 1.0;
            ++j;
            continue;
        }
        if (j + 1 >= n) {
            throw std::invalid_argument("realifier: dangling complex point without partner");
        }
        const cplx partner = points(j + 1);
        if (std::abs(partner - std::conj(pt)) > 1e-10 * std::max(std::abs(pt), 1.0)) {
            throw std::invalid_argument(
                "realifier: points not conjugate-adjacent at index " + std::to_string(j));
        }
        // Per-pair block (1/sqrt(2)) [[1, i], [1, -i]]; the congruence
        // U^H diag(p, conj p) U is the real 2x2 rotation block.
        U(j, j) = inv_sqrt2;
        U(j, j + 1) = cplx(0.0, inv_sqrt2);
        U(j + 1, j) = inv_sqrt2;
        U(j + 1, j + 1) = cplx(0.0, -inv_sqrt2);
        j += 2;
    }
    return U;
}

LoewnerPencil realify(const LoewnerPencil& p) {
    if (p.realified) return p;
    const CVec lam = p.Lambda.diagonal();
    const CVec mu = p.Mu.diagonal();
    const CMat Ur = realifier(lam);
    const CMat Ul = realifier(mu);

    LoewnerPencil out;
    out.realified = true;
    auto realify_mat = [](const CMat& a, const char* what) {
        return linalg::require_real(a, 1e-10, what).cast<cplx>().eval();
    };
    out.L = realify_mat(Ul.adjoint() * p.L * Ur, "realify L");
    out.sL = realify_mat(Ul.adjoint() * p.sL * Ur, "realify sL");
    out.V = realify_mat(Ul.adjoint() * p.V, "realify V");
    out.W = realify_mat(p.W * Ur, "realify W");
    out.Lambda = realify_mat(Ur.adjoint() * p.Lambda * Ur, "realify Lambda");
    out.Mu = realify_mat(Ul.adjoint() * p.Mu * Ul, "realify Mu");
    out.Rdir = realify_mat(p.Rdir * Ur, "realify Rdir");
    out.Ldir = realify_mat(Ul.adjoint() * p.Ldir, "realify Ldir");
    return out;
}

}  // namespace phl::loewner
