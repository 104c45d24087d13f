#include "phl/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace phl::linalg {

double rel_fro_err(const CMat& a, const CMat& b) {
    const double scale = std::max(a.norm(), b.norm());
    if (scale == 0.0) return 0.0;
    return (a - b).norm() / scale;
}

double rel_fro_err(const Mat& a, const Mat& b) {
    const double scale = std::max(a.norm(), b.norm());
    if (scale == 0.0) return 0.0;
    return (a - b).norm() / scale;
}

double imag_fraction(const CMat& a) {
    const double scale = std::max(a.norm(), 1e-300);
    return a.imag().norm() / scale;
}

Mat require_real(const CMat& a, double rel_tol, const char* what) {
    if (imag_fraction(a) > rel_tol) {
        throw std::runtime_error(std::string(what) +
                                 ": non-negligible imaginary part (" +
                                 std::to_string(imag_fraction(a)) + ")");
    }
    return a.real();
}

double hermitian_err(const CMat& a) {
    const double scale = std::max(a.norm(), 1e-300);
    return (a - a.adjoint()).norm() / (2.0 * scale);
}

double skew_hermitian_err(const CMat& a) {
    const double scale = std::max(a.norm(), 1e-300);
    return (a + a.adjoint()).norm() / (2.0 * scale);
}

std::vector<cplx> pencil_eigenvalues(const CMat& A, const CMat& E) {
    if (A.rows() == 0) return {};
    Eigen::PartialPivLU<CMat> lu(E);
    CMat M = lu.solve(A);
    if (!M.allFinite() || (E * M - A).norm() > 1e-8 * std::max(A.norm(), 1.0)) {
        throw std::runtime_error("pencil_eigenvalues: E is numerically singular");
    }
    Eigen::ComplexEigenSolver<CMat> es(M, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("pencil_eigenvalues: eigen decomposition failed");
    }
    std::vector<cplx> out(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
    return out;
}

CMat lyapunov(const CMat& A, const CMat& W) {
    const Index n = A.rows();
    if (n == 0) return CMat(0, 0);
    Eigen::ComplexSchur<CMat> schur(A);
    if (schur.info() != Eigen::Success) {
        throw std::runtime_error("lyapunov: Schur decomposition failed");
    }
    const CMat& U = schur.matrixU();
    const CMat& T = schur.matrixT();
    CMat C = -(U.adjoint() * W * U);
    CMat Y = CMat::Zero(n, n);
    // T Y + Y T^H = C, T upper triangular; solve columns back to front.
    for (Index j = n - 1; j >= 0; --j) {
        CVec rhs = C.col(j);
        for (Index k = j + 1; k < n; ++k) {
            rhs -= std::conj(T(j, k)) * Y.col(k);
        }
        CMat Tj = T;
        Tj.diagonal().array() += std::conj(T(j, j));
        Y.col(j) = Tj.triangularView<Eigen::Upper>().solve(rhs);
    }
    CMat X = U * Y * U.adjoint();
    return 0.5 * (X + X.adjoint());
}

CMat sqrt_psd(const CMat& a) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (a + a.adjoint()));
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("sqrt_psd: eigen decomposition failed");
    }
    Vec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

namespace {

// Swaps the adjacent diagonal entries (i, i+1) of the upper-triangular T by a
// unitary similarity, updating U alongside.
void swap_schur_entries(CMat& U, CMat& T, Index i) {
    const cplx a = T(i, i);
    const cplx b = T(i, i + 1);
    const cplx c = T(i + 1, i + 1);
    // Eigenvector of [[a, b], [0, c]] for eigenvalue c.
    cplx v0 = b;
    cplx v1 = c - a;
    const double nrm = std::sqrt(std::norm(v0) + std::norm(v1));
    if (nrm == 0.0) return;  // equal eigenvalues, nothing to move
    v0 /= nrm;
    v1 /= nrm;
    CMat G(2, 2);
    G << v0, -std::conj(v1), v1, std::conj(v0);
    T.block(i, 0, 2, T.cols()) = G.adjoint() * T.block(i, 0, 2, T.cols());
    T.block(0, i, T.rows(), 2) = T.block(0, i, T.rows(), 2) * G;
    U.block(0, i, U.rows(), 2) = U.block(0, i, U.rows(), 2) * G;
    T(i + 1, i) = 0.0;
}

}  // namespace

Index order_schur(CMat& U, CMat& T, const std::function<bool(cplx)>& select) {
    const Index n = T.rows();
    bool moved = true;
    while (moved) {
        moved = false;
        for (Index i = 0; i + 1 < n; ++i) {
            if (!select(T(i, i)) && select(T(i + 1, i + 1))) {
                swap_schur_entries(U, T, i);
                moved = true;
            }
        }
    }
    Index count = 0;
    for (Index i = 0; i < n; ++i) {
        if (select(T(i, i))) ++count;
    }
    return count;
}

Mat real_span_basis(const CMat& Z, Index dim) {
    Mat stacked(Z.rows(), 2 * Z.cols());
    stacked << Z.real(), Z.imag();
    Eigen::ColPivHouseholderQR<Mat> qr(stacked);
    if (qr.rank() < dim) {
        throw std::runtime_error("real_span_basis: span is not conjugation-closed");
    }
    Mat Q = qr.householderQ() * Mat::Identity(Z.rows(), dim);
    return Q;
}

double spectral_norm(const CMat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMat> svd(a);
    return svd.singularValues()(0);
}

std::vector<double> log_grid(double omega_min, double omega_max, int count) {
    if (count < 1 || omega_min <= 0.0 || omega_max < omega_min) {
        throw std::invalid_argument("log_grid: need 0 < omega_min <= omega_max, count >= 1");
    }
    std::vector<double> grid(static_cast<size_t>(count));
    if (count == 1) {
        grid[0] = omega_min;
        return grid;
    }
    const double l0 = std::log10(omega_min);
    const double l1 = std::log10(omega_max);
    for (int i = 0; i < count; ++i) {
        grid[static_cast<size_t>(i)] = std::pow(10.0, l0 + (l1 - l0) * i / (count - 1));
    }
    return grid;
}

void parallel_for(Index n, int threads, const std::function<void(Index)>& fn) {
    if (n <= 0) return;
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (workers == 1) {
        for (Index i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    std::atomic<Index> next{0};
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (Index i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace phl::linalg
