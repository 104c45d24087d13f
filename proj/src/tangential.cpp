#include "phl/tangential.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace phl::tangential {

void SamplingPlan::validate() const {
    if (omega_grid.empty()) {
        throw std::invalid_argument("SamplingPlan: empty frequency grid");
    }
    for (size_t i = 0; i + 1 < omega_grid.size(); ++i) {
        if (!(omega_grid[i] < omega_grid[i + 1])) {
            throw std::invalid_argument("SamplingPlan: grid must be strictly increasing");
        }
    }
    if (omega_grid.front() <= 0.0) {
        throw std::invalid_argument("SamplingPlan: frequencies must be positive");
    }
}

namespace {

CMat make_directions(Index m, Index count, const DirectionPolicy& policy) {
    CMat dirs(m, count);
    if (m == 1) {
        dirs.setOnes();
        return dirs;
    }
    if (policy.kind == DirectionPolicy::Kind::CycledIdentity) {
        dirs.setZero();
        for (Index j = 0; j < count; ++j) dirs(j % m, j) = 1.0;
        return dirs;
    }
    std::mt19937_64 rng(policy.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Index j = 0; j < count; ++j) {
        Vec v(m);
        for (Index i = 0; i < m; ++i) v(i) = gauss(rng);
        dirs.col(j) = (v / v.norm()).cast<cplx>();
    }
    return dirs;
}

}  // namespace

std::pair<RightData, LeftData> sample_data(const FrequencyResponse& oracle,
                                           const SamplingPlan& plan) {
    plan.validate();
    const size_t total = plan.omega_grid.size();

    std::vector<size_t> right_idx, left_idx;
    if (plan.partition == PartitionPolicy::Alternate) {
        for (size_t i = 0; i < total; ++i) {
            (i % 2 == 0 ? right_idx : left_idx).push_back(i);
        }
    } else {
        const size_t half = (total + 1) / 2;
        for (size_t i = 0; i < total; ++i) {
            (i < half ? right_idx : left_idx).push_back(i);
        }
    }

    CMat probe;
    try {
        probe = oracle(cplx(0.0, plan.omega_grid.front()));
    } catch (const std::exception& e) {
        throw std::runtime_error("sample_data: oracle failed at omega = " +
                                 std::to_string(plan.omega_grid.front()) + ": " + e.what());
    }
    const Index m = probe.rows();
    if (probe.cols() != m || m < 1) {
        throw std::invalid_argument("sample_data: oracle must return square matrices");
    }

    const Index k = static_cast<Index>(right_idx.size());
    const Index q = static_cast<Index>(left_idx.size());
    RightData right;
    right.points.resize(k);
    right.directions = make_directions(m, k, plan.directions);
    right.responses.resize(m, k);
    LeftData left;
    left.points.resize(q);
    left.directions = make_directions(m, q, plan.directions);
    left.responses.resize(m, q);

    auto evaluate = [&](double w) -> CMat {
        try {
            return oracle(cplx(0.0, w));
        } catch (const std::exception& e) {
            throw std::runtime_error("sample_data: oracle failed at omega = " +
                                     std::to_string(w) + ": " + e.what());
        }
    };

    for (Index j = 0; j < k; ++j) {
        const double w = plan.omega_grid[right_idx[static_cast<size_t>(j)]];
        right.points(j) = cplx(0.0, w);
        right.responses.col(j) = evaluate(w) * right.directions.col(j);
    }
    for (Index i = 0; i < q; ++i) {
        const double w = plan.omega_grid[left_idx[static_cast<size_t>(i)]];
        left.points(i) = cplx(0.0, w);
        // v_i = H(mu_i)^T l_i.
        left.responses.col(i) = evaluate(w).transpose() * left.directions.col(i);
    }
    return {std::move(right), std::move(left)};
}

namespace {

// Shared closure logic: points/directions/responses stored column-wise.
void close_columns(const CVec& pts, const CMat& dirs, const CMat& resp,
                   CVec& pts_out, CMat& dirs_out, CMat& resp_out) {
    const Index n = pts.size();
    const Index m = dirs.rows();
    std::vector<bool> used(static_cast<size_t>(n), false);
    std::vector<Index> order;  // output column -> source column, -1 marks synthesized
    std::vector<Index> conj_of;
    order.reserve(static_cast<size_t>(2 * n));
    conj_of.reserve(static_cast<size_t>(2 * n));

    auto is_real_pt = [&](Index j) {
        return std::abs(pts(j).imag()) <= 1e-14 * std::max(std::abs(pts(j)), 1.0);
    };
    auto find_conjugate = [&](Index j) -> Index {
        for (Index k = 0; k < n; ++k) {
            if (k == j || used[static_cast<size_t>(k)]) continue;
            const double tol = 1e-12 * std::max(std::abs(pts(j)), 1.0);
            if (std::abs(pts(k) - std::conj(pts(j))) <= tol) return k;
        }
        return -1;
    };

    for (Index j = 0; j < n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        used[static_cast<size_t>(j)] = true;
        if (is_real_pt(j)) {
            order.push_back(j);
            conj_of.push_back(-2);  // real singleton
            continue;
        }
        const Index partner = find_conjugate(j);
        const bool j_upper = pts(j).imag() > 0.0;
        if (partner >= 0) used[static_cast<size_t>(partner)] = true;
        // Upper-half-plane member first, partner (found or synthesized) second.
        if (j_upper) {
            order.push_back(j);
            conj_of.push_back(-2);
            order.push_back(partner >= 0 ? partner : -1);
            conj_of.push_back(j);
        } else {
            order.push_back(partner >= 0 ? partner : -1);
            conj_of.push_back(partner >= 0 ? -2 : j);
            order.push_back(j);
            conj_of.push_back(-2);
        }
    }

    const Index total = static_cast<Index>(order.size());
    pts_out.resize(total);
    dirs_out.resize(m, total);
    resp_out.resize(m, total);
    for (Index c = 0; c < total; ++c) {
        const Index src = order[static_cast<size_t>(c)];
        if (src >= 0) {
            pts_out(c) = pts(src);
            dirs_out.col(c) = dirs.col(src);
            resp_out.col(c) = resp.col(src);
        } else {
            const Index base = conj_of[static_cast<size_t>(c)];
            pts_out(c) = std::conj(pts(base));
            dirs_out.col(c) = dirs.col(base).conjugate();
            resp_out.col(c) = resp.col(base).conjugate();
        }
    }
}

}  // namespace

std::pair<RightData, LeftData> conjugate_close(const RightData& right, const LeftData& left) {
    RightData r_out;
    LeftData l_out;
    close_columns(right.points, right.directions, right.responses,
                  r_out.points, r_out.directions, r_out.responses);
    close_columns(left.points, left.directions, left.responses,
                  l_out.points, l_out.directions, l_out.responses);
    return {std::move(r_out), std::move(l_out)};
}

namespace {

void check_shift(const Mat& D_s, Index m) {
    if (D_s.rows() != m || D_s.cols() != m) {
        throw std::invalid_argument("shift_data: D_s dimension mismatch");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (D_s + D_s.transpose()),
                                          Eigen::EigenvaluesOnly);
    const double scale = std::max(D_s.norm(), 1e-300);
    if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
        throw std::invalid_argument("shift_data: D_s + D_s^T has negative eigenvalues");
    }
}

}  // namespace

RightData shift_data(const RightData& data, const Mat& D_s) {
    check_shift(D_s, data.num_ports());
    RightData out = data;
    out.responses += D_s.cast<cplx>() * data.directions;
    return out;
}

LeftData shift_data(const LeftData& data, const Mat& D_s) {
    check_shift(D_s, data.num_ports());
    LeftData out = data;
    out.responses += D_s.transpose().cast<cplx>() * data.directions;
    return out;
}

}  // namespace phl::tangential
