// Right/left tangential data sets: sampling from a frequency-response
// oracle, conjugate closure, and response shifting by a feedthrough matrix.
#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "phl/linalg.hpp"

namespace phl::tangential {

// Right data {lambda_j, r_j, w_j}: points on the diagonal of Lambda,
// directions r_j and responses w_j = H(lambda_j) r_j as matrix columns.
struct RightData {
    CVec points;      // k
    CMat directions;  // m x k
    CMat responses;   // m x k

    Index size() const { return points.size(); }
    Index num_ports() const { return directions.rows(); }
};

// Left data {mu_i, l_i^T, v_i^T}: stored column-wise, so column i of
// `directions` is l_i and column i of `responses` is v_i (v_i^T = l_i^T H(mu_i)).
struct LeftData {
    CVec points;      // q
    CMat directions;  // m x q
    CMat responses;   // m x q

    Index size() const { return points.size(); }
    Index num_ports() const { return directions.rows(); }
};

enum class PartitionPolicy { Alternate, SplitHalf };

struct DirectionPolicy {
    enum class Kind { CycledIdentity, RandomUnit };
    Kind kind = Kind::CycledIdentity;
    std::uint64_t seed = 0;
};

struct SamplingPlan {
    std::vector<double> omega_grid;  // strictly increasing, rad/s
    DirectionPolicy directions;
    PartitionPolicy partition = PartitionPolicy::Alternate;

    void validate() const;
};

using FrequencyResponse = std::function<CMat(cplx)>;

// Evaluates the oracle along i*omega and splits the grid into right/left
// sets per the partition policy. Directions follow the direction policy;
// SISO data gets unit directions.
std::pair<RightData, LeftData> sample_data(const FrequencyResponse& oracle,
                                           const SamplingPlan& plan);

// Ensures every point appears together with its complex conjugate (data for
// synthesized partners is conjugated); conjugate pairs end up adjacent with
// the positive-imaginary-part member first. Idempotent up to reordering.
std::pair<RightData, LeftData> conjugate_close(const RightData& right, const LeftData& left);

// w_j <- w_j + D_s r_j. D_s + D_s^T must have no negative eigenvalues; the
// identification pipeline additionally requires strict definiteness.
RightData shift_data(const RightData& data, const Mat& D_s);
// v_i^T <- v_i^T + l_i^T D_s.
LeftData shift_data(const LeftData& data, const Mat& D_s);

}  // namespace phl::tangential
