// File formats: the JSON realization container (dense entries inline,
// sparse matrices referenced as MatrixMarket files), MatrixMarket
// coordinate I/O, the tangential-data CSV, and small CSV/JSON reports.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phl/linalg.hpp"
#include "phl/lti.hpp"
#include "phl/passive.hpp"
#include "phl/tangential.hpp"
#include "phl/wave2d.hpp"

namespace phl::io {

using SpMat = Eigen::SparseMatrix<double>;

// --- MatrixMarket (coordinate real general) ---
void write_matrix_market(const SpMat& mat, const std::string& path);
SpMat read_matrix_market(const std::string& path);

// --- JSON realization container ---
// kind "descriptor"/"standard": complex entries as [re, im] pairs.
// kind "ph": real entries; any matrix may be {"mm": "relative/path.mtx"}.
void save_realization(const lti::DescriptorRealization& sys, const std::string& path,
                      const std::string& kind = "descriptor");
void save_realization(const lti::PHRealization& sys, const std::string& path);

struct RealizationFile {
    std::string kind;
    std::optional<lti::DescriptorRealization> descriptor;
    std::optional<lti::PHRealization> ph;
};
RealizationFile load_realization(const std::string& path);

// --- Tangential data CSV ---
// Columns: side{L,R}, omega, dir_re_1..m, dir_im_1..m, resp_re_1..m, resp_im_1..m.
void write_tangential_csv(const tangential::RightData& right, const tangential::LeftData& left,
                          const std::string& path);
std::pair<tangential::RightData, tangential::LeftData> read_tangential_csv(
    const std::string& path);

// JSON alternative mirroring the RightData/LeftData fields; points as
// [re, im] pairs, so data off the imaginary axis survives too.
void write_tangential_json(const tangential::RightData& right, const tangential::LeftData& left,
                           const std::string& path);
std::pair<tangential::RightData, tangential::LeftData> read_tangential_json(
    const std::string& path);

// Pencil dump with the hash of the data file it came from.
void save_pencil(const loewner::LoewnerPencil& pencil, const std::string& data_hash,
                 const std::string& path);

// --- Wave FOM artifact: MatrixMarket files plus a JSON manifest ---
struct FomManifest {
    wave::FEMatrices fem;
    std::vector<std::array<double, 2>> boundary_coords;  // CCW, channel k -> point
    double h = 0.0;
    std::string domain_tag;
};
void write_fom(const wave::FEMatrices& fem, const wave::Mesh& mesh, const wave::WaveParams& params,
               const std::string& out_prefix);
FomManifest read_fom(const std::string& manifest_path);

// --- Small reports ---
void write_spectral_zero_csv(const passive::SpectralZeroSet& zeros, const std::string& path);
void write_singular_values_csv(const Vec& svals, const std::string& path);

// FNV-1a of the file bytes, hex-encoded; ties pencil dumps back to the data
// file they came from.
std::string file_hash(const std::string& path);

// Fixed "%.17g" formatting shared by every CSV writer so identical runs
// produce byte-identical files.
std::string format_double(double v);

}  // namespace phl::io
