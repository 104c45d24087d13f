#include "phl/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace phl::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_matrix_market(const SpMat& mat, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << mat.rows() << " " << mat.cols() << " " << mat.nonZeros() << "\n";
    for (int k = 0; k < mat.outerSize(); ++k) {
        for (SpMat::InnerIterator it(mat, k); it; ++it) {
            out << (it.row() + 1) << " " << (it.col() + 1) << " " << format_double(it.value())
                << "\n";
        }
    }
}

SpMat read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("read_matrix_market: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0) {
        throw std::runtime_error("read_matrix_market: missing MatrixMarket banner in " + path);
    }
    if (line.find("coordinate") == std::string::npos ||
        line.find("real") == std::string::npos) {
        throw std::runtime_error("read_matrix_market: only coordinate real supported");
    }
    const bool symmetric = line.find("symmetric") != std::string::npos;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '%') break;
    }
    std::istringstream header(line);
    Index rows = 0, cols = 0;
    long long nnz = 0;
    header >> rows >> cols >> nnz;
    if (rows <= 0 || cols <= 0 || nnz < 0) {
        throw std::runtime_error("read_matrix_market: bad size line in " + path);
    }
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(nnz) * (symmetric ? 2 : 1));
    for (long long e = 0; e < nnz; ++e) {
        Index i = 0, j = 0;
        double v = 0.0;
        if (!(in >> i >> j >> v)) {
            throw std::runtime_error("read_matrix_market: truncated entries in " + path);
        }
        trips.emplace_back(i - 1, j - 1, v);
        if (symmetric && i != j) trips.emplace_back(j - 1, i - 1, v);
    }
    SpMat mat(rows, cols);
    mat.setFromTriplets(trips.begin(), trips.end());
    return mat;
}

namespace {

json complex_matrix_to_json(const CMat& mat) {
    json rows = json::array();
    for (Index i = 0; i < mat.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < mat.cols(); ++j) {
            row.push_back({mat(i, j).real(), mat(i, j).imag()});
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json real_matrix_to_json(const Mat& mat) {
    json rows = json::array();
    for (Index i = 0; i < mat.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < mat.cols(); ++j) row.push_back(mat(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

CMat json_to_complex_matrix(const json& j, const fs::path& base) {
    if (j.is_object() && j.contains("mm")) {
        const SpMat sp = read_matrix_market((base / j["mm"].get<std::string>()).string());
        return Mat(sp).cast<cplx>();
    }
    if (!j.is_array()) throw std::runtime_error("realization JSON: matrix must be an array");
    const Index rows = static_cast<Index>(j.size());
    Index cols = rows ? static_cast<Index>(j[0].size()) : 0;
    CMat mat(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<size_t>(i)];
        if (static_cast<Index>(row.size()) != cols) {
            throw std::runtime_error("realization JSON: ragged matrix");
        }
        for (Index c = 0; c < cols; ++c) {
            const auto& entry = row[static_cast<size_t>(c)];
            if (entry.is_number()) {
                mat(i, c) = cplx(entry.get<double>(), 0.0);
            } else {
                mat(i, c) = cplx(entry[0].get<double>(), entry[1].get<double>());
            }
        }
    }
    return mat;
}

Mat json_to_real_matrix(const json& j, const fs::path& base) {
    CMat c = json_to_complex_matrix(j, base);
    return linalg::require_real(c, 1e-12, "realization JSON matrix");
}

}  // namespace

void save_realization(const lti::DescriptorRealization& sys, const std::string& path,
                      const std::string& kind) {
    json doc;
    doc["kind"] = kind;
    doc["n"] = sys.order();
    doc["m"] = sys.num_ports();
    doc["E"] = complex_matrix_to_json(sys.E);
    doc["A"] = complex_matrix_to_json(sys.A);
    doc["B"] = complex_matrix_to_json(sys.B);
    doc["C"] = complex_matrix_to_json(sys.C);
    doc["D"] = complex_matrix_to_json(sys.D);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_realization: cannot open " + path);
    out << doc.dump(2) << "\n";
}

void save_realization(const lti::PHRealization& sys, const std::string& path) {
    json doc;
    doc["kind"] = "ph";
    doc["n"] = sys.order();
    doc["m"] = sys.num_ports();
    doc["M"] = real_matrix_to_json(sys.M);
    doc["Q"] = real_matrix_to_json(sys.Q);
    doc["J"] = real_matrix_to_json(sys.J);
    doc["R"] = real_matrix_to_json(sys.R);
    doc["G"] = real_matrix_to_json(sys.G);
    doc["P"] = real_matrix_to_json(sys.P);
    doc["N"] = real_matrix_to_json(sys.N);
    doc["S"] = real_matrix_to_json(sys.S);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_realization: cannot open " + path);
    out << doc.dump(2) << "\n";
}

RealizationFile load_realization(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_realization: cannot open " + path);
    json doc = json::parse(in);
    const fs::path base = fs::path(path).parent_path();

    RealizationFile file;
    file.kind = doc.at("kind").get<std::string>();
    if (file.kind == "descriptor" || file.kind == "standard") {
        lti::DescriptorRealization sys;
        sys.A = json_to_complex_matrix(doc.at("A"), base);
        sys.B = json_to_complex_matrix(doc.at("B"), base);
        sys.C = json_to_complex_matrix(doc.at("C"), base);
        sys.D = doc.contains("D") ? json_to_complex_matrix(doc.at("D"), base)
                                  : CMat::Zero(sys.B.cols(), sys.B.cols());
        sys.E = doc.contains("E") ? json_to_complex_matrix(doc.at("E"), base)
                                  : CMat::Identity(sys.A.rows(), sys.A.cols());
        sys.validate();
        file.descriptor = std::move(sys);
    } else if (file.kind == "ph") {
        lti::PHRealization sys;
        sys.M = json_to_real_matrix(doc.at("M"), base);
        sys.Q = json_to_real_matrix(doc.at("Q"), base);
        sys.J = json_to_real_matrix(doc.at("J"), base);
        sys.R = json_to_real_matrix(doc.at("R"), base);
        sys.G = json_to_real_matrix(doc.at("G"), base);
        sys.P = json_to_real_matrix(doc.at("P"), base);
        sys.N = json_to_real_matrix(doc.at("N"), base);
        sys.S = json_to_real_matrix(doc.at("S"), base);
        file.ph = std::move(sys);
    } else {
        throw std::runtime_error("load_realization: unknown kind '" + file.kind + "'");
    }
    return file;
}

void write_tangential_csv(const tangential::RightData& right, const tangential::LeftData& left,
                          const std::string& path) {
    const Index m = right.num_ports();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_tangential_csv: cannot open " + path);
    out << "side,omega";
    for (Index c = 0; c < m; ++c) out << ",dir_re_" << (c + 1);
    for (Index c = 0; c < m; ++c) out << ",dir_im_" << (c + 1);
    for (Index c = 0; c < m; ++c) out << ",resp_re_" << (c + 1);
    for (Index c = 0; c < m; ++c) out << ",resp_im_" << (c + 1);
    out << "\n";

    auto dump = [&](char side, const CVec& pts, const CMat& dirs, const CMat& resp) {
        for (Index j = 0; j < pts.size(); ++j) {
            if (std::abs(pts(j).real()) > 1e-12 * std::max(std::abs(pts(j)), 1.0)) {
                throw std::invalid_argument(
                    "write_tangential_csv: points must lie on the imaginary axis");
            }
            out << side << "," << format_double(pts(j).imag());
            for (Index c = 0; c < m; ++c) out << "," << format_double(dirs(c, j).real());
            for (Index c = 0; c < m; ++c) out << "," << format_double(dirs(c, j).imag());
            for (Index c = 0; c < m; ++c) out << "," << format_double(resp(c, j).real());
            for (Index c = 0; c < m; ++c) out << "," << format_double(resp(c, j).imag());
            out << "\n";
        }
    };
    dump('R', right.points, right.directions, right.responses);
    dump('L', left.points, left.directions, left.responses);
}

std::pair<tangential::RightData, tangential::LeftData> read_tangential_csv(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("read_tangential_csv: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) {
        throw std::runtime_error("read_tangential_csv: empty file " + path);
    }
    Index cols = 1;
    for (char ch : header) {
        if (ch == ',') ++cols;
    }
    if ((cols - 2) % 4 != 0 || cols < 6) {
        throw std::runtime_error("read_tangential_csv: malformed header in " + path);
    }
    const Index m = (cols - 2) / 4;

    struct Row {
        char side;
        double omega;
        CVec dir, resp;
    };
    std::vector<Row> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ',');
        if (tok != "L" && tok != "R") {
            throw std::runtime_error("read_tangential_csv: bad side tag '" + tok + "'");
        }
        Row row;
        row.side = tok[0];
        auto next = [&]() {
            if (!std::getline(ss, tok, ',')) {
                throw std::runtime_error("read_tangential_csv: truncated row");
            }
            return std::stod(tok);
        };
        row.omega = next();
        Vec dre(m), dim(m), rre(m), rim(m);
        for (Index c = 0; c < m; ++c) dre(c) = next();
        for (Index c = 0; c < m; ++c) dim(c) = next();
        for (Index c = 0; c < m; ++c) rre(c) = next();
        for (Index c = 0; c < m; ++c) rim(c) = next();
        row.dir = dre.cast<cplx>() + cplx(0, 1) * dim.cast<cplx>();
        row.resp = rre.cast<cplx>() + cplx(0, 1) * rim.cast<cplx>();
        rows.push_back(std::move(row));
    }

    const Index kr = static_cast<Index>(std::count_if(rows.begin(), rows.end(),
                                                      [](const Row& r) { return r.side == 'R'; }));
    const Index kl = static_cast<Index>(rows.size()) - kr;
    if (kr == 0 || kl == 0) {
        throw std::runtime_error("read_tangential_csv: need both right and left rows");
    }
    tangential::RightData right;
    right.points.resize(kr);
    right.directions.resize(m, kr);
    right.responses.resize(m, kr);
    tangential::LeftData left;
    left.points.resize(kl);
    left.directions.resize(m, kl);
    left.responses.resize(m, kl);
    Index ir = 0, il = 0;
    for (const Row& row : rows) {
        if (row.side == 'R') {
            right.points(ir) = cplx(0.0, row.omega);
            right.directions.col(ir) = row.dir;
            right.responses.col(ir) = row.resp;
            ++ir;
        } else {
            left.points(il) = cplx(0.0, row.omega);
            left.directions.col(il) = row.dir;
            left.responses.col(il) = row.resp;
            ++il;
        }
    }
    return {std::move(right), std::move(left)};
}

void write_fom(const wave::FEMatrices& fem, const wave::Mesh& mesh,
               const wave::WaveParams& params, const std::string& out_prefix) {
    const fs::path prefix(out_prefix);
    if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
    auto mm_name = [&](const char* tag) { return prefix.filename().string() + "_" + tag + ".mtx"; };
    auto mm_path = [&](const char* tag) {
        return (prefix.parent_path() / mm_name(tag)).string();
    };
    write_matrix_market(fem.M_q, mm_path("M_q"));
    write_matrix_market(fem.M_p, mm_path("M_p"));
    write_matrix_market(fem.M_eps, mm_path("M_eps"));
    write_matrix_market(fem.M_bnd, mm_path("M_bnd"));
    write_matrix_market(fem.G, mm_path("G"));
    write_matrix_market(fem.B, mm_path("B"));

    json doc;
    doc["kind"] = "wave2d-fom";
    doc["dimensions"] = {{"N_q", fem.N_q}, {"N_p", fem.N_p}, {"N_bnd", fem.N_bnd},
                         {"n", fem.state_dim()}, {"m", fem.N_bnd}};
    doc["files"] = {{"M_q", mm_name("M_q")}, {"M_p", mm_name("M_p")},
                    {"M_eps", mm_name("M_eps")}, {"M_bnd", mm_name("M_bnd")},
                    {"G", mm_name("G")}, {"B", mm_name("B")}};
    doc["parameters"] = {{"rho", params.rho}, {"eps", params.eps},
                         {"T", real_matrix_to_json(params.T_tensor)}};
    doc["mesh"] = {{"domain", mesh.domain_tag}, {"h", mesh.h},
                   {"vertices", mesh.num_vertices()}, {"triangles", mesh.num_triangles()}};
    json bnd = json::array();
    for (int v : mesh.boundary_vertices) {
        const auto& pt = mesh.vertices[static_cast<size_t>(v)];
        bnd.push_back({pt.x(), pt.y()});
    }
    doc["boundary_ordering"] = {{"convention", "counterclockwise from the origin corner"},
                                {"coordinates", std::move(bnd)}};
    std::ofstream out(prefix.string() + "_fom.json");
    if (!out) throw std::runtime_error("write_fom: cannot open manifest");
    out << doc.dump(2) << "\n";
}

FomManifest read_fom(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::invalid_argument("read_fom: cannot open " + manifest_path);
    json doc = json::parse(in);
    if (doc.at("kind").get<std::string>() != "wave2d-fom") {
        throw std::runtime_error("read_fom: not a wave FOM manifest");
    }
    const fs::path base = fs::path(manifest_path).parent_path();
    auto load = [&](const char* tag) {
        return read_matrix_market((base / doc.at("files").at(tag).get<std::string>()).string());
    };
    FomManifest mf;
    mf.fem.M_q = load("M_q");
    mf.fem.M_p = load("M_p");
    mf.fem.M_eps = load("M_eps");
    mf.fem.M_bnd = load("M_bnd");
    mf.fem.G = load("G");
    mf.fem.B = load("B");
    mf.fem.N_q = mf.fem.M_q.rows();
    mf.fem.N_p = mf.fem.M_p.rows();
    mf.fem.N_bnd = mf.fem.M_bnd.rows();
    mf.h = doc.at("mesh").at("h").get<double>();
    mf.domain_tag = doc.at("mesh").at("domain").get<std::string>();
    for (const auto& pt : doc.at("boundary_ordering").at("coordinates")) {
        mf.boundary_coords.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    return mf;
}

void write_spectral_zero_csv(const passive::SpectralZeroSet& zeros, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_spectral_zero_csv: cannot open " + path);
    out << "re,im,direction_residual\n";
    for (Index j = 0; j < zeros.size(); ++j) {
        const cplx z = zeros.zeros[static_cast<size_t>(j)];
        const double resid = zeros.residuals.size() > j ? zeros.residuals(j) : 0.0;
        out << format_double(z.real()) << "," << format_double(z.imag()) << ","
            << format_double(resid) << "\n";
    }
}

void save_pencil(const loewner::LoewnerPencil& pencil, const std::string& data_hash,
                 const std::string& path) {
    json doc;
    doc["kind"] = "loewner-pencil";
    doc["data_hash"] = data_hash;
    doc["realified"] = pencil.realified;
    doc["L"] = complex_matrix_to_json(pencil.L);
    doc["sL"] = complex_matrix_to_json(pencil.sL);
    doc["V"] = complex_matrix_to_json(pencil.V);
    doc["W"] = complex_matrix_to_json(pencil.W);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_pencil: cannot open " + path);
    out << doc.dump(2) << "\n";
}

void write_tangential_json(const tangential::RightData& right, const tangential::LeftData& left,
                           const std::string& path) {
    auto side = [](const CVec& pts, const CMat& dirs, const CMat& resp) {
        json s;
        json points = json::array();
        for (Index j = 0; j < pts.size(); ++j) points.push_back({pts(j).real(), pts(j).imag()});
        s["points"] = std::move(points);
        s["directions"] = complex_matrix_to_json(dirs);
        s["responses"] = complex_matrix_to_json(resp);
        return s;
    };
    json doc;
    doc["kind"] = "tangential-data";
    doc["m"] = right.num_ports();
    doc["right"] = side(right.points, right.directions, right.responses);
    doc["left"] = side(left.points, left.directions, left.responses);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_tangential_json: cannot open " + path);
    out << doc.dump(2) << "\n";
}

std::pair<tangential::RightData, tangential::LeftData> read_tangential_json(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("read_tangential_json: cannot open " + path);
    json doc = json::parse(in);
    if (doc.at("kind").get<std::string>() != "tangential-data") {
        throw std::runtime_error("read_tangential_json: wrong container kind");
    }
    auto side = [&](const json& s, CVec& pts, CMat& dirs, CMat& resp) {
        const auto& points = s.at("points");
        pts.resize(static_cast<Index>(points.size()));
        for (size_t j = 0; j < points.size(); ++j) {
            pts(static_cast<Index>(j)) = cplx(points[j][0].get<double>(), points[j][1].get<double>());
        }
        dirs = json_to_complex_matrix(s.at("directions"), fs::path(path).parent_path());
        resp = json_to_complex_matrix(s.at("responses"), fs::path(path).parent_path());
    };
    tangential::RightData right;
    tangential::LeftData left;
    side(doc.at("right"), right.points, right.directions, right.responses);
    side(doc.at("left"), left.points, left.directions, left.responses);
    return {std::move(right), std::move(left)};
}

void write_singular_values_csv(const Vec& svals, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_singular_values_csv: cannot open " + path);
    out << "index,sigma\n";
    for (Index i = 0; i < svals.size(); ++i) {
        out << (i + 1) << "," << format_double(svals(i)) << "\n";
    }
}

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("file_hash: cannot open " + path);
    std::uint64_t hash = 1469598103934665603ull;
    char ch;
    while (in.get(ch)) {
        hash ^= static_cast<unsigned char>(ch);
        hash *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, hash);
    return buf;
}

}  // namespace phl::io
