// End-to-end batch pipeline: FOM generation or loading, tangential
// sampling, passive identification, model comparison, and plot-ready CSV
// exports (frequency responses and spectral-zero scatter sets).
#pragma once

#include <string>
#include <vector>

#include "phl/io.hpp"
#include "phl/passive.hpp"
#include "phl/tangential.hpp"
#include "phl/wave2d.hpp"

namespace phl::pipeline {

struct RunConfig {
    // FOM source: generate an L-shape wave FOM or load a manifest.
    bool generate_fom = true;
    std::string fom_manifest;
    double h = 0.0625;
    double rho = 1.0;
    double eps = 1e-3;
    double tensor_iso = 1.0;

    // Sampling plan.
    double omega_min = 1e-1;
    double omega_max = 3162.2776601683795;  // 10^3.5
    int num_points = 300;
    std::string partition = "alternate";  // or "split-half"
    std::string direction_policy = "cycled-identity";  // or "random-unit"
    std::uint64_t seed = 0;
    std::vector<int> channels{1};

    // Identification.
    double shift_delta = 1.0;
    int order = -1;  // -1: rank-revealed
    double rank_tol = 1e-10;
    std::string stabilize = "nehari";  // nehari | reflect | off

    std::string out_dir = "out";
    int threads = 1;
    // Channels whose max relative deviation exceeds this are flagged degraded.
    double degraded_threshold = 5e-2;
};

void save_config(const RunConfig& config, const std::string& path);
RunConfig load_config(const std::string& path);

tangential::SamplingPlan sampling_plan(const RunConfig& config);
stabilization::StabilizeMode parse_stabilize(const std::string& mode);

struct ChannelAccuracy {
    int row = 0, col = 0;       // 1-based within the selected channel set
    double max_rel_loewner = 0.0;
    double mean_rel_loewner = 0.0;
    double max_rel_ph = 0.0;
    double mean_rel_ph = 0.0;
    bool degraded = false;
};

struct ComparisonReport {
    std::vector<double> omega;
    std::vector<CMat> data_samples;     // per frequency, m x m
    std::vector<CMat> loewner_samples;
    std::vector<CMat> ph_samples;
    std::vector<ChannelAccuracy> channels;
    passive::SpectralZeroSet zeros_loewner;   // plain Loewner model
    passive::SpectralZeroSet zeros_shifted;   // projected shifted model (selected)
    passive::SpectralZeroSet zeros_ph;        // final pH model
    Index n_fom = 0;
    int order = 0;
    lti::PHRealization ph_model;
    lti::DescriptorRealization loewner_model;
    RunConfig config_echo;
    std::vector<std::string> warnings;
};

// generate/load -> sample -> identify -> compare. Writes the realization
// JSON, report CSVs and the config echo into config.out_dir.
ComparisonReport run_pipeline(const RunConfig& config);

// Comparison of sampled data against the two models over the data grid.
ComparisonReport compare_models(const std::vector<double>& omega,
                                const std::vector<CMat>& data,
                                const lti::DescriptorRealization& loewner_model,
                                const lti::PHRealization& ph_model,
                                const RunConfig& config);

enum class FigureKind { FreqResponse, SpectralZeros, Zoom };

// CSV exports matching the figure content: magnitude overlays per channel,
// spectral-zero scatter triples (re, im, model), and the near-axis zoom
// (|Re| <= 1e-6) with band counts for 1e-9 and 1e-10.
std::vector<std::string> export_figures(const ComparisonReport& report, FigureKind which,
                                        const std::string& out_dir);

void write_report(const ComparisonReport& report, const std::string& out_dir);

}  // namespace phl::pipeline
