#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "toposhield/adversary.hpp"
#include "toposhield/dynamics.hpp"
#include "toposhield/metrics.hpp"
#include "toposhield/shield.hpp"

namespace toposhield {

// Experiment orchestration behind the command-line tool. Everything here is
// deterministic: all randomness flows from the seeds in the config, and all
// emitted files are formatted with fixed rules, so identical configs produce
// byte-identical outputs.

// TOPOSHIELD_SEED, when set to an unsigned integer, replaces the built-in
// default seeds; explicit flags still win.
std::uint64_t default_seed(std::uint64_t fallback);

struct TopologyFromFile {
    std::filesystem::path path;
};

struct TopologyRandom {
    Index n = 6;
    double density = 1.0;
    std::uint64_t seed = 1;
};

using TopologySource = std::variant<TopologyFromFile, TopologyRandom>;

struct ExperimentConfig {
    TopologySource source;
    std::uint64_t x0_seed = 7;
    int T = 50;
    std::vector<double> alphas = {0.14, 0.28, 0.42, 0.56, 0.7};
    double eps0 = 0.2;
    FeedbackMethod method = FeedbackMethod::laplacian;
    double rank_tol = kDefaultRankTol;
    std::filesystem::path output_dir;

    // sparse_kernel synthesis inputs
    std::uint64_t synth_seed = 1;
    double safety = 0.9;
    KernelCombine combine = KernelCombine::random;

    bool emit_svg = true;
};

struct SweepPoint {
    SweepRecord record;
    FeedbackMatrix feedback;
    InferenceResult inference;
    std::vector<double> e1_series;
    bool warned_above_critical = false;
};

struct SweepOutcome {
    TopologyMatrix topology;
    std::vector<SweepPoint> points;
    std::vector<std::filesystem::path> files_written;

    SweepOutcome(TopologyMatrix topo) : topology(std::move(topo)) {}
};

TopologyMatrix resolve_topology(const TopologySource& source);

// Runs the full pipeline for each sweep point (synthesize, certify,
// simulate T steps, attack, evaluate) and writes sweep.csv, per-point
// e1_alpha_*.csv series, summary.json and, when enabled, two SVG line
// charts into output_dir. For the laplacian method there is one point per
// alpha; rank1 and sparse_kernel produce a single point.
SweepOutcome run_sweep(const ExperimentConfig& config);

// Attack a stored trajectory and score it against a stored topology.
// Report = inference report + E2 and Jaccard against the supplied W.
nlohmann::json run_attack(const std::filesystem::path& trajectory_csv,
                          const std::filesystem::path& topology_json, double rank_tol,
                          double eps0);

// Minimal self-contained SVG line chart (axes, legend, one polyline per
// series); no plotting dependency.
struct ChartSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<ChartSeries>& series, bool log_y = false);

} // namespace toposhield
