#include "toposhield/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "json_detail.hpp"

namespace toposhield {

namespace {

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

nlohmann::json certificate_json(const PreservationCertificate& c) {
    return {
        {"res_right", c.res_right},   {"res_left", c.res_left},
        {"mu2_modulus", c.mu2_modulus}, {"perron_simple", c.perron_simple},
        {"pass", c.pass},
    };
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write file: " + path.string());
    }
    out << text;
}

} // namespace

std::uint64_t default_seed(std::uint64_t fallback) {
    const char* env = std::getenv("TOPOSHIELD_SEED");
    if (env == nullptr || *env == '\0') return fallback;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == nullptr || *end != '\0') return fallback;
    return static_cast<std::uint64_t>(v);
}

TopologyMatrix resolve_topology(const TopologySource& source) {
    if (const auto* file = std::get_if<TopologyFromFile>(&source)) {
        return TopologyMatrix::load_json_file(file->path);
    }
    const auto& random = std::get<TopologyRandom>(source);
    return random_topology(random.n, random.density, random.seed);
}

SweepOutcome run_sweep(const ExperimentConfig& config) {
    if (config.T < 1) {
        throw InvalidParameterError("run_sweep: T must be >= 1");
    }
    if (config.method == FeedbackMethod::laplacian && config.alphas.empty()) {
        throw InvalidParameterError("run_sweep: laplacian sweep needs a nonempty alpha list");
    }

    SweepOutcome outcome(resolve_topology(config.source));
    const TopologyMatrix& topo = outcome.topology;
    const SpectralProfile profile = spectral_profile(topo);
    const double critical = (1.0 - profile.r_max) / (1.0 + profile.r_max);
    const ConstraintSystem cs = build_constraint_system(topo);

    const Eigen::VectorXd x0 = draw_initial_state(topo.n(), config.x0_seed);
    const ConsensusPoint target = consensus_point(topo, x0);

    std::vector<std::string> warnings;

    const auto run_point = [&](FeedbackMatrix fb, double alpha_or_eps) {
        SweepPoint point;
        point.feedback = std::move(fb);
        point.warned_above_critical =
            point.feedback.method == FeedbackMethod::laplacian && alpha_or_eps >= critical;
        if (point.warned_above_critical) {
            warnings.push_back("alpha " + fmt("%g", alpha_or_eps) +
                               " is at or above the guaranteed-stable bound " +
                               fmt("%g", critical) + "; certificate checked directly");
        }
        if (!point.feedback.certificate.pass) {
            warnings.push_back("certificate failed for " +
                               std::string(to_string(point.feedback.method)) + " point " +
                               fmt("%g", alpha_or_eps));
        }

        const Eigen::MatrixXd w_eff = topo.entries() + point.feedback.K;
        const Trajectory traj = simulate(w_eff, x0, config.T);
        point.inference = ols_estimate(snapshot_split(traj), config.rank_tol);
        point.e1_series = state_error_series(traj, target.vector);

        point.record.alpha_or_eps = alpha_or_eps;
        point.record.E2_spectral = inference_deviation(point.inference.W_hat, topo.entries());
        point.record.E2_frobenius =
            inference_deviation_frobenius(point.inference.W_hat, topo.entries());
        point.record.jaccard =
            jaccard_support(point.inference.W_hat, topo.entries(), config.eps0);
        point.record.mu2_modulus = point.feedback.certificate.mu2_modulus;
        point.record.e1_final = point.e1_series.back();
        point.record.unique = point.inference.unique;
        outcome.points.push_back(std::move(point));
    };

    switch (config.method) {
        case FeedbackMethod::laplacian:
            for (double alpha : config.alphas) {
                if (alpha == 0.0) {
                    // zero-feedback baseline row: the observer sees W itself
                    FeedbackMatrix baseline;
                    baseline.n = topo.n();
                    baseline.K = Eigen::MatrixXd::Zero(topo.n(), topo.n());
                    baseline.method = FeedbackMethod::laplacian;
                    baseline.params = LaplacianParams{0.0};
                    baseline.certificate = verify_preservation(topo, baseline.K);
                    run_point(std::move(baseline), 0.0);
                } else {
                    run_point(synth_laplacian(topo, alpha), alpha);
                }
            }
            break;
        case FeedbackMethod::rank1:
            run_point(synth_rank_one(topo, x0), 0.0);
            break;
        case FeedbackMethod::sparse_kernel: {
            FeedbackMatrix fb =
                synth_sparse_kernel(topo, config.combine, config.synth_seed, config.safety);
            const double eps = std::get<SparseKernelParams>(fb.params).epsilon;
            run_point(std::move(fb), eps);
            break;
        }
    }

    // ---- emit files (single collector, deterministic order) ----
    std::filesystem::create_directories(config.output_dir);
    const auto emit = [&](const std::filesystem::path& name, const std::string& text) {
        const auto path = config.output_dir / name;
        write_text_file(path, text);
        outcome.files_written.push_back(path);
    };

    {
        std::ostringstream csv;
        std::vector<SweepRecord> records;
        records.reserve(outcome.points.size());
        for (const auto& p : outcome.points) records.push_back(p.record);
        write_sweep_csv(csv, records);
        emit("sweep.csv", csv.str());
    }

    for (const auto& p : outcome.points) {
        std::ostringstream series;
        series << "t,e1\n";
        for (std::size_t t = 0; t < p.e1_series.size(); ++t) {
            series << t << "," << fmt("%.17g", p.e1_series[t]) << "\n";
        }
        std::string name;
        if (p.feedback.method == FeedbackMethod::laplacian) {
            name = "e1_alpha_" + fmt("%g", p.record.alpha_or_eps) + ".csv";
        } else {
            name = std::string("e1_") + to_string(p.feedback.method) + ".csv";
        }
        emit(name, series.str());
    }

    {
        nlohmann::json summary;
        summary["method"] = to_string(config.method);
        summary["T"] = config.T;
        summary["eps0"] = config.eps0;
        summary["rank_tol"] = config.rank_tol;
        summary["x0_seed"] = config.x0_seed;
        summary["x0"] = detail::vector_to_json(x0);
        summary["consensus_value"] = target.value;
        summary["r_max"] = profile.r_max;
        summary["alpha_critical"] = critical;
        summary["z"] = cs.z();
        summary["constraint_rank"] = cs.rank;
        summary["kernel_dimension"] = cs.kernel_dimension();
        if (config.method == FeedbackMethod::laplacian) {
            summary["alphas"] = config.alphas;
        }
        nlohmann::json points = nlohmann::json::array();
        for (const auto& p : outcome.points) {
            nlohmann::json entry;
            entry["alpha_or_eps"] = p.record.alpha_or_eps;
            entry["certificate"] = certificate_json(p.feedback.certificate);
            entry["sparsity_violations"] = p.feedback.sparsity_violations;
            entry["E2_spectral"] = p.record.E2_spectral;
            entry["E2_frobenius"] = p.record.E2_frobenius;
            entry["jaccard"] = p.record.jaccard;
            entry["mu2_modulus"] = p.record.mu2_modulus;
            entry["e1_final"] = p.record.e1_final;
            entry["unique"] = p.record.unique;
            entry["rank_Xa"] = p.inference.rank_Xa;
            entry["warned_above_critical"] = p.warned_above_critical;
            points.push_back(std::move(entry));
        }
        summary["points"] = std::move(points);
        summary["warnings"] = warnings;
        emit("summary.json", summary.dump(2) + "\n");
    }

    if (config.emit_svg) {
        std::vector<ChartSeries> e1_series;
        for (const auto& p : outcome.points) {
            ChartSeries s;
            s.label = p.feedback.method == FeedbackMethod::laplacian
                          ? "alpha=" + fmt("%g", p.record.alpha_or_eps)
                          : std::string(to_string(p.feedback.method));
            for (std::size_t t = 0; t < p.e1_series.size(); ++t) {
                s.x.push_back(static_cast<double>(t));
                s.y.push_back(p.e1_series[t]);
            }
            e1_series.push_back(std::move(s));
        }
        emit("e1_series.svg",
             render_line_chart("state error E1(t)", "t", "E1", e1_series, /*log_y=*/true));

        ChartSeries e2{"E2_spectral", {}, {}};
        ChartSeries jac{"jaccard", {}, {}};
        ChartSeries mu2{"mu2_modulus", {}, {}};
        for (const auto& p : outcome.points) {
            e2.x.push_back(p.record.alpha_or_eps);
            e2.y.push_back(p.record.E2_spectral);
            jac.x.push_back(p.record.alpha_or_eps);
            jac.y.push_back(p.record.jaccard);
            mu2.x.push_back(p.record.alpha_or_eps);
            mu2.y.push_back(p.record.mu2_modulus);
        }
        emit("metrics_vs_alpha.svg",
             render_line_chart("inference metrics", "alpha", "value", {e2, jac, mu2}));
    }

    return outcome;
}

nlohmann::json run_attack(const std::filesystem::path& trajectory_csv,
                          const std::filesystem::path& topology_json, double rank_tol,
                          double eps0) {
    std::ifstream in(trajectory_csv);
    if (!in) {
        throw MalformedInputError("cannot open trajectory file: " + trajectory_csv.string());
    }
    const Trajectory traj = read_trajectory_csv(in);
    const TopologyMatrix topo = TopologyMatrix::load_json_file(topology_json);
    if (traj.n != topo.n()) {
        throw MalformedInputError("run_attack: trajectory and topology sizes disagree");
    }
    const InferenceResult inference = ols_estimate(snapshot_split(traj), rank_tol);
    nlohmann::json report = inference_report_json(inference);
    report["E2_spectral"] = inference_deviation(inference.W_hat, topo.entries());
    report["E2_frobenius"] = inference_deviation_frobenius(inference.W_hat, topo.entries());
    report["jaccard"] = jaccard_support(inference.W_hat, topo.entries(), eps0);
    return report;
}

// ---- SVG line chart ----

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range padded(double lo, double hi) {
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

} // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<ChartSeries>& series, bool log_y) {
    constexpr double kWidth = 640, kHeight = 420;
    constexpr double kLeft = 74, kRight = 24, kTop = 42, kBottom = 52;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    constexpr double kLogFloor = 1e-16;

    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const auto& s : series) {
        for (double v : s.x) {
            x_lo = std::min(x_lo, v);
            x_hi = std::max(x_hi, v);
        }
        for (double v : s.y) {
            const double t = log_y ? std::log10(std::max(v, kLogFloor)) : v;
            y_lo = std::min(y_lo, t);
            y_hi = std::max(y_hi, t);
        }
    }
    if (!std::isfinite(x_lo)) {
        x_lo = 0;
        x_hi = 1;
        y_lo = 0;
        y_hi = 1;
    }
    const Range xr = padded(x_lo, x_hi);
    const Range yr = padded(y_lo, y_hi);

    const auto px = [&](double x) {
        return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w;
    };
    const auto py = [&](double y) {
        const double t = log_y ? std::log10(std::max(y, kLogFloor)) : y;
        return kTop + plot_h - (t - yr.lo) / (yr.hi - yr.lo) * plot_h;
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

    // axes + ticks
    svg << "<g stroke=\"#333\" stroke-width=\"1\">\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\""
        << kLeft + plot_w << "\" y2=\"" << kTop + plot_h << "\"/>\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kTop + plot_h << "\"/>\n</g>\n";

    constexpr int kTicks = 5;
    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (int i = 0; i <= kTicks; ++i) {
        const double fx = xr.lo + (xr.hi - xr.lo) * i / kTicks;
        const double gx = px(fx);
        svg << "<line x1=\"" << fmt("%.2f", gx) << "\" y1=\"" << kTop + plot_h << "\" x2=\""
            << fmt("%.2f", gx) << "\" y2=\"" << kTop + plot_h + 5
            << "\" stroke=\"#333\"/>\n<text x=\"" << fmt("%.2f", gx) << "\" y=\""
            << kTop + plot_h + 18 << "\" text-anchor=\"middle\">" << fmt("%.4g", fx)
            << "</text>\n";

        const double fy = yr.lo + (yr.hi - yr.lo) * i / kTicks;
        const double gy = kTop + plot_h - (fy - yr.lo) / (yr.hi - yr.lo) * plot_h;
        std::string label = log_y ? ("1e" + fmt("%.1f", fy)) : fmt("%.4g", fy);
        svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt("%.2f", gy) << "\" x2=\""
            << kLeft << "\" y2=\"" << fmt("%.2f", gy) << "\" stroke=\"#333\"/>\n<text x=\""
            << kLeft - 8 << "\" y=\"" << fmt("%.2f", gy + 4)
            << "\" text-anchor=\"end\">" << label << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\">" << x_label << "</text>\n"
        << "<text x=\"16\" y=\"" << kTop + plot_h / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << kTop + plot_h / 2
        << ")\">" << y_label << "</text>\n</g>\n";

    // data
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (i) svg << " ";
            svg << fmt("%.2f", px(series[s].x[i])) << "," << fmt("%.2f", py(series[s].y[i]));
        }
        svg << "\"/>\n";
    }

    // legend
    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        const double ly = kTop + 8 + 16 * static_cast<double>(s);
        svg << "<line x1=\"" << kLeft + plot_w - 120 << "\" y1=\"" << ly << "\" x2=\""
            << kLeft + plot_w - 100 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n<text x=\"" << kLeft + plot_w - 94 << "\" y=\""
            << ly + 4 << "\">" << series[s].label << "</text>\n";
    }
    svg << "</g>\n</svg>\n";
    return svg.str();
}

} // namespace toposhield
