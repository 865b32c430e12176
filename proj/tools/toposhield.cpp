// toposhield: consensus-network simulation, topology-inference attacks, and
// inference-resistant feedback synthesis from the command line.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "toposhield/experiment.hpp"

namespace ts = toposhield;

namespace {

// 0 success, 1 usage/malformed input, 2 generation failure,
// 3 insufficient data, 4 consensus conditions violated.
constexpr int kExitUsage = 1;
constexpr int kExitGeneration = 2;
constexpr int kExitInsufficientData = 3;
constexpr int kExitConsensusViolation = 4;

struct GenerateArgs {
    ts::Index n = 6;
    double density = 1.0;
    std::uint64_t seed = ts::default_seed(1);
    std::string out;
};

struct SynthesizeArgs {
    std::string topology;
    std::string method = "laplacian";
    double alpha = 0.0;
    bool alpha_set = false;
    std::uint64_t seed = ts::default_seed(1);
    std::string combine = "random";
    double safety = 0.9;
    std::string support_mode = "diagonal_and_pattern";
    std::uint64_t x0_seed = ts::default_seed(7);
    std::string out;
};

struct SimulateArgs {
    std::string topology;
    std::string feedback;
    std::uint64_t x0_seed = ts::default_seed(7);
    int T = 50;
    std::string out;
};

struct AttackArgs {
    std::string trajectory;
    std::string topology;
    double rank_tol = ts::kDefaultRankTol;
    double eps0 = 0.2;
    std::string out;
};

struct SweepArgs {
    std::string topology;
    ts::Index n = 6;
    double density = 1.0;
    std::uint64_t seed = ts::default_seed(1);
    std::uint64_t x0_seed = ts::default_seed(7);
    int T = 50;
    std::vector<double> alphas = {0.14, 0.28, 0.42, 0.56, 0.7};
    double eps0 = 0.2;
    std::string method = "laplacian";
    double rank_tol = ts::kDefaultRankTol;
    std::uint64_t synth_seed = ts::default_seed(1);
    std::string combine = "random";
    double safety = 0.9;
    std::string output_dir;
    bool no_svg = false;
};

ts::KernelCombine parse_combine(const std::string& s) {
    if (s == "random") return ts::KernelCombine::random;
    if (s == "max_support") return ts::KernelCombine::max_support;
    throw ts::InvalidParameterError("unknown combine strategy: " + s);
}

ts::SupportMode parse_support_mode(const std::string& s) {
    if (s == "diagonal_and_pattern") return ts::SupportMode::diagonal_and_pattern;
    if (s == "pattern_only") return ts::SupportMode::pattern_only;
    throw ts::InvalidParameterError("unknown support mode: " + s);
}

int run_generate(const GenerateArgs& args) {
    const ts::TopologyMatrix topo = ts::random_topology(args.n, args.density, args.seed);
    topo.save_json_file(args.out);
    std::cout << "wrote " << args.out << " (n=" << args.n << ", density=" << args.density
              << ", seed=" << args.seed << ")\n";
    return 0;
}

int run_synthesize(const SynthesizeArgs& args) {
    const ts::TopologyMatrix topo = ts::TopologyMatrix::load_json_file(args.topology);
    const ts::FeedbackMethod method = ts::feedback_method_from_string(args.method);
    ts::FeedbackMatrix fb;
    switch (method) {
        case ts::FeedbackMethod::laplacian: {
            if (!args.alpha_set) {
                std::cerr << "synthesize: --alpha is required for the laplacian method\n";
                return kExitUsage;
            }
            fb = ts::synth_laplacian(topo, args.alpha);
            break;
        }
        case ts::FeedbackMethod::rank1: {
            const Eigen::VectorXd x0 = ts::draw_initial_state(topo.n(), args.x0_seed);
            fb = ts::synth_rank_one(topo, x0);
            break;
        }
        case ts::FeedbackMethod::sparse_kernel:
            fb = ts::synth_sparse_kernel(topo, parse_combine(args.combine), args.seed,
                                         args.safety, parse_support_mode(args.support_mode));
            break;
    }
    ts::save_feedback_file(args.out, fb);
    std::cout << "wrote " << args.out << " (method=" << ts::to_string(fb.method)
              << ", certificate " << (fb.certificate.pass ? "passes" : "FAILS") << ")\n";
    if (!fb.certificate.pass) {
        std::cout << "  residuals: K1=" << fb.certificate.res_right
                  << " w'K=" << fb.certificate.res_left
                  << " mu2=" << fb.certificate.mu2_modulus
                  << " perron_simple=" << fb.certificate.perron_simple << "\n";
    }
    return 0;
}

int run_simulate(const SimulateArgs& args) {
    const ts::TopologyMatrix topo = ts::TopologyMatrix::load_json_file(args.topology);
    Eigen::MatrixXd w_eff = topo.entries();
    if (!args.feedback.empty()) {
        w_eff += ts::load_feedback_file(args.feedback).K;
    }
    const Eigen::VectorXd x0 = ts::draw_initial_state(topo.n(), args.x0_seed);
    const ts::Trajectory traj = ts::simulate(w_eff, x0, args.T);
    std::ofstream out(args.out, std::ios::binary);
    if (!out) {
        throw ts::Error("cannot write trajectory file: " + args.out);
    }
    ts::write_trajectory_csv(out, traj);
    std::cout << "wrote " << args.out << " (T=" << args.T << ")\n";
    return 0;
}

int run_attack(const AttackArgs& args) {
    const nlohmann::json report =
        ts::run_attack(args.trajectory, args.topology, args.rank_tol, args.eps0);
    if (args.out.empty()) {
        std::cout << report.dump(2) << "\n";
    } else {
        std::ofstream out(args.out, std::ios::binary);
        if (!out) {
            throw ts::Error("cannot write report file: " + args.out);
        }
        out << report.dump(2) << "\n";
        std::cout << "wrote " << args.out << "\n";
    }
    return 0;
}

int run_sweep(const SweepArgs& args) {
    ts::ExperimentConfig config;
    if (!args.topology.empty()) {
        config.source = ts::TopologyFromFile{args.topology};
    } else {
        config.source = ts::TopologyRandom{args.n, args.density, args.seed};
    }
    config.x0_seed = args.x0_seed;
    config.T = args.T;
    config.alphas = args.alphas;
    config.eps0 = args.eps0;
    config.method = ts::feedback_method_from_string(args.method);
    config.rank_tol = args.rank_tol;
    config.output_dir = args.output_dir;
    config.synth_seed = args.synth_seed;
    config.safety = args.safety;
    config.combine = parse_combine(args.combine);
    config.emit_svg = !args.no_svg;

    const ts::SweepOutcome outcome = ts::run_sweep(config);
    for (const auto& path : outcome.files_written) {
        std::cout << "wrote " << path.string() << "\n";
    }
    for (const auto& point : outcome.points) {
        std::cout << "point " << point.record.alpha_or_eps << ": certificate "
                  << (point.feedback.certificate.pass ? "passes" : "FAILS")
                  << ", E2=" << point.record.E2_spectral
                  << ", jaccard=" << point.record.jaccard
                  << ", unique=" << (point.record.unique ? "true" : "false") << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"consensus-network topology shielding workbench"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* cmd_gen = app.add_subcommand("generate", "draw a random consensus topology");
    cmd_gen->add_option("--n", gen.n, "node count")->check(CLI::Range(2, 1 << 20));
    cmd_gen->add_option("--density", gen.density, "off-diagonal support probability");
    cmd_gen->add_option("--seed", gen.seed, "draw seed");
    cmd_gen->add_option("--out", gen.out, "output topology JSON")->required();

    SynthesizeArgs syn;
    auto* cmd_syn = app.add_subcommand("synthesize", "synthesize a feedback gain");
    cmd_syn->add_option("--topology", syn.topology, "topology JSON")->required();
    cmd_syn->add_option("--method", syn.method, "laplacian | rank1 | sparse_kernel");
    auto* alpha_opt = cmd_syn->add_option("--alpha", syn.alpha, "laplacian gain");
    cmd_syn->add_option("--seed", syn.seed, "kernel combination seed");
    cmd_syn->add_option("--combine", syn.combine, "random | max_support");
    cmd_syn->add_option("--safety", syn.safety, "fraction of the maximal stable scale");
    cmd_syn->add_option("--support-mode", syn.support_mode,
                        "diagonal_and_pattern | pattern_only");
    cmd_syn->add_option("--x0-seed", syn.x0_seed, "initial-state seed (rank1)");
    cmd_syn->add_option("--out", syn.out, "output feedback JSON")->required();

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "simulate consensus dynamics");
    cmd_sim->add_option("--topology", sim.topology, "topology JSON")->required();
    cmd_sim->add_option("--feedback", sim.feedback, "feedback JSON (optional)");
    cmd_sim->add_option("--x0-seed", sim.x0_seed, "initial-state seed");
    cmd_sim->add_option("--t", sim.T, "number of transitions")->check(CLI::PositiveNumber);
    cmd_sim->add_option("--out", sim.out, "output trajectory CSV")->required();

    AttackArgs atk;
    auto* cmd_atk = app.add_subcommand("attack", "least-squares topology inference");
    cmd_atk->add_option("--trajectory", atk.trajectory, "trajectory CSV")->required();
    cmd_atk->add_option("--topology", atk.topology, "reference topology JSON")->required();
    cmd_atk->add_option("--rank-tol", atk.rank_tol, "relative singular value cutoff");
    cmd_atk->add_option("--eps0", atk.eps0, "support threshold for the Jaccard index");
    cmd_atk->add_option("--out", atk.out, "report JSON (default: stdout)");

    SweepArgs swp;
    auto* cmd_swp = app.add_subcommand("sweep", "full synthesize/simulate/attack sweep");
    cmd_swp->add_option("--topology", swp.topology, "topology JSON (else random)");
    cmd_swp->add_option("--n", swp.n, "random topology node count");
    cmd_swp->add_option("--density", swp.density, "random topology density");
    cmd_swp->add_option("--seed", swp.seed, "random topology seed");
    cmd_swp->add_option("--x0-seed", swp.x0_seed, "initial-state seed");
    cmd_swp->add_option("--t", swp.T, "transitions per point")->check(CLI::PositiveNumber);
    cmd_swp->add_option("--alphas", swp.alphas, "laplacian gains")->delimiter(',');
    cmd_swp->add_option("--eps0", swp.eps0, "support threshold for the Jaccard index");
    cmd_swp->add_option("--method", swp.method, "laplacian | rank1 | sparse_kernel");
    cmd_swp->add_option("--rank-tol", swp.rank_tol, "relative singular value cutoff");
    cmd_swp->add_option("--synth-seed", swp.synth_seed, "kernel combination seed");
    cmd_swp->add_option("--combine", swp.combine, "random | max_support");
    cmd_swp->add_option("--safety", swp.safety, "fraction of the maximal stable scale");
    cmd_swp->add_option("--out-dir", swp.output_dir, "output directory")->required();
    cmd_swp->add_flag("--no-svg", swp.no_svg, "skip SVG charts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    syn.alpha_set = alpha_opt->count() > 0;

    try {
        if (cmd_gen->parsed()) return run_generate(gen);
        if (cmd_syn->parsed()) return run_synthesize(syn);
        if (cmd_sim->parsed()) return run_simulate(sim);
        if (cmd_atk->parsed()) return run_attack(atk);
        if (cmd_swp->parsed()) return run_sweep(swp);
    } catch (const ts::GenerationFailureError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitGeneration;
    } catch (const ts::InsufficientDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInsufficientData;
    } catch (const ts::ConsensusViolationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConsensusViolation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
