#include "toposhield/shield.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "json_detail.hpp"

namespace toposhield {

namespace {

constexpr double kStructuralZero = 1e-12;

PreservationCertificate certificate_for(const Eigen::MatrixXd& w_entries,
                                        const Eigen::VectorXd& left_perron,
                                        const Eigen::MatrixXd& k) {
    PreservationCertificate cert;
    cert.res_right = (k * Eigen::VectorXd::Ones(k.cols())).cwiseAbs().maxCoeff();
    cert.res_left = (left_perron.transpose() * k).cwiseAbs().maxCoeff();

    Eigen::EigenSolver<Eigen::MatrixXd> es(w_entries + k, /*computeEigenvectors=*/false);
    const Eigen::VectorXcd mu = es.eigenvalues();
    const Index n = mu.size();

    Index nearest = 0;
    double nearest_dist = std::numeric_limits<double>::infinity();
    Index near_one = 0;
    for (Index i = 0; i < n; ++i) {
        const double d = std::abs(mu(i) - std::complex<double>(1.0, 0.0));
        if (d < nearest_dist) {
            nearest_dist = d;
            nearest = i;
        }
        if (d <= PreservationCertificate::kResidualTol) ++near_one;
    }
    cert.perron_simple = (near_one == 1);

    double mu2 = 0.0;
    for (Index i = 0; i < n; ++i) {
        if (i == nearest) continue;
        mu2 = std::max(mu2, std::abs(mu(i)));
    }
    cert.mu2_modulus = mu2;

    cert.pass = cert.res_right <= PreservationCertificate::kResidualTol &&
                cert.res_left <= PreservationCertificate::kResidualTol &&
                cert.mu2_modulus < 1.0 && cert.perron_simple;
    return cert;
}

// Off-diagonal entries of K outside the support of W.
Index count_sparsity_violations(const Eigen::MatrixXd& w, const Eigen::MatrixXd& k) {
    Index count = 0;
    for (Index i = 0; i < w.rows(); ++i) {
        for (Index j = 0; j < w.cols(); ++j) {
            if (i != j && w(i, j) == 0.0 && std::abs(k(i, j)) > kStructuralZero) ++count;
        }
    }
    return count;
}

double spectral_norm(const Eigen::MatrixXd& m) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

} // namespace

const char* to_string(FeedbackMethod m) {
    switch (m) {
        case FeedbackMethod::laplacian: return "laplacian";
        case FeedbackMethod::rank1: return "rank1";
        case FeedbackMethod::sparse_kernel: return "sparse_kernel";
    }
    return "unknown";
}

FeedbackMethod feedback_method_from_string(const std::string& s) {
    if (s == "laplacian") return FeedbackMethod::laplacian;
    if (s == "rank1") return FeedbackMethod::rank1;
    if (s == "sparse_kernel") return FeedbackMethod::sparse_kernel;
    throw InvalidParameterError("unknown feedback method: " + s);
}

PreservationCertificate verify_preservation(const TopologyMatrix& w, const Eigen::MatrixXd& k) {
    if (k.rows() != w.n() || k.cols() != w.n()) {
        throw MalformedInputError("verify_preservation: K must match the topology size");
    }
    const SpectralProfile profile = spectral_profile(w);
    return certificate_for(w.entries(), profile.left_perron, k);
}

double alpha_critical(const TopologyMatrix& w) {
    const SpectralProfile profile = spectral_profile(w);
    return (1.0 - profile.r_max) / (1.0 + profile.r_max);
}

FeedbackMatrix synth_laplacian(const TopologyMatrix& w, double alpha) {
    if (!(alpha > 0.0)) {
        throw InvalidParameterError("synth_laplacian: alpha must be > 0");
    }
    const Index n = w.n();
    FeedbackMatrix fb;
    fb.n = n;
    fb.K = -alpha * (Eigen::MatrixXd::Identity(n, n) - w.entries());
    fb.method = FeedbackMethod::laplacian;
    fb.params = LaplacianParams{alpha};
    fb.certificate = verify_preservation(w, fb.K);
    fb.sparsity_violations = count_sparsity_violations(w.entries(), fb.K);
    return fb;
}

namespace {

FeedbackMatrix rank_one_with_probe(const TopologyMatrix& w, const Eigen::VectorXd& x0,
                                   Eigen::VectorXd q) {
    const SpectralProfile profile = spectral_profile(w);
    const Eigen::VectorXd& lp = profile.left_perron;

    const double consensus_value = lp.dot(x0);
    if (std::abs(consensus_value) <= 1e-12 * lp.norm() * x0.norm()) {
        throw ZeroConsensusValueError(
            "synth_rank_one: w'x0 = 0, the freeze gain is undefined");
    }

    const double qx0 = q.dot(x0);
    const Eigen::VectorXd wx0 = w.entries() * x0;
    const double beta = lp.dot(wx0) / consensus_value;
    const Eigen::VectorXd p = (beta * x0 - wx0) / qx0;

    FeedbackMatrix fb;
    fb.n = w.n();
    fb.K = p * q.transpose();
    fb.method = FeedbackMethod::rank1;
    fb.params = RankOneParams{std::move(q), beta};
    fb.certificate = verify_preservation(w, fb.K);
    fb.sparsity_violations = count_sparsity_violations(w.entries(), fb.K);
    return fb;
}

} // namespace

FeedbackMatrix synth_rank_one(const TopologyMatrix& w, const Eigen::VectorXd& x0) {
    if (x0.size() != w.n()) {
        throw MalformedInputError("synth_rank_one: x0 length does not match W");
    }
    // q = centered x0 satisfies q'1 = 0 by construction and
    // q'x0 = ||x0 - mean(x0) 1||^2 > 0 whenever x0 leaves span{1}.
    Eigen::VectorXd q = x0.array() - x0.mean();
    if (q.norm() <= 1e-10 * std::max(1.0, x0.norm())) {
        throw DegenerateInitialStateError(
            "synth_rank_one: x0 lies in span{1}; every admissible probe is orthogonal to it");
    }
    return rank_one_with_probe(w, x0, std::move(q));
}

FeedbackMatrix synth_rank_one(const TopologyMatrix& w, const Eigen::VectorXd& x0,
                              const Eigen::VectorXd& q) {
    if (x0.size() != w.n() || q.size() != w.n()) {
        throw MalformedInputError("synth_rank_one: vector lengths must match W");
    }
    if (q.norm() == 0.0) {
        throw InvalidParameterError("synth_rank_one: q must be nonzero");
    }
    if (std::abs(q.sum()) > 1e-10 * q.norm() * std::sqrt(static_cast<double>(w.n()))) {
        throw InvalidParameterError("synth_rank_one: q'1 must vanish");
    }
    if (std::abs(q.dot(x0)) <= 1e-12 * q.norm() * x0.norm()) {
        throw InvalidParameterError("synth_rank_one: q'x0 must be nonzero");
    }
    return rank_one_with_probe(w, x0, q);
}

ConstraintSystem build_constraint_system(const TopologyMatrix& w, SupportMode mode) {
    const SpectralProfile profile = spectral_profile(w);
    const Eigen::VectorXd& lp = profile.left_perron;
    const Index n = w.n();

    ConstraintSystem cs;
    cs.free_support.n = n;
    // Column-stacked order: (i, j) free entries scanned column by column.
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            const bool free_entry = (w.entries()(i, j) != 0.0) ||
                                    (i == j && mode == SupportMode::diagonal_and_pattern);
            if (free_entry) {
                cs.free_support.pairs.insert({i, j});
                cs.column_map.push_back({i, j});
            }
        }
    }

    const Index z = static_cast<Index>(cs.column_map.size());
    cs.M_tilde = Eigen::MatrixXd::Zero(2 * n, z);
    for (Index c = 0; c < z; ++c) {
        const auto [i, j] = cs.column_map[static_cast<std::size_t>(c)];
        cs.M_tilde(i, c) = 1.0;          // row block: (K 1)_i
        cs.M_tilde(n + j, c) = lp(i);    // column block: (w'K)_j
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cs.M_tilde, Eigen::ComputeFullV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    const double cutoff = 1e-10 * sigma(0);
    Index rank = 0;
    for (Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff) ++rank;
    }
    cs.rank = rank;
    cs.kernel_basis = svd.matrixV().rightCols(z - rank);
    return cs;
}

Eigen::MatrixXd assemble_from_support(const Eigen::VectorXd& theta,
                                      const std::vector<IndexPair>& column_map, Index n) {
    if (theta.size() != static_cast<Index>(column_map.size())) {
        throw MalformedInputError("assemble_from_support: theta length does not match map");
    }
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    for (Index c = 0; c < theta.size(); ++c) {
        const auto [i, j] = column_map[static_cast<std::size_t>(c)];
        k(i, j) = theta(c);
    }
    return k;
}

EpsilonScaleResult epsilon_scale(const TopologyMatrix& w, const Eigen::MatrixXd& k0,
                                 double safety) {
    if (!(safety > 0.0) || !(safety < 1.0)) {
        throw InvalidParameterError("epsilon_scale: safety must lie in (0, 1)");
    }
    if (k0.rows() != w.n() || k0.cols() != w.n()) {
        throw MalformedInputError("epsilon_scale: K0 must match the topology size");
    }
    if (k0.norm() == 0.0) {
        throw DegenerateInputError("epsilon_scale: K0 must be nonzero");
    }

    const SpectralProfile profile = spectral_profile(w);
    const Eigen::VectorXd& lp = profile.left_perron;

    const double res_right = (k0 * Eigen::VectorXd::Ones(w.n())).cwiseAbs().maxCoeff();
    const double res_left = (lp.transpose() * k0).cwiseAbs().maxCoeff();
    if (res_right > PreservationCertificate::kResidualTol ||
        res_left > PreservationCertificate::kResidualTol) {
        throw InvalidParameterError(
            "epsilon_scale: K0 must satisfy K0 1 = 0 and w'K0 = 0 within 1e-8");
    }

    const auto cert_at = [&](double eps) {
        return certificate_for(w.entries(), lp, eps * k0);
    };

    // Start from the value guaranteed safe by eigenvalue perturbation theory:
    // below delta / (2 kappa_V ||K0||), no eigenvalue can migrate across the
    // spectral gap. Without kappa_V, start at 1.
    const double delta = 1.0 - profile.r_max;
    double eps = 1.0;
    if (profile.kappa_V) {
        eps = delta / (2.0 * *profile.kappa_V * spectral_norm(k0));
    }

    constexpr int kMaxSteps = 200;
    constexpr double kEpsCap = 1e15;

    double lo = 0.0, hi = 0.0;
    if (cert_at(eps).pass) {
        lo = eps;
        hi = 2.0 * eps;
        int steps = 0;
        while (hi < kEpsCap && cert_at(hi).pass && steps++ < kMaxSteps) {
            lo = hi;
            hi *= 2.0;
        }
        if (hi >= kEpsCap || steps > kMaxSteps) {
            // Spectrum never destabilizes along this direction; take the cap.
            hi = lo * 1.01;
        }
    } else {
        hi = eps;
        lo = eps / 2.0;
        int steps = 0;
        while (!cert_at(lo).pass && steps++ < kMaxSteps) {
            hi = lo;
            lo /= 2.0;
        }
        if (steps > kMaxSteps) {
            throw InvalidParameterError("epsilon_scale: no feasible epsilon found");
        }
    }

    // Geometric bisection to the upper edge of the feasible interval.
    int steps = 0;
    while (hi / lo > 1.05 && steps++ < kMaxSteps) {
        const double mid = std::sqrt(lo * hi);
        if (cert_at(mid).pass) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    double chosen = safety * lo;
    PreservationCertificate cert = cert_at(chosen);
    int guard = 0;
    while (!cert.pass && guard++ < kMaxSteps) {
        chosen /= 2.0;
        cert = cert_at(chosen);
    }
    if (!cert.pass) {
        throw InvalidParameterError("epsilon_scale: no feasible epsilon found");
    }
    return EpsilonScaleResult{chosen, cert};
}

namespace {

Index count_nonzeros(const Eigen::VectorXd& v) {
    Index count = 0;
    for (Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > kStructuralZero) ++count;
    }
    return count;
}

Eigen::VectorXd combine_kernel_basis(const Eigen::MatrixXd& basis, KernelCombine combine,
                                     std::uint64_t seed) {
    const Index dim = basis.cols();
    if (combine == KernelCombine::random) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::VectorXd coeffs(dim);
        for (Index i = 0; i < dim; ++i) {
            coeffs(i) = gauss(rng);
        }
        return basis * coeffs;
    }

    // max_support: seed with the densest single basis vector, then keep an
    // addition only if it strictly grows the nonzero count.
    std::vector<Index> order(static_cast<std::size_t>(dim));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        const Index na = count_nonzeros(basis.col(a));
        const Index nb = count_nonzeros(basis.col(b));
        if (na != nb) return na > nb;
        return a < b;
    });
    Eigen::VectorXd running = basis.col(order.front());
    Index best = count_nonzeros(running);
    for (std::size_t k = 1; k < order.size(); ++k) {
        const Eigen::VectorXd trial = running + basis.col(order[k]);
        const Index trial_count = count_nonzeros(trial);
        if (trial_count > best) {
            running = trial;
            best = trial_count;
        }
    }
    return running;
}

} // namespace

FeedbackMatrix synth_sparse_kernel(const TopologyMatrix& w, KernelCombine combine,
                                   std::uint64_t seed, double safety, SupportMode mode) {
    const ConstraintSystem cs = build_constraint_system(w, mode);
    if (cs.kernel_dimension() == 0) {
        std::ostringstream msg;
        msg << "synth_sparse_kernel: constraint system has full column rank (z=" << cs.z()
            << ", rank=" << cs.rank << "); no nonzero gain exists on this support";
        throw InfeasibleError(msg.str());
    }

    Eigen::VectorXd theta = combine_kernel_basis(cs.kernel_basis, combine, seed);
    if (theta.norm() <= kStructuralZero) {
        throw CombinationDegenerateError("synth_sparse_kernel: combination collapsed to zero");
    }
    theta /= theta.norm();

    const Eigen::MatrixXd k0 = assemble_from_support(theta, cs.column_map, w.n());
    const EpsilonScaleResult scaled = epsilon_scale(w, k0, safety);

    FeedbackMatrix fb;
    fb.n = w.n();
    fb.K = scaled.epsilon * k0;
    fb.method = FeedbackMethod::sparse_kernel;
    fb.params = SparseKernelParams{scaled.epsilon, combine, seed, safety, mode};
    fb.certificate = scaled.certificate;
    fb.sparsity_violations = count_sparsity_violations(w.entries(), fb.K);
    return fb;
}

nlohmann::json feedback_json(const FeedbackMatrix& fb) {
    nlohmann::json doc;
    doc["method"] = to_string(fb.method);
    doc["K"] = detail::matrix_to_json(fb.K);
    doc["certificate"] = {
        {"res_right", fb.certificate.res_right},
        {"res_left", fb.certificate.res_left},
        {"mu2_modulus", fb.certificate.mu2_modulus},
        {"perron_simple", fb.certificate.perron_simple},
        {"pass", fb.certificate.pass},
    };
    doc["sparsity_violations"] = fb.sparsity_violations;
    if (const auto* lap = std::get_if<LaplacianParams>(&fb.params)) {
        doc["alpha"] = lap->alpha;
    } else if (const auto* r1 = std::get_if<RankOneParams>(&fb.params)) {
        doc["beta"] = r1->beta;
        doc["q"] = detail::vector_to_json(r1->q);
    } else if (const auto* sk = std::get_if<SparseKernelParams>(&fb.params)) {
        doc["epsilon"] = sk->epsilon;
        doc["combine"] = sk->combine == KernelCombine::random ? "random" : "max_support";
        doc["seed"] = sk->seed;
        doc["safety"] = sk->safety;
        doc["support_mode"] = sk->mode == SupportMode::diagonal_and_pattern
                                  ? "diagonal_and_pattern"
                                  : "pattern_only";
    }
    return doc;
}

void save_feedback_file(const std::filesystem::path& path, const FeedbackMatrix& fb) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write feedback file: " + path.string());
    }
    out << feedback_json(fb).dump(2) << "\n";
}

FeedbackMatrix load_feedback_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw MalformedInputError("cannot open feedback file: " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedInputError(std::string("feedback JSON parse error: ") + e.what());
    }
    FeedbackMatrix fb;
    fb.method = feedback_method_from_string(doc.at("method").get<std::string>());
    fb.K = detail::matrix_from_json(doc.at("K"));
    fb.n = fb.K.rows();
    if (doc.contains("certificate")) {
        const auto& c = doc["certificate"];
        fb.certificate.res_right = c.value("res_right", 0.0);
        fb.certificate.res_left = c.value("res_left", 0.0);
        fb.certificate.mu2_modulus = c.value("mu2_modulus", 0.0);
        fb.certificate.perron_simple = c.value("perron_simple", false);
        fb.certificate.pass = c.value("pass", false);
    }
    fb.sparsity_violations = doc.value("sparsity_violations", Index{0});
    switch (fb.method) {
        case FeedbackMethod::laplacian:
            fb.params = LaplacianParams{doc.value("alpha", 0.0)};
            break;
        case FeedbackMethod::rank1: {
            RankOneParams p;
            p.beta = doc.value("beta", 0.0);
            if (doc.contains("q")) p.q = detail::vector_from_json(doc["q"]);
            fb.params = std::move(p);
            break;
        }
        case FeedbackMethod::sparse_kernel: {
            SparseKernelParams p;
            p.epsilon = doc.value("epsilon", 0.0);
            p.combine = doc.value("combine", std::string("random")) == "max_support"
                            ? KernelCombine::max_support
                            : KernelCombine::random;
            p.seed = doc.value("seed", std::uint64_t{0});
            p.safety = doc.value("safety", 0.0);
            p.mode = doc.value("support_mode", std::string("diagonal_and_pattern")) ==
                             "pattern_only"
                         ? SupportMode::pattern_only
                         : SupportMode::diagonal_and_pattern;
            fb.params = p;
            break;
        }
    }
    return fb;
}

} // namespace toposhield
