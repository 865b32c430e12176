#include "toposhield/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace toposhield {

double inference_deviation(const Eigen::MatrixXd& w_hat, const Eigen::MatrixXd& w) {
    if (w_hat.rows() != w.rows() || w_hat.cols() != w.cols()) {
        throw MalformedInputError("inference_deviation: shapes disagree");
    }
    return Eigen::JacobiSVD<Eigen::MatrixXd>(w_hat - w).singularValues()(0);
}

double inference_deviation_frobenius(const Eigen::MatrixXd& w_hat, const Eigen::MatrixXd& w) {
    if (w_hat.rows() != w.rows() || w_hat.cols() != w.cols()) {
        throw MalformedInputError("inference_deviation_frobenius: shapes disagree");
    }
    return (w_hat - w).norm();
}

double jaccard_support(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps0) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw MalformedInputError("jaccard_support: shapes disagree");
    }
    const SupportPattern sa = support_pattern(a, eps0);
    const SupportPattern sb = support_pattern(b, eps0);
    std::size_t intersection = 0;
    for (const auto& p : sa.pairs) {
        if (sb.pairs.count(p) > 0) ++intersection;
    }
    const std::size_t unions = sa.pairs.size() + sb.pairs.size() - intersection;
    if (unions == 0) return 1.0;
    return static_cast<double>(intersection) / static_cast<double>(unions);
}

BauerFikeAudit bauer_fike_audit(const TopologyMatrix& w, const Eigen::MatrixXd& k) {
    if (k.rows() != w.n() || k.cols() != w.n()) {
        throw MalformedInputError("bauer_fike_audit: K must match the topology size");
    }
    const SpectralProfile profile = spectral_profile(w);

    BauerFikeAudit audit;
    if (!profile.diagonalizable) {
        // The bound needs the eigenvector basis; without one the audit is
        // meaningless rather than failed.
        audit.skipped = true;
        return audit;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> es(w.entries() + k, /*computeEigenvectors=*/false);
    const Eigen::VectorXcd mu = es.eigenvalues();
    double lhs_max = 0.0;
    for (Index i = 0; i < mu.size(); ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < profile.eigenvalues.size(); ++j) {
            nearest = std::min(nearest, std::abs(mu(i) - profile.eigenvalues(j)));
        }
        lhs_max = std::max(lhs_max, nearest);
    }
    audit.lhs_max = lhs_max;
    audit.rhs = *profile.kappa_V * Eigen::JacobiSVD<Eigen::MatrixXd>(k).singularValues()(0);
    audit.holds = lhs_max <= *audit.rhs * (1.0 + 1e-8);
    return audit;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRecord> records) {
    out << "alpha,E2_spectral,E2_frobenius,jaccard,mu2_modulus,e1_final,unique\n";
    char buf[192];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                      r.alpha_or_eps, r.E2_spectral, r.E2_frobenius, r.jaccard,
                      r.mu2_modulus, r.e1_final, r.unique ? 1 : 0);
        out << buf;
    }
}

} // namespace toposhield
