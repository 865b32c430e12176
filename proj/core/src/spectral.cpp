#include "toposhield/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace toposhield {

namespace {

// Eigenvalues sorted by descending modulus; ties broken by descending real,
// then imaginary, part so the order is deterministic.
Eigen::VectorXcd sorted_eigenvalues(const Eigen::VectorXcd& raw) {
    std::vector<Index> order(static_cast<std::size_t>(raw.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        const double ma = std::abs(raw(a));
        const double mb = std::abs(raw(b));
        if (ma != mb) return ma > mb;
        if (raw(a).real() != raw(b).real()) return raw(a).real() > raw(b).real();
        return raw(a).imag() > raw(b).imag();
    });
    Eigen::VectorXcd out(raw.size());
    for (Index i = 0; i < raw.size(); ++i) {
        out(i) = raw(order[static_cast<std::size_t>(i)]);
    }
    return out;
}

bool rows_stochastic(const Eigen::MatrixXd& w) {
    if ((w.array() < 0.0).any()) return false;
    for (Index i = 0; i < w.rows(); ++i) {
        if (std::abs(w.row(i).sum() - 1.0) > TopologyMatrix::kRowSumTol) return false;
    }
    return true;
}

} // namespace

ConsensusValidation validate_consensus(const Eigen::MatrixXd& w, double tol) {
    if (w.rows() != w.cols() || w.rows() < 1) {
        throw MalformedInputError("validate_consensus: matrix must be square");
    }
    if (!w.allFinite()) {
        throw MalformedInputError("validate_consensus: matrix has non-finite entries");
    }

    ConsensusValidation report;
    report.row_stochastic = rows_stochastic(w);

    Eigen::EigenSolver<Eigen::MatrixXd> es(w, /*computeEigenvectors=*/false);
    const Eigen::VectorXcd eigs = sorted_eigenvalues(es.eigenvalues());

    Index near_one = 0;
    for (Index i = 0; i < eigs.size(); ++i) {
        if (std::abs(eigs(i) - std::complex<double>(1.0, 0.0)) <= tol) ++near_one;
    }
    report.perron_simple = (near_one == 1);

    // r_max over everything but the leading (largest-modulus) eigenvalue.
    double r_max = 0.0;
    for (Index i = 1; i < eigs.size(); ++i) {
        r_max = std::max(r_max, std::abs(eigs(i)));
    }
    report.r_max = r_max;
    report.spectrum_inside = report.perron_simple && r_max < 1.0;
    return report;
}

ConsensusValidation validate_consensus(const TopologyMatrix& w, double tol) {
    return validate_consensus(w.entries(), tol);
}

SpectralProfile spectral_profile(const TopologyMatrix& w, double tol) {
    const ConsensusValidation report = validate_consensus(w, tol);
    if (!report.ok()) {
        std::ostringstream msg;
        msg << "spectral_profile: consensus conditions violated (row_stochastic="
            << report.row_stochastic << ", perron_simple=" << report.perron_simple
            << ", spectrum_inside=" << report.spectrum_inside << ", r_max=" << report.r_max
            << ")";
        throw ConsensusViolationError(msg.str(), report);
    }

    const Index n = w.n();
    SpectralProfile profile;

    Eigen::EigenSolver<Eigen::MatrixXd> es(w.entries());
    profile.eigenvalues = sorted_eigenvalues(es.eigenvalues());
    profile.r_max = report.r_max;

    // Right-eigenvector basis conditioning. Eigen returns unit columns, so
    // kappa is the usual eigenvector condition number; below the rcond floor
    // the basis is unusable and the matrix is flagged non-diagonalizable.
    {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
        const double s_max = svd.singularValues()(0);
        const double s_min = svd.singularValues()(n - 1);
        if (s_min <= kDiagonalizableRcond * s_max) {
            profile.diagonalizable = false;
        } else {
            profile.diagonalizable = true;
            profile.kappa_V = s_max / s_min;
        }
    }

    // Left eigenvector at 1 = right eigenvector of the transpose. The Perron
    // root is simple and real, so the eigenvector is real up to a complex
    // scale; dividing by its largest component strips that scale.
    {
        Eigen::EigenSolver<Eigen::MatrixXd> est(w.entries().transpose());
        Index best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < n; ++i) {
            const double d = std::abs(est.eigenvalues()(i) - std::complex<double>(1.0, 0.0));
            if (d < best_dist) {
                best_dist = d;
                best = i;
            }
        }
        Eigen::VectorXcd v = est.eigenvectors().col(best);
        Index pivot = 0;
        v.cwiseAbs().maxCoeff(&pivot);
        v /= v(pivot);
        Eigen::VectorXd w_left = v.real();
        w_left /= w_left.sum(); // w'1 = 1
        profile.left_perron = std::move(w_left);
    }

    return profile;
}

} // namespace toposhield
