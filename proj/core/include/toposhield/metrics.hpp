#pragma once

#include <iosfwd>
#include <optional>
#include <span>

#include <Eigen/Core>

#include "toposhield/spectral.hpp"
#include "toposhield/topology.hpp"

namespace toposhield {

// Spectral-norm deviation ||W_hat - W||_2 (largest singular value).
double inference_deviation(const Eigen::MatrixXd& w_hat, const Eigen::MatrixXd& w);

// Frobenius-norm deviation, reported alongside the spectral one in sweeps.
double inference_deviation_frobenius(const Eigen::MatrixXd& w_hat, const Eigen::MatrixXd& w);

// Jaccard index of the thresholded supports: |S_A cap S_B| / |S_A cup S_B|
// with S_X = { (i,j) : |X_ij| > eps0 }. Returns 1 when both are empty.
double jaccard_support(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps0);

// Eigenvalue-perturbation audit: every eigenvalue mu of W+K must lie within
// kappa_V ||K||_2 of some eigenvalue of W. Skipped (holds unset) when W is
// flagged numerically non-diagonalizable, since the bound needs the
// eigenvector basis.
struct BauerFikeAudit {
    double lhs_max = 0.0;            // max over mu of min over lambda of |mu - lambda|
    std::optional<double> rhs;       // kappa_V * ||K||_2
    bool holds = false;
    bool skipped = false;
};

BauerFikeAudit bauer_fike_audit(const TopologyMatrix& w, const Eigen::MatrixXd& k);

// One row of a sweep result.
struct SweepRecord {
    double alpha_or_eps = 0.0;
    double E2_spectral = 0.0;
    double E2_frobenius = 0.0;
    double jaccard = 0.0;
    double mu2_modulus = 0.0;
    double e1_final = 0.0;
    bool unique = false;
};

// CSV with header alpha,E2_spectral,E2_frobenius,jaccard,mu2_modulus,e1_final,unique
void write_sweep_csv(std::ostream& out, std::span<const SweepRecord> records);

} // namespace toposhield
