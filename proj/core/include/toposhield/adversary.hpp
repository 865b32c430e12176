#pragma once

#include <iosfwd>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "toposhield/dynamics.hpp"

namespace toposhield {

// The external observer. Given T >= n consecutive states it forms the
// snapshot matrices and solves X_b = W X_a in least squares:
//
//     W_hat = X_b pinv(X_a)
//
// The estimate is unique exactly when rank(X_a) = n. Because
// X_a = [x0, W_eff x0, ..., W_eff^{T-1} x0], that rank equals the dimension
// of the Krylov space of (W_eff, x0), which is what krylov_dimension
// measures directly: the observer can be defeated by steering x0 into a
// proper invariant subspace, and only then.

inline constexpr double kDefaultRankTol = 1e-9;

struct InferenceResult {
    Eigen::MatrixXd W_hat;           // unique solution, or min-Frobenius-norm solution
    Index rank_Xa = 0;               // retained singular values of X_a
    bool unique = false;             // rank_Xa == n
    Eigen::VectorXd singular_values; // of X_a, descending
    double frobenius_residual = 0.0; // ||W_hat X_a - X_b||_F
};

// Least-squares topology estimate from a snapshot pair. Singular values of
// X_a below rank_tol * sigma_max are truncated; the relative rule keeps rank
// decisions scale-free. Throws InsufficientDataError when T < n.
InferenceResult ols_estimate(const SnapshotPair& snap, double rank_tol = kDefaultRankTol);

// Numerical rank of [x0, W_eff x0, ..., W_eff^{n-1} x0]. Columns are
// norm-scaled before the rank test: powers of a contraction decay
// geometrically and would otherwise masquerade as rank deficiency.
// Throws DegenerateInputError when x0 = 0.
Index krylov_dimension(const Eigen::MatrixXd& w_eff, const Eigen::VectorXd& x0,
                       double rank_tol = kDefaultRankTol);

// True iff the observer's estimate from (w_eff, x0) data has a unique
// solution, i.e. krylov_dimension = n.
bool solvability_check(const Eigen::MatrixXd& w_eff, const Eigen::VectorXd& x0,
                       double rank_tol = kDefaultRankTol);

// {"rank_Xa": k, "unique": b, "frobenius_residual": r, "W_hat": [[...],...]}
nlohmann::json inference_report_json(const InferenceResult& result);

} // namespace toposhield
