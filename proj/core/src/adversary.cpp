#include "toposhield/adversary.hpp"

#include <sstream>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

namespace toposhield {

InferenceResult ols_estimate(const SnapshotPair& snap, double rank_tol) {
    const Index n = snap.X_a.rows();
    const Index T = snap.X_a.cols();
    if (snap.X_b.rows() != n || snap.X_b.cols() != T) {
        throw MalformedInputError("ols_estimate: snapshot matrices disagree in shape");
    }
    if (T < n) {
        std::ostringstream msg;
        msg << "ols_estimate: observer needs T >= n states (T=" << T << ", n=" << n << ")";
        throw InsufficientDataError(msg.str());
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(snap.X_a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    const double cutoff = rank_tol * sigma(0);

    Index rank = 0;
    for (Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff) ++rank;
    }

    // W_hat = X_b V S^+ U': the unique solution at full rank, the
    // minimum-Frobenius-norm one otherwise (what a real observer computes).
    Eigen::VectorXd inv_sigma = Eigen::VectorXd::Zero(sigma.size());
    for (Index i = 0; i < rank; ++i) {
        inv_sigma(i) = 1.0 / sigma(i);
    }
    Eigen::MatrixXd pinv_Xa =
        svd.matrixV() * inv_sigma.asDiagonal() * svd.matrixU().transpose();

    InferenceResult result;
    result.W_hat = snap.X_b * pinv_Xa;
    result.rank_Xa = rank;
    result.unique = (rank == n);
    result.singular_values = sigma;
    result.frobenius_residual = (result.W_hat * snap.X_a - snap.X_b).norm();
    return result;
}

Index krylov_dimension(const Eigen::MatrixXd& w_eff, const Eigen::VectorXd& x0,
                       double rank_tol) {
    if (w_eff.rows() != w_eff.cols() || w_eff.rows() != x0.size()) {
        throw MalformedInputError("krylov_dimension: dimension mismatch");
    }
    if (x0.norm() == 0.0) {
        throw DegenerateInputError("krylov_dimension: x0 must be nonzero");
    }
    const Index n = x0.size();
    Eigen::MatrixXd krylov(n, n);
    Eigen::VectorXd v = x0;
    for (Index k = 0; k < n; ++k) {
        const double norm = v.norm();
        krylov.col(k) = (norm > 0.0) ? Eigen::VectorXd(v / norm) : v;
        v = w_eff * v;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(krylov);
    const Eigen::VectorXd& sigma = svd.singularValues();
    const double cutoff = rank_tol * sigma(0);
    Index rank = 0;
    for (Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff) ++rank;
    }
    return rank;
}

bool solvability_check(const Eigen::MatrixXd& w_eff, const Eigen::VectorXd& x0,
                       double rank_tol) {
    return krylov_dimension(w_eff, x0, rank_tol) == x0.size();
}

nlohmann::json inference_report_json(const InferenceResult& result) {
    nlohmann::json doc;
    doc["rank_Xa"] = result.rank_Xa;
    doc["unique"] = result.unique;
    doc["frobenius_residual"] = result.frobenius_residual;
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < result.W_hat.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index j = 0; j < result.W_hat.cols(); ++j) {
            row.push_back(result.W_hat(i, j));
        }
        rows.push_back(std::move(row));
    }
    doc["W_hat"] = std::move(rows);
    return doc;
}

} // namespace toposhield
