#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <utility>

#include <Eigen/Core>

#include "toposhield/errors.hpp"

namespace toposhield {

using Index = Eigen::Index;
using IndexPair = std::pair<Index, Index>;

// Set of matrix positions holding entries above a magnitude threshold.
struct SupportPattern {
    Index n = 0;
    std::set<IndexPair> pairs;

    // Cardinality z of the pattern.
    Index size() const { return static_cast<Index>(pairs.size()); }
    bool contains(Index i, Index j) const { return pairs.count({i, j}) > 0; }
};

// support_pattern(A, t) = { (i,j) : |A(i,j)| > t }, strict comparison.
SupportPattern support_pattern(const Eigen::MatrixXd& a, double threshold);

// Row-stochastic interaction-weight matrix of a consensus network.
//
// Construction enforces the structural invariants (square, n >= 2, finite,
// nonnegative, rows summing to 1 within kRowSumTol). Spectral conditions
// (simple Perron root, all other eigenvalues inside the unit circle) are a
// separate check, see spectral.hpp: matrices such as the identity are valid
// TopologyMatrix values but do not admit consensus.
class TopologyMatrix {
public:
    static constexpr double kRowSumTol = 1e-10;

    // Validates and wraps a raw matrix. Throws MalformedInputError.
    static TopologyMatrix from_matrix(Eigen::MatrixXd entries);

    // JSON format: {"n": <int>, "rows": [[w11,...,w1n], ..., [wn1,...,wnn]]}
    static TopologyMatrix load_json(std::istream& in);
    static TopologyMatrix load_json_file(const std::filesystem::path& path);
    void save_json(std::ostream& out) const;
    void save_json_file(const std::filesystem::path& path) const;

    Index n() const { return entries_.rows(); }
    const Eigen::MatrixXd& entries() const { return entries_; }

    // Structural support (threshold 0 by default).
    SupportPattern support(double threshold = 0.0) const {
        return support_pattern(entries_, threshold);
    }

private:
    explicit TopologyMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {}

    Eigen::MatrixXd entries_;
};

// Draws a random consensus-admissible topology. Off-diagonal support is
// included per entry with probability `density`; the diagonal is always in
// support, which keeps every draw aperiodic. Positive weights are sampled
// uniformly and rows normalized to sum 1. Draws failing the spectral
// conditions are rejected and redrawn; after 100 consecutive failures a
// GenerationFailureError is thrown. Deterministic in (n, density, seed).
TopologyMatrix random_topology(Index n, double density, std::uint64_t seed);

} // namespace toposhield
