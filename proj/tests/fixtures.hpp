#pragma once

#include <Eigen/Core>

#include "toposhield/topology.hpp"

namespace fixtures {

// The bundled 6-node reference topology (data/reference_w6.json).
inline toposhield::TopologyMatrix reference_w6() {
    return toposhield::TopologyMatrix::load_json_file(
        std::string(TOPOSHIELD_DATA_DIR) + "/reference_w6.json");
}

// Row-stochastic companion matrix with characteristic polynomial
// (x - 1)(x + 1/4)^3: eigenvalue 1 is simple, -1/4 sits in a 3x3 Jordan
// block, so the matrix satisfies the consensus conditions but has no
// eigenvector basis. Exercises the non-diagonalizable paths.
inline toposhield::TopologyMatrix defective_w4() {
    Eigen::MatrixXd m(4, 4);
    m << 0, 1, 0, 0,
         0, 0, 1, 0,
         0, 0, 0, 1,
         1.0 / 64, 11.0 / 64, 9.0 / 16, 1.0 / 4;
    return toposhield::TopologyMatrix::from_matrix(m);
}

// Uniform-average projector (1/n) 1 1': spectrum {1, 0, ..., 0}.
inline toposhield::TopologyMatrix projector(toposhield::Index n) {
    return toposhield::TopologyMatrix::from_matrix(
        Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n)));
}

// Directed cycle where every node but the first also keeps a self-loop;
// admissible, and its strict support pattern has 2n - 1 entries.
inline toposhield::TopologyMatrix cycle_with_partial_self_loops(toposhield::Index n) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    m(0, 1 % n) = 1.0;
    for (toposhield::Index i = 1; i < n; ++i) {
        m(i, i) = 0.4;
        m(i, (i + 1) % n) = 0.6;
    }
    return toposhield::TopologyMatrix::from_matrix(m);
}

} // namespace fixtures
