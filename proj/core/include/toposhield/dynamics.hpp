#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "toposhield/spectral.hpp"
#include "toposhield/topology.hpp"

namespace toposhield {

// States x_0 ... x_T of a simulated run (T transitions, T+1 states).
struct Trajectory {
    Index n = 0;
    int T = 0;
    std::vector<Eigen::VectorXd> states;
};

// The observer-visible snapshot matrices: X_a holds columns x_0..x_{T-1},
// X_b holds x_1..x_T, so X_b = W_eff * X_a column-wise.
struct SnapshotPair {
    Eigen::MatrixXd X_a;
    Eigen::MatrixXd X_b;
};

// Iterates x_{t+1} = W_eff x_t for T steps, in order, in double precision.
// The iterates are produced literally (plain matrix-vector products) because
// they are exactly what an observer collects.
Trajectory simulate(const Eigen::MatrixXd& w_eff, const Eigen::VectorXd& x0, int T);

struct ConsensusPoint {
    double value = 0.0;     // w'x0
    Eigen::VectorXd vector; // value * 1
};

// Consensus limit of the nominal dynamics: (w'x0) 1 with w the left Perron
// vector of W.
ConsensusPoint consensus_point(const TopologyMatrix& w, const Eigen::VectorXd& x0);

// Splits a trajectory into the shifted snapshot pair. Requires T >= 1.
SnapshotPair snapshot_split(const Trajectory& traj);

// e(t) = ||x_t - x_star||_2 for t = 0..T.
std::vector<double> state_error_series(const Trajectory& traj, const Eigen::VectorXd& x_star);

// Seeded uniform draw on [0,1]^n, redrawn while it lies numerically in
// span{1} (such states make every estimator trivially unsolvable).
Eigen::VectorXd draw_initial_state(Index n, std::uint64_t seed);

// Trajectory CSV: header "t,x1,...,xn", one row per step, 17 significant
// digits so values round-trip bit-exactly.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& in);

} // namespace toposhield
