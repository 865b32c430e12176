#include "toposhield/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace toposhield {

namespace {

// 17 significant digits round-trip a double exactly.
std::string format_full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

Trajectory simulate(const Eigen::MatrixXd& w_eff, const Eigen::VectorXd& x0, int T) {
    if (w_eff.rows() != w_eff.cols()) {
        throw MalformedInputError("simulate: W_eff must be square");
    }
    if (w_eff.rows() != x0.size()) {
        throw MalformedInputError("simulate: x0 length does not match W_eff");
    }
    if (T < 1) {
        throw MalformedInputError("simulate: T must be >= 1");
    }
    Trajectory traj;
    traj.n = x0.size();
    traj.T = T;
    traj.states.reserve(static_cast<std::size_t>(T) + 1);
    traj.states.push_back(x0);
    for (int t = 0; t < T; ++t) {
        traj.states.push_back(w_eff * traj.states.back());
    }
    return traj;
}

ConsensusPoint consensus_point(const TopologyMatrix& w, const Eigen::VectorXd& x0) {
    if (x0.size() != w.n()) {
        throw MalformedInputError("consensus_point: x0 length does not match W");
    }
    const SpectralProfile profile = spectral_profile(w);
    ConsensusPoint point;
    point.value = profile.left_perron.dot(x0);
    point.vector = Eigen::VectorXd::Constant(w.n(), point.value);
    return point;
}

SnapshotPair snapshot_split(const Trajectory& traj) {
    if (traj.T < 1 || traj.states.size() != static_cast<std::size_t>(traj.T) + 1) {
        throw MalformedInputError("snapshot_split: trajectory must hold T+1 states, T >= 1");
    }
    SnapshotPair snap;
    snap.X_a.resize(traj.n, traj.T);
    snap.X_b.resize(traj.n, traj.T);
    for (int t = 0; t < traj.T; ++t) {
        snap.X_a.col(t) = traj.states[static_cast<std::size_t>(t)];
        snap.X_b.col(t) = traj.states[static_cast<std::size_t>(t) + 1];
    }
    return snap;
}

std::vector<double> state_error_series(const Trajectory& traj, const Eigen::VectorXd& x_star) {
    if (x_star.size() != traj.n) {
        throw MalformedInputError("state_error_series: x_star length does not match trajectory");
    }
    std::vector<double> errors;
    errors.reserve(traj.states.size());
    for (const auto& x : traj.states) {
        errors.push_back((x - x_star).norm());
    }
    return errors;
}

Eigen::VectorXd draw_initial_state(Index n, std::uint64_t seed) {
    if (n < 1) {
        throw InvalidParameterError("draw_initial_state: n must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Eigen::VectorXd x0(n);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        for (Index i = 0; i < n; ++i) {
            x0(i) = u01(rng);
        }
        const double mean = x0.mean();
        if ((x0.array() - mean).matrix().norm() >= 1e-6) {
            return x0;
        }
    }
    throw GenerationFailureError("draw_initial_state: cannot leave span{1}");
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "t";
    for (Index i = 1; i <= traj.n; ++i) {
        out << ",x" << i;
    }
    out << "\n";
    for (std::size_t t = 0; t < traj.states.size(); ++t) {
        out << t;
        for (Index i = 0; i < traj.n; ++i) {
            out << "," << format_full(traj.states[t](i));
        }
        out << "\n";
    }
}

Trajectory read_trajectory_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw MalformedInputError("trajectory CSV: empty stream");
    }
    Index n = 0;
    for (char c : line) {
        if (c == ',') ++n;
    }
    if (n < 1) {
        throw MalformedInputError("trajectory CSV: header must be t,x1,...,xn");
    }
    Trajectory traj;
    traj.n = n;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ',')) {
            throw MalformedInputError("trajectory CSV: bad row");
        }
        Eigen::VectorXd x(n);
        for (Index i = 0; i < n; ++i) {
            if (!std::getline(row, cell, ',')) {
                throw MalformedInputError("trajectory CSV: row with too few columns");
            }
            x(i) = std::stod(cell);
        }
        traj.states.push_back(std::move(x));
    }
    if (traj.states.size() < 2) {
        throw MalformedInputError("trajectory CSV: needs at least 2 states");
    }
    traj.T = static_cast<int>(traj.states.size()) - 1;
    return traj;
}

} // namespace toposhield
