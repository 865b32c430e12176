#include "toposhield/topology.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "toposhield/spectral.hpp"

namespace toposhield {

SupportPattern support_pattern(const Eigen::MatrixXd& a, double threshold) {
    if (threshold < 0.0) {
        throw InvalidParameterError("support_pattern: threshold must be >= 0");
    }
    SupportPattern s;
    s.n = a.rows();
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            if (std::abs(a(i, j)) > threshold) {
                s.pairs.insert({i, j});
            }
        }
    }
    return s;
}

TopologyMatrix TopologyMatrix::from_matrix(Eigen::MatrixXd entries) {
    if (entries.rows() != entries.cols()) {
        throw MalformedInputError("topology matrix must be square");
    }
    const Index n = entries.rows();
    if (n < 2) {
        throw MalformedInputError("topology matrix needs at least 2 nodes");
    }
    if (!entries.allFinite()) {
        throw MalformedInputError("topology matrix has non-finite entries");
    }
    if ((entries.array() < 0.0).any()) {
        throw MalformedInputError("topology matrix has negative entries");
    }
    for (Index i = 0; i < n; ++i) {
        const double row_sum = entries.row(i).sum();
        if (std::abs(row_sum - 1.0) > kRowSumTol) {
            std::ostringstream msg;
            msg << "row " << i << " sums to " << row_sum << ", not 1 within " << kRowSumTol;
            throw MalformedInputError(msg.str());
        }
    }
    return TopologyMatrix(std::move(entries));
}

TopologyMatrix TopologyMatrix::load_json(std::istream& in) {
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedInputError(std::string("topology JSON parse error: ") + e.what());
    }
    if (!doc.contains("n") || !doc.contains("rows")) {
        throw MalformedInputError("topology JSON needs fields 'n' and 'rows'");
    }
    const auto n = doc["n"].get<Index>();
    const auto& rows = doc["rows"];
    if (!rows.is_array() || static_cast<Index>(rows.size()) != n) {
        throw MalformedInputError("topology JSON: 'rows' must hold n rows");
    }
    Eigen::MatrixXd m(n, n);
    for (Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != n) {
            throw MalformedInputError("topology JSON: each row must hold n entries");
        }
        for (Index j = 0; j < n; ++j) {
            m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
        }
    }
    return from_matrix(std::move(m));
}

TopologyMatrix TopologyMatrix::load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw MalformedInputError("cannot open topology file: " + path.string());
    }
    return load_json(in);
}

void TopologyMatrix::save_json(std::ostream& out) const {
    nlohmann::json doc;
    doc["n"] = n();
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < n(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index j = 0; j < n(); ++j) {
            row.push_back(entries_(i, j));
        }
        rows.push_back(std::move(row));
    }
    doc["rows"] = std::move(rows);
    out << doc.dump(2) << "\n";
}

void TopologyMatrix::save_json_file(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write topology file: " + path.string());
    }
    save_json(out);
}

TopologyMatrix random_topology(Index n, double density, std::uint64_t seed) {
    if (n < 2) {
        throw InvalidParameterError("random_topology: n must be >= 2");
    }
    if (!(density > 0.0) || density > 1.0) {
        throw InvalidParameterError("random_topology: density must lie in (0, 1]");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const auto positive_weight = [&]() {
        double w = u01(rng);
        while (w == 0.0) {
            w = u01(rng);
        }
        return w;
    };

    constexpr int kMaxDraws = 100;
    for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) {
                if (i == j) {
                    m(i, j) = positive_weight(); // self-loop keeps the draw aperiodic
                } else if (u01(rng) < density) {
                    m(i, j) = positive_weight();
                }
            }
            m.row(i) /= m.row(i).sum();
        }
        if (validate_consensus(m).ok()) {
            return TopologyMatrix::from_matrix(std::move(m));
        }
    }
    std::ostringstream msg;
    msg << "random_topology: no consensus-admissible draw in " << kMaxDraws
        << " attempts (n=" << n << ", density=" << density << "); density likely too low";
    throw GenerationFailureError(msg.str());
}

} // namespace toposhield
