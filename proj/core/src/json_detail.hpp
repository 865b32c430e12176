#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "toposhield/errors.hpp"

namespace toposhield::detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
    if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
        throw MalformedInputError("expected a JSON array of rows");
    }
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = static_cast<Eigen::Index>(rows[0].size());
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != c) {
            throw MalformedInputError("ragged JSON matrix");
        }
        for (Eigen::Index j = 0; j < c; ++j) {
            m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
        }
    }
    return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
    if (!arr.is_array()) {
        throw MalformedInputError("expected a JSON array");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) = arr[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

} // namespace toposhield::detail
