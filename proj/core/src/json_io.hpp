#pragma once

#include <nlohmann/json.hpp>
#include <Eigen/Core>

#include "spinlets/error.hpp"
#include "spinlets/model.hpp"

namespace spinlets::detail {

inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
    return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json state_json(const FitState& state);
FitState state_from(const nlohmann::json& j);

template <class F>
auto parse_json_section(const char* what, F&& body) {
    try {
        return body();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
}

}  // namespace spinlets::detail
