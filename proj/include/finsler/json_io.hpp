#pragma once

#include <nlohmann/json.hpp>
#include <vector>

#include "finsler/numcore.hpp"

namespace finsler {

std::vector<double> to_std(const Vec& v);
std::vector<std::vector<double>> to_std(const Mat& m);

/// Throw ConfigError on shape or type mismatch.
Vec vec_param(const nlohmann::json& j);
Mat mat_param(const nlohmann::json& j);

}  // namespace finsler
