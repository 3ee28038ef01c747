#include "finsler/json_io.hpp"

namespace finsler {

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

std::vector<std::vector<double>> to_std(const Mat& m) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[i].push_back(m(i, j));
  return rows;
}

Vec vec_param(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("expected a numeric array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  try {
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("expected a numeric array");
  }
  return v;
}

Mat mat_param(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError("expected a nested numeric array");
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != j[0].size())
      throw ConfigError("ragged matrix parameter");
    m.row(static_cast<Eigen::Index>(i)) = vec_param(j[i]).transpose();
  }
  return m;
}

}  // namespace finsler
