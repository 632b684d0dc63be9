#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace rii::archive {

// Self-describing container of named f64 arrays: 8-byte magic, u64 header
// length, JSON header (array directory + free-form metadata), little-endian
// column-major payload.
struct NamedArray {
  std::string name;
  Eigen::MatrixXd values;
};

void save(const std::string& path, const std::vector<NamedArray>& arrays,
          const nlohmann::json& meta);

struct Archive {
  std::vector<NamedArray> arrays;
  nlohmann::json meta;

  const Eigen::MatrixXd& at(const std::string& name) const;
};

Archive load(const std::string& path);

}  // namespace rii::archive
