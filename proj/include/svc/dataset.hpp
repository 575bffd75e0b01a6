#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "svc/covkernel.hpp"
#include "svc/errors.hpp"

namespace svc {

/// Observed data at n locations. Missing response or covariate entries are
/// represented as NaN; coordinates must be complete.
struct Dataset {
  Vector y;       // n, NaN marks a missing response
  Matrix x;       // n x p design matrix, NaN marks a missing covariate
  Matrix coords;  // n x 2, finite
  std::vector<std::string> covariate_names;
  std::string response_name = "Y";

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return x.cols(); }

  void validate() const {
    if (y.size() == 0) {
      throw InvalidInputError("Dataset: empty response vector");
    }
    if (x.rows() != y.size() || coords.rows() != y.size()) {
      throw DimensionError("Dataset: Y, X and coords must have the same number of rows");
    }
    if (x.cols() < 1) {
      throw InvalidInputError("Dataset: at least one covariate column is required");
    }
    validate_coords(coords, "Dataset coords");
  }
};

inline bool is_missing(double v) { return std::isnan(v); }

}  // namespace svc
