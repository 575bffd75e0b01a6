#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <string>
#include <vector>

#include "svc/dataset.hpp"
#include "svc/errors.hpp"

namespace svc {

/// The m-location subset used by the subset Gaussian process. Knot
/// coordinates are a subset of the full coordinate set. For sampling, every
/// field must be complete; see filter_complete.
struct KnotSet {
  Vector y;       // m
  Matrix x;       // m x p
  Matrix coords;  // m x 2

  Eigen::Index size() const { return coords.rows(); }
  Eigen::Index p() const { return x.cols(); }

  bool complete() const {
    return y.allFinite() && x.allFinite() && coords.allFinite();
  }
};

namespace detail {

inline std::vector<double> thinned_axis_values(const Matrix& coords, int axis, int k) {
  std::vector<double> values(coords.rows());
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    values[static_cast<std::size_t>(i)] = coords(i, axis);
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (static_cast<std::size_t>(k) > values.size()) {
    throw EmptyKnotError("simpleknots: k = " + std::to_string(k) +
                         " exceeds the " + std::to_string(values.size()) +
                         " distinct values on axis " + std::to_string(axis));
  }
  std::vector<double> kept;
  for (std::size_t i = 0; i < values.size(); i += static_cast<std::size_t>(k)) {
    kept.push_back(values[i]);
  }
  return kept;
}

inline bool contains(const std::vector<double>& sorted_values, double v) {
  return std::binary_search(sorted_values.begin(), sorted_values.end(), v);
}

}  // namespace detail

/// Selects knots by thinning the distinct sorted values of each coordinate
/// axis to every k-th value (starting at the first), then keeping the data
/// locations whose x-value and y-value both survive. Rows are copied with
/// their response and covariate values; duplicate coordinate pairs collapse
/// to the first occurrence, since the knot covariance requires distinct
/// locations.
inline KnotSet simpleknots(const Dataset& data, int k) {
  data.validate();
  if (k < 1) {
    throw DomainError("simpleknots: k must be a positive integer");
  }
  const std::vector<double> keep_x = detail::thinned_axis_values(data.coords, 0, k);
  const std::vector<double> keep_y = detail::thinned_axis_values(data.coords, 1, k);

  std::vector<Eigen::Index> rows;
  std::vector<std::pair<double, double>> seen;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double cx = data.coords(i, 0);
    const double cy = data.coords(i, 1);
    if (!detail::contains(keep_x, cx) || !detail::contains(keep_y, cy)) {
      continue;
    }
    const std::pair<double, double> key{cx, cy};
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      continue;
    }
    seen.push_back(key);
    rows.push_back(i);
  }
  if (rows.empty()) {
    throw EmptyKnotError("simpleknots: no locations survived thinning");
  }

  KnotSet knots;
  const auto m = static_cast<Eigen::Index>(rows.size());
  knots.y.resize(m);
  knots.x.resize(m, data.p());
  knots.coords.resize(m, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index src = rows[static_cast<std::size_t>(i)];
    knots.y(i) = data.y(src);
    knots.x.row(i) = data.x.row(src);
    knots.coords.row(i) = data.coords.row(src);
  }
  return knots;
}

struct FilterResult {
  KnotSet knots;
  Eigen::Index removed = 0;
};

/// Drops candidate knots with any missing response, covariate or coordinate
/// entry and reports how many were removed.
inline FilterResult filter_complete(const KnotSet& candidate) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < candidate.size(); ++i) {
    const bool row_ok = !is_missing(candidate.y(i)) && candidate.x.row(i).allFinite() &&
                        candidate.coords.row(i).allFinite();
    if (row_ok) {
      keep.push_back(i);
    }
  }
  if (keep.empty()) {
    throw EmptyKnotError("filter_complete: every candidate knot had missing data");
  }
  FilterResult result;
  result.removed = candidate.size() - static_cast<Eigen::Index>(keep.size());
  const auto m = static_cast<Eigen::Index>(keep.size());
  result.knots.y.resize(m);
  result.knots.x.resize(m, candidate.p());
  result.knots.coords.resize(m, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index src = keep[static_cast<std::size_t>(i)];
    result.knots.y(i) = candidate.y(src);
    result.knots.x.row(i) = candidate.x.row(src);
    result.knots.coords.row(i) = candidate.coords.row(src);
  }
  return result;
}

}  // namespace svc
