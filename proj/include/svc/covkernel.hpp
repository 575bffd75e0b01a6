#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "svc/errors.hpp"
#include "svc/rng.hpp"

namespace svc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Jitter increments tried in order when factorizing a covariance matrix.
/// Squared-exponential correlation matrices are notoriously ill-conditioned,
/// so a small diagonal inflation is always applied.
inline const std::vector<double> kCorrelationJitterSchedule{1e-8, 1e-6, 1e-4};

/// Schedule for precision matrices, which are well-conditioned from below;
/// an exact factorization is attempted first.
inline const std::vector<double> kPrecisionJitterSchedule{0.0, 1e-10, 1e-8};

namespace detail {

/// Count of successful SPD factorizations, for cost-model tests.
inline std::atomic<std::uint64_t>& cholesky_count() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

}  // namespace detail

/// Validates an n x 2 coordinate matrix: finite entries, at least one row.
inline void validate_coords(const Matrix& coords, std::string_view label = "coords") {
  if (coords.rows() == 0 || coords.cols() != 2) {
    throw InvalidInputError(std::string(label) + ": expected a non-empty matrix with 2 columns");
  }
  if (!coords.allFinite()) {
    throw InvalidInputError(std::string(label) + ": non-finite coordinate");
  }
}

/// Pairwise squared Euclidean distances between two coordinate sets.
///
/// Entry (i, j) = ||a_i - b_j||^2. Computed once per coordinate-set pair and
/// reused across the whole chain; only the kernel transform depends on phi.
inline Matrix squared_distance_matrix(const Matrix& a, const Matrix& b) {
  validate_coords(a, "first coordinate set");
  validate_coords(b, "second coordinate set");
  Matrix d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double ax = a(i, 0);
    const double ay = a(i, 1);
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      const double dx = ax - b(j, 0);
      const double dy = ay - b(j, 1);
      d(i, j) = dx * dx + dy * dy;
    }
  }
  return d;
}

/// Squared-exponential correlation from precomputed squared distances:
/// entry (i, j) = exp(-d_ij / phi). Zero distance maps to exactly 1.
inline Matrix kernel_matrix(const Matrix& sqdist, double phi) {
  if (!(phi > 0.0)) {
    throw DomainError("kernel_matrix: range parameter must be positive, got " + std::to_string(phi));
  }
  return (-sqdist / phi).array().exp().matrix();
}

/// Lower-triangular Cholesky factor of an SPD matrix, together with the
/// diagonal jitter that was actually applied to make the factorization
/// succeed.
struct CholFactor {
  Matrix lower;
  double jitter = 0.0;

  Eigen::Index dim() const { return lower.rows(); }
};

/// Factorizes m + jitter*I, trying each jitter in the schedule in order and
/// keeping the smallest one that succeeds.
inline CholFactor cholesky_spd(const Matrix& m,
                               const std::vector<double>& jitter_schedule = kCorrelationJitterSchedule,
                               std::string_view label = "covariance") {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError(std::string(label) + ": matrix must be square and non-empty");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    throw InvalidInputError(std::string(label) + ": matrix is not symmetric");
  }
  for (const double jitter : jitter_schedule) {
    Matrix work = m;
    work.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(work);
    if (llt.info() == Eigen::Success) {
      CholFactor f{llt.matrixL(), jitter};
      if (f.lower.diagonal().minCoeff() > 0.0) {
        detail::cholesky_count().fetch_add(1, std::memory_order_relaxed);
        return f;
      }
    }
  }
  throw SingularCovarianceError(std::string(label) +
                                ": Cholesky factorization failed for every jitter in the schedule");
}

/// Solves (L L^T) x = rhs by two triangular solves. No inverse is formed.
template <typename Derived>
typename Derived::PlainObject solve_spd(const CholFactor& f,
                                        const Eigen::MatrixBase<Derived>& rhs) {
  if (rhs.rows() != f.dim()) {
    throw DimensionError("solve_spd: rhs has " + std::to_string(rhs.rows()) +
                         " rows, factor dimension is " + std::to_string(f.dim()));
  }
  typename Derived::PlainObject y = f.lower.triangularView<Eigen::Lower>().solve(rhs.derived());
  return f.lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

/// Draw from MVN(mean, L L^T) given the covariance factor: mean + L z.
inline Vector mvn_sample(const Vector& mean, const CholFactor& cov_factor, Rng& rng) {
  if (mean.size() != cov_factor.dim()) {
    throw DimensionError("mvn_sample: mean length does not match factor dimension");
  }
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z(i) = rng.normal();
  }
  return mean + cov_factor.lower.triangularView<Eigen::Lower>() * z;
}

/// Draw from MVN(mean, (L L^T)^{-1}) given the *precision* factor:
/// mean + L^{-T} z has the required covariance.
inline Vector mvn_sample_precision(const Vector& mean, const CholFactor& prec_factor, Rng& rng) {
  if (mean.size() != prec_factor.dim()) {
    throw DimensionError("mvn_sample_precision: mean length does not match factor dimension");
  }
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z(i) = rng.normal();
  }
  return mean + prec_factor.lower.transpose().triangularView<Eigen::Upper>().solve(z);
}

/// Log density of MVN(0, L L^T) at w:
///   -(n/2) log(2 pi) - sum_i log L_ii - 0.5 ||L^{-1} w||^2.
inline double mvn_logdensity_zero_mean(const Vector& w, const CholFactor& cov_factor) {
  if (w.size() != cov_factor.dim()) {
    throw DimensionError("mvn_logdensity_zero_mean: vector length does not match factor dimension");
  }
  constexpr double kLog2Pi = 1.8378770664093454836;
  const Vector half = cov_factor.lower.triangularView<Eigen::Lower>().solve(w);
  const double logdet_half = cov_factor.lower.diagonal().array().log().sum();
  return -0.5 * static_cast<double>(w.size()) * kLog2Pi - logdet_half - 0.5 * half.squaredNorm();
}

}  // namespace svc
