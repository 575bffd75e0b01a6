#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "svc/errors.hpp"
#include "svc/rng.hpp"

namespace svc {

/// A scalar parameter constrained to an open interval (lower, upper).
struct BoundedParam {
  double value = 0.0;
  double lower = 0.0;
  double upper = 1.0;

  void validate() const {
    if (!(lower < upper)) {
      throw DomainError("BoundedParam: lower bound " + std::to_string(lower) +
                        " must be below upper bound " + std::to_string(upper));
    }
    if (!(lower < value) || !(value < upper)) {
      throw DomainError("BoundedParam: value " + std::to_string(value) +
                        " is not strictly inside (" + std::to_string(lower) + ", " +
                        std::to_string(upper) + ")");
    }
  }
};

/// State of the scalar robust adaptive Metropolis recursion: the proposal
/// standard deviation on the transformed axis, the adaptation step counter,
/// the target acceptance rate and the step-size decay exponent.
struct RamState {
  double proposal_sd = 1.0;
  std::int64_t iteration = 0;
  double target_accept = 0.234;
  double decay_exponent = 2.0 / 3.0;
};

inline constexpr double kRamSdFloor = 1e-6;
inline constexpr double kRamSdCeiling = 1e6;

/// Logit-style map from (lower, upper) onto the real line:
///   f(v) = -log((u - l) / (v - l) - 1) = log((v - l) / (u - v)),
/// strictly increasing in v.
inline double to_unbounded(const BoundedParam& p) {
  p.validate();
  return std::log((p.value - p.lower) / (p.upper - p.value));
}

/// Inverse of to_unbounded: v = l + (u - l) / (1 + exp(-z)). The result is
/// nudged inside the open interval when exp saturates at large |z|.
inline BoundedParam from_unbounded(double z, double lower, double upper) {
  if (!(lower < upper)) {
    throw DomainError("from_unbounded: lower bound must be below upper bound");
  }
  if (!std::isfinite(z)) {
    throw DomainError("from_unbounded: transformed value must be finite");
  }
  double value = lower + (upper - lower) / (1.0 + std::exp(-z));
  if (value <= lower) {
    value = std::nextafter(lower, upper);
  } else if (value >= upper) {
    value = std::nextafter(upper, lower);
  }
  return BoundedParam{value, lower, upper};
}

struct RamProposal {
  BoundedParam param;
  double noise = 0.0;  // the U draw on the transformed axis
};

/// Random-walk proposal on the transformed axis. The result is strictly
/// inside (lower, upper) by construction, so no boundary rejection is needed.
inline RamProposal propose(const BoundedParam& p, const RamState& s, Rng& rng) {
  const double noise = rng.normal(0.0, s.proposal_sd);
  return RamProposal{from_unbounded(to_unbounded(p) + noise, p.lower, p.upper), noise};
}

/// Log ratio of the transform derivative at the proposal vs the current
/// value. Required in the acceptance ratio for detailed balance, because
/// the walk is performed on the transformed axis:
///   log[(v' - l)(u - v')] - log[(v - l)(u - v)].
inline double log_jacobian(const BoundedParam& current, const BoundedParam& proposal) {
  current.validate();
  proposal.validate();
  return std::log((proposal.value - proposal.lower) * (proposal.upper - proposal.value)) -
         std::log((current.value - current.lower) * (current.upper - current.value));
}

/// One step of the scalar RAM recursion:
///   sd^2 <- sd^2 * (1 + eta_t * (accept_prob - target)),  eta_t = t^{-gamma},
/// with sd clamped to [1e-6, 1e6]. Uses the acceptance probability rather
/// than the binary indicator, which lowers the variance of the adaptation.
inline RamState adapt(const RamState& s, double accept_prob) {
  if (!(accept_prob >= 0.0 && accept_prob <= 1.0)) {
    throw DomainError("adapt: acceptance probability must lie in [0, 1]");
  }
  RamState next = s;
  next.iteration = s.iteration + 1;
  const double eta = std::pow(static_cast<double>(next.iteration), -s.decay_exponent);
  const double sd_sq = s.proposal_sd * s.proposal_sd * (1.0 + eta * (accept_prob - s.target_accept));
  next.proposal_sd = std::clamp(std::sqrt(sd_sq), kRamSdFloor, kRamSdCeiling);
  return next;
}

}  // namespace svc
