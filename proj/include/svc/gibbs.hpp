#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "svc/covkernel.hpp"
#include "svc/dataset.hpp"
#include "svc/errors.hpp"
#include "svc/knots.hpp"
#include "svc/ram.hpp"
#include "svc/rng.hpp"

namespace svc {

/// Inverse-gamma prior with density proportional to x^{-shape-1} exp(-scale/x).
struct InverseGammaPrior {
  double shape = 0.001;
  double scale = 0.001;
};

/// Priors for every sampled block: per-coefficient inverse-gamma priors for
/// the spatial variances, an inverse-gamma prior for the nugget, and uniform
/// bounds for each spatial range parameter.
struct PriorSpec {
  std::vector<InverseGammaPrior> sigmasq;
  InverseGammaPrior tausq{0.001, 0.001};
  std::vector<std::pair<double, double>> phi_bounds;

  static PriorSpec defaults(Eigen::Index p, double phi_lower, double phi_upper) {
    PriorSpec spec;
    spec.sigmasq.assign(static_cast<std::size_t>(p), InverseGammaPrior{});
    spec.phi_bounds.assign(static_cast<std::size_t>(p), {phi_lower, phi_upper});
    return spec;
  }

  void validate(Eigen::Index p) const {
    if (static_cast<Eigen::Index>(sigmasq.size()) != p ||
        static_cast<Eigen::Index>(phi_bounds.size()) != p) {
      throw ConfigError("PriorSpec: expected one sigma^2 prior and one phi bound pair per coefficient");
    }
    for (const auto& ig : sigmasq) {
      if (!(ig.shape > 0.0) || !(ig.scale > 0.0)) {
        throw ConfigError("PriorSpec: inverse-gamma hyperparameters must be positive");
      }
    }
    if (!(tausq.shape > 0.0) || !(tausq.scale > 0.0)) {
      throw ConfigError("PriorSpec: inverse-gamma hyperparameters must be positive");
    }
    for (const auto& [lo, hi] : phi_bounds) {
      if (!(lo < hi) || !(lo > 0.0)) {
        throw ConfigError("PriorSpec: phi bounds must satisfy 0 < lower < upper");
      }
    }
  }
};

/// Chain length, starting values, adaptation and storage settings.
struct RunConfig {
  std::int64_t mcmc = 1000;
  std::int64_t burn_in = 0;
  std::int64_t thin = 1;
  std::uint64_t seed = 0;

  double tausq_start = 1.0;
  std::vector<double> sigmasq_start;  // empty: all 1
  std::vector<double> phi_start;      // empty: bound midpoints
  std::vector<Vector> w_start;        // empty: all zero

  double proposal_sd_start = 1.0;
  double target_accept = 0.234;
  bool adapt_entire_chain = true;  // false: freeze RAM adaptation after burn-in
  bool store_surfaces = false;

  void validate() const {
    if (mcmc < 1) {
      throw ConfigError("RunConfig: iteration count must be at least 1");
    }
    if (burn_in < 0 || burn_in >= mcmc) {
      throw ConfigError("RunConfig: burn-in must be non-negative and below the iteration count");
    }
    if (thin < 1) {
      throw ConfigError("RunConfig: thinning stride must be at least 1");
    }
  }
};

/// Current values of all sampled quantities plus the cached factorization of
/// each knot correlation matrix K*(phi_r).
struct ChainState {
  std::vector<Vector> w_knot;
  std::vector<BoundedParam> phi;
  std::vector<double> sigmasq;
  double tausq = 1.0;
  std::vector<RamState> ram;
  std::vector<CholFactor> knot_factor;

  Eigen::Index p() const { return static_cast<Eigen::Index>(phi.size()); }
};

/// Per-iteration draws, in the layout of the sampler's return list: knot
/// surfaces, range parameters with acceptance flags, variances and the
/// nugget. Full interpolated surfaces are kept only when requested; a
/// running mean/variance of the interpolated surfaces over post-burn-in
/// iterations is always maintained, since n can be much larger than m.
struct PosteriorSamples {
  std::vector<std::int64_t> iterations;  // 1-based iteration number of each stored draw
  std::vector<Matrix> w_knot_draws;      // stored x (m x p)
  std::vector<Matrix> w_surface_draws;   // stored x (n x p), only when store_surfaces
  Matrix phi_draws;                      // stored x p
  Eigen::MatrixXi phi_accept;            // stored x p, entries in {0, 1}
  Matrix sigmasq_draws;                  // stored x p
  Matrix tausq_draws;                    // stored x 1
  Matrix surface_mean;                   // n x p
  Matrix surface_m2;                     // n x p, sum of squared deviations
  std::int64_t surface_count = 0;
  std::int64_t mcmc = 0;
  std::int64_t burn_in = 0;
  std::uint64_t seed = 0;

  Eigen::Index stored() const { return static_cast<Eigen::Index>(iterations.size()); }

  Matrix surface_variance() const {
    if (surface_count < 2) {
      return Matrix::Zero(surface_mean.rows(), surface_mean.cols());
    }
    return surface_m2 / static_cast<double>(surface_count - 1);
  }
};

/// Gaussian-process log density of w under covariance sigma^2 (L L^T), up to
/// terms that do not depend on the range parameter:
///   -sum_i log L_ii - ||L^{-1} w||^2 / (2 sigma^2).
inline double gp_range_logdensity(const CholFactor& corr_factor, const Vector& w, double sigmasq) {
  const Vector half = corr_factor.lower.triangularView<Eigen::Lower>().solve(w);
  return -corr_factor.lower.diagonal().array().log().sum() - 0.5 * half.squaredNorm() / sigmasq;
}

struct PhiUpdate {
  BoundedParam phi;
  int accepted = 0;
  RamState ram;
  CholFactor factor;  // factor of K*(phi) for the returned value
  double accept_prob = 0.0;
  bool proposal_factorization_failed = false;
};

/// Random-walk Metropolis step for phi_r on the transformed axis, with the
/// Jacobian correction and RAM adaptation. The target is
/// MVN(w*_r; 0, sigma_r^2 K*(phi)) over phi in (l_r, u_r); the uniform prior
/// cancels in the ratio. A proposal whose correlation matrix cannot be
/// factorized is treated as a rejection.
inline PhiUpdate update_phi(Eigen::Index r, const ChainState& state, const Matrix& knot_sqdist,
                            Rng& rng, bool adapt_enabled = true) {
  const auto ri = static_cast<std::size_t>(r);
  const BoundedParam current = state.phi[ri];
  const Vector& w = state.w_knot[ri];
  const double sigmasq = state.sigmasq[ri];

  const RamProposal prop = propose(current, state.ram[ri], rng);

  std::optional<CholFactor> proposal_factor;
  try {
    proposal_factor = cholesky_spd(kernel_matrix(knot_sqdist, prop.param.value),
                                   kCorrelationJitterSchedule,
                                   "K*(phi_" + std::to_string(r + 1) + ") proposal");
  } catch (const SingularCovarianceError&) {
    PhiUpdate out{current, 0, state.ram[ri], state.knot_factor[ri], 0.0, true};
    if (adapt_enabled) {
      out.ram = adapt(out.ram, 0.0);
    }
    return out;
  }

  const double log_alpha = gp_range_logdensity(*proposal_factor, w, sigmasq) -
                           gp_range_logdensity(state.knot_factor[ri], w, sigmasq) +
                           log_jacobian(current, prop.param);
  const double accept_prob = std::min(1.0, std::exp(log_alpha));
  const double u = rng.uniform_open();
  const bool accepted = log_alpha >= 0.0 || std::log(u) < log_alpha;

  PhiUpdate out;
  out.accept_prob = accept_prob;
  out.ram = adapt_enabled ? adapt(state.ram[ri], accept_prob) : state.ram[ri];
  if (accepted) {
    out.phi = prop.param;
    out.accepted = 1;
    out.factor = std::move(*proposal_factor);
  } else {
    out.phi = current;
    out.accepted = 0;
    out.factor = state.knot_factor[ri];
  }
  return out;
}

struct WConditional {
  Vector mean;
  CholFactor precision_factor;
};

/// Full conditional of w*_r at the knots, in precision form:
///   precision = C*^{-1} + diag(X_r^2) / tau^2,
///   mean      = precision^{-1} (X_r o Ytilde) / tau^2,
/// where Ytilde = Y_knots - sum_{j != r} X_j o w*_j and C* = sigma_r^2 K*.
/// This is algebraically the textbook conjugate form and stays well-defined
/// when some covariate entries are zero, unlike the division form
/// Ytilde / X_r.
inline WConditional w_full_conditional(Eigen::Index r, const ChainState& state,
                                       const KnotSet& knots) {
  const auto ri = static_cast<std::size_t>(r);
  const CholFactor& corr_factor = state.knot_factor[ri];
  const Eigen::Index m = corr_factor.dim();
  if (knots.size() != m || state.w_knot[ri].size() != m) {
    throw DimensionError("w_full_conditional: knot set does not match the cached factorization");
  }

  Vector y_tilde = knots.y;
  for (Eigen::Index j = 0; j < state.p(); ++j) {
    if (j == r) {
      continue;
    }
    y_tilde -= knots.x.col(j).cwiseProduct(state.w_knot[static_cast<std::size_t>(j)]);
  }

  const Vector x_r = knots.x.col(r);
  const Matrix eye = Matrix::Identity(m, m);
  Matrix precision = solve_spd(corr_factor, eye) / state.sigmasq[ri];
  precision = 0.5 * (precision + precision.transpose()).eval();
  precision.diagonal() += x_r.array().square().matrix() / state.tausq;

  CholFactor prec_factor = cholesky_spd(precision, kPrecisionJitterSchedule,
                                        "w_" + std::to_string(r + 1) + " full conditional precision");
  const Vector b = x_r.cwiseProduct(y_tilde) / state.tausq;
  return WConditional{solve_spd(prec_factor, b), std::move(prec_factor)};
}

/// Draw w*_r from its full conditional MVN(mu_1, Sigma_1) at the knots.
inline Vector update_w(Eigen::Index r, const ChainState& state, const KnotSet& knots, Rng& rng) {
  const WConditional cond = w_full_conditional(r, state, knots);
  return mvn_sample_precision(cond.mean, cond.precision_factor, rng);
}

/// Draw sigma_r^2 from Inv.Gamma(alpha_r + m/2, beta_r + w*' K*^{-1} w* / 2),
/// with m the knot count (the knot data carry the likelihood under the
/// subset GP).
inline double update_sigmasq(Eigen::Index r, const ChainState& state, const PriorSpec& priors,
                             Rng& rng) {
  const auto ri = static_cast<std::size_t>(r);
  const Vector half =
      state.knot_factor[ri].lower.triangularView<Eigen::Lower>().solve(state.w_knot[ri]);
  const double shape =
      priors.sigmasq[ri].shape + 0.5 * static_cast<double>(state.w_knot[ri].size());
  const double scale = priors.sigmasq[ri].scale + 0.5 * half.squaredNorm();
  return rng.inverse_gamma(shape, scale);
}

/// Draw tau^2 from Inv.Gamma(alpha_t + n/2, beta_t + RSS/2) where the
/// residual sum of squares runs over locations with an observed response and
/// complete covariates; n is adjusted to the usable count.
inline double update_tausq(const Dataset& data, const Matrix& surfaces, const PriorSpec& priors,
                           Rng& rng) {
  if (surfaces.rows() != data.n() || surfaces.cols() != data.p()) {
    throw DimensionError("update_tausq: surface matrix must be n x p");
  }
  double rss = 0.0;
  Eigen::Index used = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (is_missing(data.y(i)) || !data.x.row(i).allFinite()) {
      continue;
    }
    const double fitted = data.x.row(i).dot(surfaces.row(i));
    const double resid = data.y(i) - fitted;
    rss += resid * resid;
    ++used;
  }
  if (used == 0) {
    throw ConfigError("update_tausq: no location has both an observed response and complete covariates");
  }
  const double shape = priors.tausq.shape + 0.5 * static_cast<double>(used);
  const double scale = priors.tausq.scale + 0.5 * rss;
  return rng.inverse_gamma(shape, scale);
}

/// Predictive-process interpolation of coefficient r to the query locations:
///   wtilde = c C*^{-1} w*.
/// The spatial variance appears in both c and C* and cancels, so only
/// correlation matrices enter. cross_sqdist holds ||s_i - s*_j||^2.
inline Vector interpolate_w(Eigen::Index r, const ChainState& state, const Matrix& cross_sqdist) {
  const auto ri = static_cast<std::size_t>(r);
  if (cross_sqdist.cols() != state.knot_factor[ri].dim()) {
    throw DimensionError("interpolate_w: cross distances do not match the knot count");
  }
  const Matrix cross_corr = kernel_matrix(cross_sqdist, state.phi[ri].value);
  return cross_corr * solve_spd(state.knot_factor[ri], state.w_knot[ri]);
}

inline Vector interpolate_w(Eigen::Index r, const ChainState& state, const KnotSet& knots,
                            const Matrix& query_coords) {
  return interpolate_w(r, state, squared_distance_matrix(query_coords, knots.coords));
}

/// Builds a knot set covering every location; runs the sampler at full rank.
inline KnotSet knotset_from_dataset(const Dataset& data) {
  return KnotSet{data.y, data.x, data.coords};
}

/// Drives one chain: owns the cached distance matrices, the state and the
/// interpolated surfaces. Exposed separately from run_chain so that tests
/// and benchmarks can time or inspect individual sweeps.
class ChainDriver {
 public:
  ChainDriver(Dataset data, KnotSet knots, PriorSpec priors, RunConfig config)
      : data_(std::move(data)),
        knots_(std::move(knots)),
        priors_(std::move(priors)),
        config_(std::move(config)) {
    data_.validate();
    config_.validate();
    const Eigen::Index p = data_.p();
    priors_.validate(p);
    if (!knots_.complete()) {
      throw ConfigError("run_chain: knot data must be complete (no missing values)");
    }
    if (knots_.size() < 2) {
      throw ConfigError("run_chain: at least 2 knots are required");
    }
    if (knots_.p() != p) {
      throw DimensionError("run_chain: knot covariate count does not match the data");
    }

    knot_sqdist_ = squared_distance_matrix(knots_.coords, knots_.coords);
    // When the knots are exactly the data locations the chain runs at full
    // rank and the interpolant c C*^{-1} w* is the identity; using w*
    // directly keeps the full-GP path free of interpolation round-off.
    identity_mode_ = knots_.size() == data_.n() &&
                     (knots_.coords.array() == data_.coords.array()).all();
    if (!identity_mode_) {
      cross_sqdist_ = squared_distance_matrix(data_.coords, knots_.coords);
    }

    init_state();
    surfaces_.resize(data_.n(), p);
    accept_.assign(static_cast<std::size_t>(p), 0);
  }

  /// One full Gibbs iteration, 1-based. Sweep order per coefficient:
  /// phi_r, then w*_r, then sigma_r^2; afterwards all p surfaces are
  /// interpolated and tau^2 is drawn from the full-data residuals.
  void sweep(Rng& rng, std::int64_t iteration) {
    const Eigen::Index p = data_.p();
    const bool adapt_on = config_.adapt_entire_chain || iteration <= config_.burn_in;
    for (Eigen::Index r = 0; r < p; ++r) {
      try {
        PhiUpdate pu = update_phi(r, state_, knot_sqdist_, rng, adapt_on);
        const auto ri = static_cast<std::size_t>(r);
        state_.phi[ri] = pu.phi;
        state_.ram[ri] = pu.ram;
        state_.knot_factor[ri] = std::move(pu.factor);
        accept_[ri] = pu.accepted;
        if (pu.proposal_factorization_failed) {
          ++phi_factorization_failures_;
        }
        state_.w_knot[ri] = update_w(r, state_, knots_, rng);
        state_.sigmasq[ri] = update_sigmasq(r, state_, priors_, rng);
      } catch (const Error& e) {
        throw ConfigError("iteration " + std::to_string(iteration) + ", coefficient " +
                          std::to_string(r + 1) + ": " + e.what());
      }
    }
    for (Eigen::Index r = 0; r < p; ++r) {
      if (identity_mode_) {
        surfaces_.col(r) = state_.w_knot[static_cast<std::size_t>(r)];
      } else {
        surfaces_.col(r) = interpolate_w(r, state_, cross_sqdist_);
      }
    }
    try {
      state_.tausq = update_tausq(data_, surfaces_, priors_, rng);
    } catch (const Error& e) {
      throw ConfigError("iteration " + std::to_string(iteration) + ": " + e.what());
    }
  }

  const ChainState& state() const { return state_; }
  const Matrix& surfaces() const { return surfaces_; }
  const std::vector<int>& last_accept() const { return accept_; }
  bool full_gp_identity() const { return identity_mode_; }
  /// Proposals rejected because their correlation matrix would not factorize.
  std::int64_t phi_factorization_failures() const { return phi_factorization_failures_; }
  const Dataset& data() const { return data_; }
  const KnotSet& knots() const { return knots_; }
  const RunConfig& config() const { return config_; }

 private:
  void init_state() {
    const Eigen::Index p = data_.p();
    const Eigen::Index m = knots_.size();
    state_.w_knot.resize(static_cast<std::size_t>(p));
    state_.phi.resize(static_cast<std::size_t>(p));
    state_.sigmasq.resize(static_cast<std::size_t>(p));
    state_.ram.resize(static_cast<std::size_t>(p));
    state_.knot_factor.resize(static_cast<std::size_t>(p));
    state_.tausq = config_.tausq_start;
    if (!(state_.tausq > 0.0)) {
      throw ConfigError("run_chain: tau^2 starting value must be positive");
    }

    for (Eigen::Index r = 0; r < p; ++r) {
      const auto ri = static_cast<std::size_t>(r);
      const auto [lo, hi] = priors_.phi_bounds[ri];
      const double phi0 = config_.phi_start.empty() ? 0.5 * (lo + hi) : config_.phi_start.at(ri);
      state_.phi[ri] = BoundedParam{phi0, lo, hi};
      state_.phi[ri].validate();

      const double s0 = config_.sigmasq_start.empty() ? 1.0 : config_.sigmasq_start.at(ri);
      if (!(s0 > 0.0)) {
        throw ConfigError("run_chain: sigma^2 starting values must be positive");
      }
      state_.sigmasq[ri] = s0;

      state_.w_knot[ri] = config_.w_start.empty() ? Vector::Zero(m) : config_.w_start.at(ri);
      if (state_.w_knot[ri].size() != m) {
        throw DimensionError("run_chain: w starting vector length does not match the knot count");
      }

      state_.ram[ri] = RamState{config_.proposal_sd_start, 0, config_.target_accept, 2.0 / 3.0};
      state_.knot_factor[ri] =
          cholesky_spd(kernel_matrix(knot_sqdist_, phi0), kCorrelationJitterSchedule,
                       "K*(phi_" + std::to_string(r + 1) + ") at start");
    }
  }

  Dataset data_;
  KnotSet knots_;
  PriorSpec priors_;
  RunConfig config_;
  Matrix knot_sqdist_;
  Matrix cross_sqdist_;
  bool identity_mode_ = false;
  ChainState state_;
  Matrix surfaces_;
  std::vector<int> accept_;
  std::int64_t phi_factorization_failures_ = 0;
};

/// Runs the Gibbs sampler and collects draws. Deterministic under a fixed
/// seed. Per-iteration dense factorizations are m x m only.
inline PosteriorSamples run_chain(const Dataset& data, const KnotSet& knots,
                                  const PriorSpec& priors, const RunConfig& config) {
  ChainDriver driver(data, knots, priors, config);
  Rng rng(config.seed);

  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const Eigen::Index m = knots.size();
  const auto stored_total = static_cast<Eigen::Index>(config.mcmc / config.thin);

  PosteriorSamples out;
  out.mcmc = config.mcmc;
  out.burn_in = config.burn_in;
  out.seed = config.seed;
  out.iterations.reserve(static_cast<std::size_t>(stored_total));
  out.w_knot_draws.reserve(static_cast<std::size_t>(stored_total));
  out.phi_draws.resize(stored_total, p);
  out.phi_accept.resize(stored_total, p);
  out.sigmasq_draws.resize(stored_total, p);
  out.tausq_draws.resize(stored_total, 1);
  out.surface_mean = Matrix::Zero(n, p);
  out.surface_m2 = Matrix::Zero(n, p);

  Eigen::Index row = 0;
  for (std::int64_t t = 1; t <= config.mcmc; ++t) {
    driver.sweep(rng, t);

    if (t > config.burn_in) {
      // Welford running moments of the interpolated surfaces.
      out.surface_count += 1;
      const Matrix delta = driver.surfaces() - out.surface_mean;
      out.surface_mean += delta / static_cast<double>(out.surface_count);
      out.surface_m2.array() += delta.array() * (driver.surfaces() - out.surface_mean).array();
    }

    if (t % config.thin != 0) {
      continue;
    }
    out.iterations.push_back(t);
    Matrix knot_draw(m, p);
    for (Eigen::Index r = 0; r < p; ++r) {
      const auto ri = static_cast<std::size_t>(r);
      knot_draw.col(r) = driver.state().w_knot[ri];
      out.phi_draws(row, r) = driver.state().phi[ri].value;
      out.phi_accept(row, r) = driver.last_accept()[ri];
      out.sigmasq_draws(row, r) = driver.state().sigmasq[ri];
    }
    out.w_knot_draws.push_back(std::move(knot_draw));
    if (config.store_surfaces) {
      out.w_surface_draws.push_back(driver.surfaces());
    }
    out.tausq_draws(row, 0) = driver.state().tausq;
    ++row;
  }
  return out;
}

}  // namespace svc
