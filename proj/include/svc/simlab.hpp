#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "svc/covkernel.hpp"
#include "svc/dataset.hpp"
#include "svc/gibbs.hpp"
#include "svc/knots.hpp"
#include "svc/rng.hpp"

namespace svc {

/// Synthetic-data design: a side x side regular grid with p coefficient
/// surfaces drawn from Gaussian processes around fixed means. The default
/// spacing of 0.1 keeps the domain small against a phi = 2 range, so the
/// k = 2 knot set carries nearly all of each surface and the sampler reaches
/// its stationary regime from the default starting values within a few
/// hundred iterations.
struct SimDesign {
  int side = 21;
  double spacing = 0.1;
  int p = 3;
  std::vector<double> sigmasq_true{1.0, 1.0, 1.0};
  std::vector<double> phi_true{2.0, 2.0, 2.0};
  double tausq_true = 1e-4;
  std::vector<double> w_mean_true{0.0, 10.0, -5.0};
  int replications = 20;
  std::uint64_t seed = 0;

  Eigen::Index n() const { return static_cast<Eigen::Index>(side) * side; }

  void validate() const {
    if (side < 2) {
      throw ConfigError("SimDesign: grid side must be at least 2");
    }
    if (!(spacing > 0.0)) {
      throw ConfigError("SimDesign: grid spacing must be positive");
    }
    if (p < 1) {
      throw ConfigError("SimDesign: at least one coefficient is required");
    }
    const auto pu = static_cast<std::size_t>(p);
    if (sigmasq_true.size() != pu || phi_true.size() != pu || w_mean_true.size() != pu) {
      throw ConfigError("SimDesign: per-coefficient truth vectors must have length p");
    }
    for (int r = 0; r < p; ++r) {
      const auto ru = static_cast<std::size_t>(r);
      if (!(sigmasq_true[ru] > 0.0) || !(phi_true[ru] > 0.0)) {
        throw ConfigError("SimDesign: true variances and ranges must be positive");
      }
    }
    if (!(tausq_true > 0.0)) {
      throw ConfigError("SimDesign: true nugget must be positive");
    }
  }
};

/// Dense n x n generation is only intended for desk-scale experiments.
inline constexpr Eigen::Index kMaxDenseLocations = 2048;

struct SyntheticData {
  Dataset data;
  Matrix true_w;  // n x p
};

/// Generates one replication: regular-grid coordinates, GP coefficient
/// surfaces w_r = mean_r + MVN(0, sigma_r^2 K(phi_r)) via a dense
/// factorization, an all-ones first covariate with standard-normal remaining
/// columns, and response Y = sum_r X_r o w_r + Normal(0, tau^2) noise.
inline SyntheticData generate_synthetic(const SimDesign& design, Rng& rng) {
  design.validate();
  const Eigen::Index n = design.n();
  if (n > kMaxDenseLocations) {
    throw ConfigError("generate_synthetic: " + std::to_string(n) +
                      " locations exceeds the dense-generation limit of " +
                      std::to_string(kMaxDenseLocations));
  }

  Matrix coords(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    coords(i, 0) = design.spacing * static_cast<double>(i % design.side);
    coords(i, 1) = design.spacing * static_cast<double>(i / design.side);
  }
  const Matrix sqdist = squared_distance_matrix(coords, coords);

  Matrix true_w(n, design.p);
  for (int r = 0; r < design.p; ++r) {
    const auto ru = static_cast<std::size_t>(r);
    const CholFactor factor =
        cholesky_spd(kernel_matrix(sqdist, design.phi_true[ru]), kCorrelationJitterSchedule,
                     "K(phi_" + std::to_string(r + 1) + ") truth");
    const Vector mean = Vector::Constant(n, design.w_mean_true[ru]);
    Vector draw = mvn_sample(Vector::Zero(n), factor, rng);
    true_w.col(r) = mean + std::sqrt(design.sigmasq_true[ru]) * draw;
  }

  Matrix x(n, design.p);
  x.col(0).setOnes();
  for (int r = 1; r < design.p; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, r) = rng.normal();
    }
  }

  Vector y(n);
  const double noise_sd = std::sqrt(design.tausq_true);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = x.row(i).dot(true_w.row(i)) + noise_sd * rng.normal();
  }

  SyntheticData out;
  out.data.y = std::move(y);
  out.data.x = std::move(x);
  out.data.coords = std::move(coords);
  out.data.covariate_names.emplace_back("X1");
  for (int r = 1; r < design.p; ++r) {
    out.data.covariate_names.push_back("X" + std::to_string(r + 1));
  }
  out.true_w = std::move(true_w);
  return out;
}

/// Per-coefficient bias and RMSE of posterior-mean surfaces against truth,
/// pooled over locations and replications, plus mean fit wall time.
struct MetricsReport {
  std::vector<double> bias;
  std::vector<double> rmse;
  double mean_fit_seconds = 0.0;
  int replications = 0;
};

/// bias_r = mean(error), rmse_r = sqrt(mean(error^2)) with errors pooled
/// over every location of every replication.
inline MetricsReport bias_rmse(const std::vector<Matrix>& estimates,
                               const std::vector<Matrix>& truths) {
  if (estimates.empty() || estimates.size() != truths.size()) {
    throw DimensionError("bias_rmse: estimate and truth replication counts must match and be non-empty");
  }
  const Eigen::Index p = estimates.front().cols();
  MetricsReport report;
  report.replications = static_cast<int>(estimates.size());
  report.bias.assign(static_cast<std::size_t>(p), 0.0);
  report.rmse.assign(static_cast<std::size_t>(p), 0.0);

  std::vector<double> sum(static_cast<std::size_t>(p), 0.0);
  std::vector<double> sum_sq(static_cast<std::size_t>(p), 0.0);
  std::int64_t count = 0;
  for (std::size_t rep = 0; rep < estimates.size(); ++rep) {
    if (estimates[rep].rows() != truths[rep].rows() || estimates[rep].cols() != p ||
        truths[rep].cols() != p) {
      throw DimensionError("bias_rmse: replication " + std::to_string(rep) + " has mismatched shapes");
    }
    const Matrix err = estimates[rep] - truths[rep];
    for (Eigen::Index r = 0; r < p; ++r) {
      sum[static_cast<std::size_t>(r)] += err.col(r).sum();
      sum_sq[static_cast<std::size_t>(r)] += err.col(r).squaredNorm();
    }
    count += err.rows();
  }
  for (Eigen::Index r = 0; r < p; ++r) {
    const auto ru = static_cast<std::size_t>(r);
    report.bias[ru] = sum[ru] / static_cast<double>(count);
    report.rmse[ru] = std::sqrt(sum_sq[ru] / static_cast<double>(count));
  }
  return report;
}

struct DensePosterior {
  Vector mean;
  Matrix cov;
};

/// Deliberately naive dense oracle for the w full conditional, used only for
/// test cross-validation:
///   Sigma_0 = sigma^2 (K + jitter I),  Sigma = tau^2 diag(1 / X_r^2),
///   Sigma_1 = (Sigma_0^{-1} + Sigma^{-1})^{-1},  mu_1 = Sigma_1 Sigma^{-1} (Ytilde / X_r).
/// Works through explicit inverses, so every covariate entry must be nonzero.
inline DensePosterior dense_oracle_posterior(const Matrix& knot_coords, double phi, double jitter,
                                             double sigmasq, double tausq, const Vector& x_r,
                                             const Vector& y_tilde) {
  const Eigen::Index m = knot_coords.rows();
  if (m > 12) {
    throw ConfigError("dense_oracle_posterior: oracle is limited to dimension 12");
  }
  if (x_r.size() != m || y_tilde.size() != m) {
    throw DimensionError("dense_oracle_posterior: vector lengths must match the knot count");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (x_r(i) == 0.0) {
      throw DomainError("dense_oracle_posterior: zero covariate entry; the division form is undefined");
    }
  }
  Matrix corr = kernel_matrix(squared_distance_matrix(knot_coords, knot_coords), phi);
  corr.diagonal().array() += jitter;
  const Matrix sigma0 = sigmasq * corr;
  Matrix sigma = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    sigma(i, i) = tausq / (x_r(i) * x_r(i));
  }
  const Matrix sigma0_inv = sigma0.inverse();
  const Matrix sigma_inv = sigma.inverse();
  DensePosterior out;
  out.cov = (sigma0_inv + sigma_inv).inverse();
  out.mean = out.cov * sigma_inv * y_tilde.cwiseQuotient(x_r);
  return out;
}

/// Reference full-rank sampler used by the equivalence tests: the same
/// per-parameter updates driven directly over all n locations, with no
/// interpolation step anywhere. tau^2 sees the raw w draws.
inline PosteriorSamples full_gp_reference_chain(const Dataset& data, const PriorSpec& priors,
                                                const RunConfig& config) {
  data.validate();
  config.validate();
  priors.validate(data.p());
  if (!data.y.allFinite() || !data.x.allFinite()) {
    throw ConfigError("full_gp_reference_chain: complete data required at every location");
  }

  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const KnotSet all = knotset_from_dataset(data);
  const Matrix sqdist = squared_distance_matrix(data.coords, data.coords);

  ChainState state;
  state.tausq = config.tausq_start;
  state.w_knot.resize(static_cast<std::size_t>(p));
  state.phi.resize(static_cast<std::size_t>(p));
  state.sigmasq.resize(static_cast<std::size_t>(p));
  state.ram.resize(static_cast<std::size_t>(p));
  state.knot_factor.resize(static_cast<std::size_t>(p));
  for (Eigen::Index r = 0; r < p; ++r) {
    const auto ri = static_cast<std::size_t>(r);
    const auto [lo, hi] = priors.phi_bounds[ri];
    const double phi0 = config.phi_start.empty() ? 0.5 * (lo + hi) : config.phi_start.at(ri);
    state.phi[ri] = BoundedParam{phi0, lo, hi};
    state.sigmasq[ri] = config.sigmasq_start.empty() ? 1.0 : config.sigmasq_start.at(ri);
    state.w_knot[ri] = config.w_start.empty() ? Vector::Zero(n) : config.w_start.at(ri);
    state.ram[ri] = RamState{config.proposal_sd_start, 0, config.target_accept, 2.0 / 3.0};
    state.knot_factor[ri] = cholesky_spd(kernel_matrix(sqdist, phi0));
  }

  Rng rng(config.seed);
  PosteriorSamples out;
  out.mcmc = config.mcmc;
  out.burn_in = config.burn_in;
  out.seed = config.seed;
  const auto stored_total = static_cast<Eigen::Index>(config.mcmc / config.thin);
  out.phi_draws.resize(stored_total, p);
  out.phi_accept.resize(stored_total, p);
  out.sigmasq_draws.resize(stored_total, p);
  out.tausq_draws.resize(stored_total, 1);
  out.surface_mean = Matrix::Zero(n, p);
  out.surface_m2 = Matrix::Zero(n, p);

  Matrix w_all(n, p);
  Eigen::Index row = 0;
  for (std::int64_t t = 1; t <= config.mcmc; ++t) {
    const bool adapt_on = config.adapt_entire_chain || t <= config.burn_in;
    std::vector<int> accepted(static_cast<std::size_t>(p), 0);
    for (Eigen::Index r = 0; r < p; ++r) {
      const auto ri = static_cast<std::size_t>(r);
      PhiUpdate pu = update_phi(r, state, sqdist, rng, adapt_on);
      state.phi[ri] = pu.phi;
      state.ram[ri] = pu.ram;
      state.knot_factor[ri] = std::move(pu.factor);
      accepted[ri] = pu.accepted;
      state.w_knot[ri] = update_w(r, state, all, rng);
      state.sigmasq[ri] = update_sigmasq(r, state, priors, rng);
    }
    for (Eigen::Index r = 0; r < p; ++r) {
      w_all.col(r) = state.w_knot[static_cast<std::size_t>(r)];
    }
    state.tausq = update_tausq(data, w_all, priors, rng);

    if (t > config.burn_in) {
      out.surface_count += 1;
      const Matrix delta = w_all - out.surface_mean;
      out.surface_mean += delta / static_cast<double>(out.surface_count);
      out.surface_m2.array() += delta.array() * (w_all - out.surface_mean).array();
    }
    if (t % config.thin != 0) {
      continue;
    }
    out.iterations.push_back(t);
    out.w_knot_draws.push_back(w_all);
    for (Eigen::Index r = 0; r < p; ++r) {
      const auto ri = static_cast<std::size_t>(r);
      out.phi_draws(row, r) = state.phi[ri].value;
      out.phi_accept(row, r) = accepted[ri];
      out.sigmasq_draws(row, r) = state.sigmasq[ri];
    }
    out.tausq_draws(row, 0) = state.tausq;
    ++row;
  }
  return out;
}

struct BenchmarkReport {
  double full_seconds_per_iter = 0.0;
  double subset_seconds_per_iter = 0.0;
  double ratio = 0.0;  // subset / full
  Eigen::Index n = 0;
  Eigen::Index m = 0;
};

namespace detail {

inline double median_sweep_seconds(ChainDriver& driver, Rng& rng, int iterations) {
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(iterations));
  for (int t = 1; t <= iterations; ++t) {
    const auto start = std::chrono::steady_clock::now();
    driver.sweep(rng, t);
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(stop - start).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

/// Evenly strided row subset of the data, used as benchmark knots.
inline KnotSet strided_knots(const Dataset& data, Eigen::Index m) {
  KnotSet knots;
  knots.y.resize(m);
  knots.x.resize(m, data.p());
  knots.coords.resize(m, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index src = (i * data.n()) / m;
    knots.y(i) = data.y(src);
    knots.x.row(i) = data.x.row(src);
    knots.coords.row(i) = data.coords.row(src);
  }
  return knots;
}

}  // namespace detail

/// Median per-iteration wall time of the subset-GP sweep (m knots) against
/// the full-rank sweep (knots = all n locations), on the same data and seed.
inline BenchmarkReport benchmark_iteration(int side, Eigen::Index m, int p, int iterations,
                                           std::uint64_t seed = 17) {
  SimDesign design;
  design.side = side;
  design.p = p;
  design.sigmasq_true.assign(static_cast<std::size_t>(p), 1.0);
  design.phi_true.assign(static_cast<std::size_t>(p), 2.0);
  design.w_mean_true.assign(static_cast<std::size_t>(p), 0.0);
  design.seed = seed;
  Rng rng(seed);
  const SyntheticData synth = generate_synthetic(design, rng);
  const Eigen::Index n = synth.data.n();
  if (m > n) {
    throw ConfigError("benchmark_iteration: m must not exceed n");
  }

  const PriorSpec priors = PriorSpec::defaults(p, 0.001, 500.0);
  RunConfig config;
  config.mcmc = iterations;
  config.seed = seed;

  BenchmarkReport report;
  report.n = n;
  report.m = m;
  {
    ChainDriver driver(synth.data, detail::strided_knots(synth.data, m), priors, config);
    Rng chain_rng(seed);
    report.subset_seconds_per_iter = detail::median_sweep_seconds(driver, chain_rng, iterations);
  }
  {
    ChainDriver driver(synth.data, knotset_from_dataset(synth.data), priors, config);
    Rng chain_rng(seed);
    report.full_seconds_per_iter = detail::median_sweep_seconds(driver, chain_rng, iterations);
  }
  report.ratio = report.subset_seconds_per_iter / report.full_seconds_per_iter;
  return report;
}

/// Settings for a full simulation experiment around run_chain.
struct ExperimentConfig {
  RunConfig chain;
  int knot_k = 2;
  double phi_lower = 0.001;
  double phi_upper = 500.0;
  int threads = 1;
  bool self_test = false;  // skip fitting and score the truths against themselves
};

/// Runs the replication study: generate, select knots, fit, and score the
/// posterior-mean surfaces against the generating truth. Replication seeds
/// are derived deterministically from the design seed, so the report does
/// not depend on the thread count.
inline MetricsReport run_experiment(const SimDesign& design, const ExperimentConfig& config) {
  design.validate();
  const int reps = design.replications;
  if (reps < 1) {
    throw ConfigError("run_experiment: at least one replication is required");
  }

  std::vector<Matrix> estimates(static_cast<std::size_t>(reps));
  std::vector<Matrix> truths(static_cast<std::size_t>(reps));
  std::vector<double> seconds(static_cast<std::size_t>(reps), 0.0);
  std::vector<std::string> failures(static_cast<std::size_t>(reps));

  const auto run_one = [&](int rep) {
    try {
      // Streams 2*rep and 2*rep+1: one for data generation, one for the chain.
      Rng rng = Rng::derive(design.seed, 2 * static_cast<std::uint64_t>(rep));
      const SyntheticData synth = generate_synthetic(design, rng);
      truths[static_cast<std::size_t>(rep)] = synth.true_w;
      if (config.self_test) {
        estimates[static_cast<std::size_t>(rep)] = synth.true_w;
        return;
      }
      const KnotSet knots = filter_complete(simpleknots(synth.data, config.knot_k)).knots;
      const PriorSpec priors = PriorSpec::defaults(design.p, config.phi_lower, config.phi_upper);
      RunConfig chain = config.chain;
      chain.seed = Rng::derive(design.seed, 2 * static_cast<std::uint64_t>(rep) + 1).next_u64();
      const auto start = std::chrono::steady_clock::now();
      const PosteriorSamples samples = run_chain(synth.data, knots, priors, chain);
      const auto stop = std::chrono::steady_clock::now();
      seconds[static_cast<std::size_t>(rep)] = std::chrono::duration<double>(stop - start).count();
      estimates[static_cast<std::size_t>(rep)] = samples.surface_mean;
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(rep)] = e.what();
    }
  };

  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (int rep = 0; rep < reps; ++rep) {
      run_one(rep);
    }
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (int rep = next.fetch_add(1); rep < reps; rep = next.fetch_add(1)) {
          run_one(rep);
        }
      });
    }
    for (auto& th : pool) {
      th.join();
    }
  }

  for (int rep = 0; rep < reps; ++rep) {
    if (!failures[static_cast<std::size_t>(rep)].empty()) {
      throw ConfigError("run_experiment: replication " + std::to_string(rep) + " failed: " +
                        failures[static_cast<std::size_t>(rep)]);
    }
  }

  MetricsReport report = bias_rmse(estimates, truths);
  report.mean_fit_seconds =
      std::accumulate(seconds.begin(), seconds.end(), 0.0) / static_cast<double>(reps);
  return report;
}

}  // namespace svc
