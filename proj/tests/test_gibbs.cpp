#include <catch2/catch.hpp>

#include <cmath>

#include "svc/gibbs.hpp"
#include "svc/simlab.hpp"

using svc::BoundedParam;
using svc::ChainState;
using svc::CholFactor;
using svc::Dataset;
using svc::KnotSet;
using svc::Matrix;
using svc::PosteriorSamples;
using svc::PriorSpec;
using svc::RamState;
using svc::Rng;
using svc::RunConfig;
using svc::Vector;

namespace {

/// Single-coefficient state over m knots with an explicitly supplied
/// correlation factor.
ChainState make_state(Vector w, BoundedParam phi, double sigmasq, double tausq, CholFactor f) {
  ChainState state;
  state.w_knot.push_back(std::move(w));
  state.phi.push_back(phi);
  state.sigmasq.push_back(sigmasq);
  state.tausq = tausq;
  state.ram.push_back(RamState{});
  state.knot_factor.push_back(std::move(f));
  return state;
}

KnotSet make_knots(const Vector& y, const Matrix& x, const Matrix& coords) {
  return KnotSet{y, x, coords};
}

Matrix grid_coords(int side, double spacing) {
  Matrix coords(static_cast<Eigen::Index>(side) * side, 2);
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    coords(i, 0) = spacing * static_cast<double>(i % side);
    coords(i, 1) = spacing * static_cast<double>(i / side);
  }
  return coords;
}

Dataset random_dataset(Eigen::Index n, Eigen::Index p, Rng& rng) {
  Dataset data;
  data.coords.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.coords(i, 0) = 10.0 * rng.uniform();
    data.coords(i, 1) = 10.0 * rng.uniform();
  }
  data.x.resize(n, p);
  data.x.col(0).setOnes();
  for (Eigen::Index j = 1; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      data.x(i, j) = rng.normal();
    }
  }
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.y(i) = rng.normal();
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    data.covariate_names.push_back("X" + std::to_string(j + 1));
  }
  return data;
}

bool samples_bit_equal(const PosteriorSamples& a, const PosteriorSamples& b) {
  if (a.stored() != b.stored()) {
    return false;
  }
  if (!(a.phi_draws.array() == b.phi_draws.array()).all()) {
    return false;
  }
  if (!(a.phi_accept.array() == b.phi_accept.array()).all()) {
    return false;
  }
  if (!(a.sigmasq_draws.array() == b.sigmasq_draws.array()).all()) {
    return false;
  }
  if (!(a.tausq_draws.array() == b.tausq_draws.array()).all()) {
    return false;
  }
  for (Eigen::Index i = 0; i < a.stored(); ++i) {
    const auto iu = static_cast<std::size_t>(i);
    if (!(a.w_knot_draws[iu].array() == b.w_knot_draws[iu].array()).all()) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("w full conditional: scalar conjugate case") {
  // m=1, X=1, C*=1, tau^2=1, Ytilde=2  ->  Normal(1, 1/2)
  const CholFactor unit{Matrix::Identity(1, 1), 0.0};
  ChainState state = make_state(Vector::Zero(1), BoundedParam{1.0, 0.1, 10.0}, 1.0, 1.0, unit);
  const KnotSet knots = make_knots(Vector::Constant(1, 2.0), Matrix::Ones(1, 1),
                                   Matrix::Zero(1, 2));
  const svc::WConditional cond = svc::w_full_conditional(0, state, knots);
  REQUIRE(cond.mean(0) == Approx(1.0).margin(1e-12));
  const double variance = 1.0 / (cond.precision_factor.lower(0, 0) *
                                 cond.precision_factor.lower(0, 0));
  REQUIRE(variance == Approx(0.5).margin(1e-12));

  Rng rng(51);
  double sum = 0.0;
  double sum_sq = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double d = svc::update_w(0, state, knots, rng)(0);
    sum += d;
    sum_sq += d * d;
  }
  const double mean = sum / draws;
  REQUIRE(mean == Approx(1.0).margin(0.02));
  REQUIRE(sum_sq / draws - mean * mean == Approx(0.5).margin(0.02));
}

TEST_CASE("w full conditional: zero covariate column reduces to the prior") {
  Rng rng(52);
  const Matrix coords = grid_coords(2, 2.0);  // m = 4
  const Matrix corr = svc::kernel_matrix(svc::squared_distance_matrix(coords, coords), 0.8);
  const CholFactor f = svc::cholesky_spd(corr);
  const double sigmasq = 1.7;
  ChainState state = make_state(Vector::Zero(4), BoundedParam{0.8, 0.1, 10.0}, sigmasq, 0.3, f);
  const KnotSet knots = make_knots(Vector::Ones(4), Matrix::Zero(4, 1), coords);

  const svc::WConditional cond = svc::w_full_conditional(0, state, knots);
  REQUIRE(cond.mean.cwiseAbs().maxCoeff() == 0.0);
  // precision factor should reconstruct (sigma^2 (K + jitter I))^{-1}
  Matrix jittered = corr;
  jittered.diagonal().array() += f.jitter;
  const Matrix implied_cov =
      svc::solve_spd(cond.precision_factor, Matrix::Identity(4, 4).eval());
  REQUIRE((implied_cov - sigmasq * jittered).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("w full conditional matches the dense oracle on random instances") {
  Rng rng(53);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index m = 6;
    Matrix coords(m, 2);
    for (Eigen::Index i = 0; i < m; ++i) {
      coords(i, 0) = 5.0 * rng.uniform();
      coords(i, 1) = 5.0 * rng.uniform();
    }
    const double phi = 0.5 + 3.0 * rng.uniform();
    const double sigmasq = 0.5 + rng.uniform();
    const double tausq = 0.2 + rng.uniform();
    Vector x(m);
    Vector y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      x(i) = rng.normal();
      if (std::abs(x(i)) < 0.1) {
        x(i) = 0.5;  // oracle needs nonzero covariates
      }
      y(i) = rng.normal();
    }
    const Matrix corr = svc::kernel_matrix(svc::squared_distance_matrix(coords, coords), phi);
    const CholFactor f = svc::cholesky_spd(corr);
    ChainState state =
        make_state(Vector::Zero(m), BoundedParam{phi, 0.01, 100.0}, sigmasq, tausq, f);
    const KnotSet knots = make_knots(y, x, coords);

    const svc::WConditional cond = svc::w_full_conditional(0, state, knots);
    const svc::DensePosterior oracle =
        svc::dense_oracle_posterior(coords, phi, f.jitter, sigmasq, tausq, x, y);
    REQUIRE((cond.mean - oracle.mean).cwiseAbs().maxCoeff() < 1e-8);
    const Matrix implied_cov =
        svc::solve_spd(cond.precision_factor, Matrix::Identity(m, m).eval());
    REQUIRE((implied_cov - oracle.cov).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("phi acceptance ratio: determinant oracle at w* = 0") {
  // With w* = 0 the likelihood depends on phi only through the log
  // determinant, so the acceptance ratio is |K'|^{-1/2} / |K|^{-1/2} times
  // the Jacobian; both are computable by hand for m = 2.
  Matrix coords(2, 2);
  coords << 0.0, 0.0, 1.0, 1.0;  // squared distance 2
  const Matrix d = svc::squared_distance_matrix(coords, coords);
  const double phi_cur = 2.0;
  const double phi_prop = 3.0;
  const CholFactor f_cur = svc::cholesky_spd(svc::kernel_matrix(d, phi_cur));
  const CholFactor f_prop = svc::cholesky_spd(svc::kernel_matrix(d, phi_prop));
  const Vector w = Vector::Zero(2);

  const double delta = svc::gp_range_logdensity(f_prop, w, 1.0) -
                       svc::gp_range_logdensity(f_cur, w, 1.0);
  const auto logdet = [&](double phi, double jitter) {
    const double rho = std::exp(-2.0 / phi);
    return std::log((1.0 + jitter) * (1.0 + jitter) - rho * rho);
  };
  const double expected = -0.5 * logdet(phi_prop, f_prop.jitter) +
                          0.5 * logdet(phi_cur, f_cur.jitter);
  REQUIRE(delta == Approx(expected).margin(1e-10));

  const BoundedParam cur{phi_cur, 0.001, 500.0};
  const BoundedParam prop{phi_prop, 0.001, 500.0};
  REQUIRE(svc::log_jacobian(cur, cur) == 0.0);
  const double jac = svc::log_jacobian(cur, prop);
  REQUIRE(jac == Approx(std::log((3.0 - 0.001) * (500.0 - 3.0)) -
                        std::log((2.0 - 0.001) * (500.0 - 2.0)))
                     .epsilon(1e-12));
}

TEST_CASE("update_phi: draws stay in bounds, flags match moves") {
  Rng rng(54);
  const Matrix coords = grid_coords(3, 1.5);
  const Matrix d = svc::squared_distance_matrix(coords, coords);
  const CholFactor f = svc::cholesky_spd(svc::kernel_matrix(d, 2.0));
  ChainState state = make_state(Vector::Ones(9) * 0.4, BoundedParam{2.0, 0.001, 500.0}, 1.0, 1.0, f);

  double prev = state.phi[0].value;
  for (int t = 0; t < 300; ++t) {
    const svc::PhiUpdate up = svc::update_phi(0, state, d, rng);
    REQUIRE(up.phi.value > 0.001);
    REQUIRE(up.phi.value < 500.0);
    REQUIRE((up.accepted == 0 || up.accepted == 1));
    if (up.accepted == 0) {
      REQUIRE(up.phi.value == prev);
    } else {
      REQUIRE(up.phi.value != prev);
    }
    REQUIRE(up.ram.iteration == t + 1);
    state.phi[0] = up.phi;
    state.ram[0] = up.ram;
    state.knot_factor[0] = up.factor;
    prev = up.phi.value;
  }
}

TEST_CASE("update_phi recovers the range parameter to order of magnitude") {
  svc::SimDesign design;
  design.side = 21;
  design.p = 1;
  design.sigmasq_true = {1.0};
  design.phi_true = {2.0};
  design.w_mean_true = {0.0};
  design.tausq_true = 1e-4;
  design.seed = 55;
  Rng rng(55);
  const svc::SyntheticData synth = svc::generate_synthetic(design, rng);
  const KnotSet knots = svc::simpleknots(synth.data, 2);

  const PriorSpec priors = PriorSpec::defaults(1, 0.001, 500.0);
  RunConfig config;
  config.mcmc = 3000;
  config.burn_in = 1000;
  config.seed = 56;
  const PosteriorSamples samples = svc::run_chain(synth.data, knots, priors, config);

  double mean_phi = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < samples.stored(); ++i) {
    if (samples.iterations[static_cast<std::size_t>(i)] > config.burn_in) {
      mean_phi += samples.phi_draws(i, 0);
      ++count;
    }
  }
  mean_phi /= count;
  REQUIRE(mean_phi > 0.5);
  REQUIRE(mean_phi < 8.0);
}

TEST_CASE("update_sigmasq: degenerate w* = 0 matches inverse-gamma moments") {
  const Matrix coords = grid_coords(2, 3.0);
  const Matrix corr = svc::kernel_matrix(svc::squared_distance_matrix(coords, coords), 1.0);
  ChainState state = make_state(Vector::Zero(4), BoundedParam{1.0, 0.1, 10.0}, 1.0, 1.0,
                                svc::cholesky_spd(corr));
  PriorSpec priors = PriorSpec::defaults(1, 0.1, 10.0);
  priors.sigmasq[0] = svc::InverseGammaPrior{0.001, 0.001};

  // Inv.Gamma(0.001 + 2, 0.001): mean 0.001 / 1.001
  Rng rng(57);
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    sum += svc::update_sigmasq(0, state, priors, rng);
  }
  const double expected = 0.001 / 1.001;
  REQUIRE(sum / draws == Approx(expected).epsilon(0.05));
}

TEST_CASE("update_sigmasq: scalar case with a nonzero quadratic form") {
  // m=1, K*=1, w*=2 -> Inv.Gamma(alpha + 1/2, beta + 2); alpha=3, beta=1
  const CholFactor unit{Matrix::Identity(1, 1), 0.0};
  ChainState state = make_state(Vector::Constant(1, 2.0), BoundedParam{1.0, 0.1, 10.0}, 1.0, 1.0,
                                unit);
  PriorSpec priors = PriorSpec::defaults(1, 0.1, 10.0);
  priors.sigmasq[0] = svc::InverseGammaPrior{3.0, 1.0};

  Rng rng(58);
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    sum += svc::update_sigmasq(0, state, priors, rng);
  }
  REQUIRE(sum / draws == Approx(3.0 / 2.5).epsilon(0.02));
}

TEST_CASE("sigma quadratic form matches a dense oracle") {
  Rng rng(59);
  Matrix coords(8, 2);
  for (Eigen::Index i = 0; i < 8; ++i) {
    coords(i, 0) = 6.0 * rng.uniform();
    coords(i, 1) = 6.0 * rng.uniform();
  }
  const Matrix corr = svc::kernel_matrix(svc::squared_distance_matrix(coords, coords), 1.2);
  const CholFactor f = svc::cholesky_spd(corr);
  Vector w(8);
  for (Eigen::Index i = 0; i < 8; ++i) {
    w(i) = rng.normal();
  }
  const Vector half = f.lower.triangularView<Eigen::Lower>().solve(w);
  Matrix jittered = corr;
  jittered.diagonal().array() += f.jitter;
  const double dense = w.dot(jittered.inverse() * w);
  REQUIRE(half.squaredNorm() == Approx(dense).margin(1e-9));
}

TEST_CASE("update_tausq: perfect fit and constant residuals match moments") {
  Dataset data;
  data.y.resize(2);
  data.y << 1.0, 1.0;
  data.x = Matrix::Ones(2, 1);
  data.coords = Matrix::Zero(2, 2);
  data.coords(1, 0) = 1.0;
  data.covariate_names = {"X1"};

  PriorSpec priors = PriorSpec::defaults(1, 0.1, 10.0);
  priors.tausq = svc::InverseGammaPrior{3.0, 1.0};

  const int draws = 100000;
  {
    // surfaces equal the data: Inv.Gamma(3 + 1, 1), mean 1/3
    const Matrix surfaces = data.y;
    Rng rng(60);
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) {
      sum += svc::update_tausq(data, surfaces, priors, rng);
    }
    REQUIRE(sum / draws == Approx(1.0 / 3.0).epsilon(0.02));
  }
  {
    // residuals (1, 1): Inv.Gamma(4, 2), mean 2/3
    const Matrix surfaces = Matrix::Zero(2, 1);
    Rng rng(61);
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) {
      sum += svc::update_tausq(data, surfaces, priors, rng);
    }
    REQUIRE(sum / draws == Approx(2.0 / 3.0).epsilon(0.02));
  }
}

TEST_CASE("update_tausq skips missing rows and rejects an empty likelihood") {
  Dataset data;
  data.y.resize(3);
  data.y << 1.0, std::numeric_limits<double>::quiet_NaN(), 2.0;
  data.x = Matrix::Ones(3, 1);
  data.x(2, 0) = std::numeric_limits<double>::quiet_NaN();
  data.coords = Matrix::Zero(3, 2);
  data.covariate_names = {"X1"};

  PriorSpec priors = PriorSpec::defaults(1, 0.1, 10.0);
  priors.tausq = svc::InverseGammaPrior{3.0, 1.0};

  // only row 0 is usable: residual 1 -> Inv.Gamma(3.5, 1.5)
  const Matrix surfaces = Matrix::Zero(3, 1);
  Rng rng(62);
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    sum += svc::update_tausq(data, surfaces, priors, rng);
  }
  REQUIRE(sum / draws == Approx(1.5 / 2.5).epsilon(0.02));

  Dataset empty = data;
  empty.y.setConstant(std::numeric_limits<double>::quiet_NaN());
  REQUIRE_THROWS_AS(svc::update_tausq(empty, surfaces, priors, rng), svc::ConfigError);
}

TEST_CASE("interpolation at the knots is the identity") {
  Rng rng(63);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix coords = grid_coords(5, 2.0);
    const double phi = 0.1 + 0.4 * rng.uniform();
    const Matrix d = svc::squared_distance_matrix(coords, coords);
    const CholFactor f = svc::cholesky_spd(svc::kernel_matrix(d, phi));
    Vector w(coords.rows());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w(i) = -0.9 + 1.8 * rng.uniform();
    }
    ChainState state = make_state(w, BoundedParam{phi, 0.01, 10.0}, 1.0, 1.0, f);
    const Vector interp = svc::interpolate_w(0, state, d);
    REQUIRE((interp - w).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("interpolation from a single knot is the scaled kernel") {
  const CholFactor unit{Matrix::Identity(1, 1), 0.0};
  ChainState state = make_state(Vector::Constant(1, 3.0), BoundedParam{2.0, 0.1, 10.0}, 1.0, 1.0,
                                unit);
  Matrix cross(1, 1);
  cross << 2.0;
  const Vector interp = svc::interpolate_w(0, state, cross);
  REQUIRE(interp(0) == Approx(3.0 * std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("interpolation matches a dense oracle") {
  Rng rng(64);
  Matrix knot_coords(5, 2);
  for (Eigen::Index i = 0; i < 5; ++i) {
    knot_coords(i, 0) = 4.0 * rng.uniform();
    knot_coords(i, 1) = 4.0 * rng.uniform();
  }
  Matrix query(12, 2);
  for (Eigen::Index i = 0; i < 12; ++i) {
    query(i, 0) = 4.0 * rng.uniform();
    query(i, 1) = 4.0 * rng.uniform();
  }
  const double phi = 1.5;
  const Matrix d_knot = svc::squared_distance_matrix(knot_coords, knot_coords);
  const CholFactor f = svc::cholesky_spd(svc::kernel_matrix(d_knot, phi));
  Vector w(5);
  for (Eigen::Index i = 0; i < 5; ++i) {
    w(i) = rng.normal();
  }
  ChainState state = make_state(w, BoundedParam{phi, 0.01, 10.0}, 1.0, 1.0, f);
  const Matrix cross = svc::squared_distance_matrix(query, knot_coords);
  const Vector interp = svc::interpolate_w(0, state, cross);

  // dense oracle: form c and (K* + jitter I)^{-1} explicitly
  Matrix jittered = svc::kernel_matrix(d_knot, phi);
  jittered.diagonal().array() += f.jitter;
  const Vector expected = svc::kernel_matrix(cross, phi) * jittered.inverse() * w;
  REQUIRE((interp - expected).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("run_chain output shapes match the return list") {
  Rng rng(65);
  const Dataset data = random_dataset(20, 1, rng);
  const KnotSet knots = svc::knotset_from_dataset(data);
  const PriorSpec priors = PriorSpec::defaults(1, 0.5, 50.0);
  RunConfig config;
  config.mcmc = 10;
  config.seed = 66;
  config.store_surfaces = true;
  const PosteriorSamples samples = svc::run_chain(data, knots, priors, config);

  REQUIRE(samples.stored() == 10);
  REQUIRE(samples.w_knot_draws.size() == 10);
  REQUIRE(samples.w_knot_draws.front().rows() == 20);
  REQUIRE(samples.w_knot_draws.front().cols() == 1);
  REQUIRE(samples.w_surface_draws.size() == 10);
  REQUIRE(samples.phi_draws.rows() == 10);
  REQUIRE(samples.phi_draws.cols() == 1);
  REQUIRE(samples.phi_accept.rows() == 10);
  REQUIRE(samples.sigmasq_draws.rows() == 10);
  REQUIRE(samples.tausq_draws.rows() == 10);
  REQUIRE(samples.tausq_draws.cols() == 1);
  REQUIRE(samples.surface_mean.rows() == 20);
  REQUIRE(samples.surface_mean.cols() == 1);
}

TEST_CASE("run_chain is bit-identical under a fixed seed") {
  Rng rng(67);
  const Dataset data = random_dataset(15, 2, rng);
  const KnotSet knots = svc::knotset_from_dataset(data);
  const PriorSpec priors = PriorSpec::defaults(2, 0.1, 50.0);
  RunConfig config;
  config.mcmc = 50;
  config.seed = 68;
  const PosteriorSamples a = svc::run_chain(data, knots, priors, config);
  const PosteriorSamples b = svc::run_chain(data, knots, priors, config);
  REQUIRE(samples_bit_equal(a, b));
}

TEST_CASE("subset chain with knots = all locations equals the full-GP reference") {
  Rng rng(69);
  const Dataset data = random_dataset(30, 2, rng);
  const KnotSet knots = svc::knotset_from_dataset(data);
  const PriorSpec priors = PriorSpec::defaults(2, 0.1, 50.0);
  RunConfig config;
  config.mcmc = 120;
  config.seed = 70;
  const PosteriorSamples subset = svc::run_chain(data, knots, priors, config);
  const PosteriorSamples reference = svc::full_gp_reference_chain(data, priors, config);
  REQUIRE(samples_bit_equal(subset, reference));
}

TEST_CASE("run_chain draws satisfy the chain invariants") {
  Rng rng(71);
  const Dataset data = random_dataset(24, 2, rng);
  const KnotSet knots = svc::knotset_from_dataset(data);
  const PriorSpec priors = PriorSpec::defaults(2, 0.05, 80.0);
  RunConfig config;
  config.mcmc = 150;
  config.seed = 72;
  const PosteriorSamples samples = svc::run_chain(data, knots, priors, config);

  for (Eigen::Index t = 0; t < samples.stored(); ++t) {
    for (Eigen::Index r = 0; r < 2; ++r) {
      REQUIRE(samples.phi_draws(t, r) > 0.05);
      REQUIRE(samples.phi_draws(t, r) < 80.0);
      REQUIRE(samples.sigmasq_draws(t, r) > 0.0);
      const int flag = samples.phi_accept(t, r);
      REQUIRE((flag == 0 || flag == 1));
      if (t > 0 && flag == 0) {
        REQUIRE(samples.phi_draws(t, r) == samples.phi_draws(t - 1, r));
      }
      if (t > 0 && flag == 1) {
        REQUIRE(samples.phi_draws(t, r) != samples.phi_draws(t - 1, r));
      }
    }
    REQUIRE(samples.tausq_draws(t, 0) > 0.0);
  }
}

TEST_CASE("m x m factorization count does not grow with n") {
  svc::SimDesign small;
  small.side = 8;
  small.p = 1;
  small.sigmasq_true = {1.0};
  small.phi_true = {2.0};
  small.w_mean_true = {0.0};
  svc::SimDesign large = small;
  large.side = 16;

  Rng rng_small(73);
  Rng rng_large(74);
  const svc::SyntheticData data_small = svc::generate_synthetic(small, rng_small);
  const svc::SyntheticData data_large = svc::generate_synthetic(large, rng_large);
  const PriorSpec priors = PriorSpec::defaults(1, 0.1, 50.0);
  RunConfig config;
  config.mcmc = 5;

  const auto count_sweeps = [&](const Dataset& data) {
    svc::ChainDriver driver(data, svc::detail::strided_knots(data, 4), priors, config);
    Rng rng(75);
    const std::uint64_t before = svc::detail::cholesky_count().load();
    for (int t = 1; t <= 5; ++t) {
      driver.sweep(rng, t);
    }
    return svc::detail::cholesky_count().load() - before;
  };

  const auto count_small = count_sweeps(data_small.data);
  const auto count_large = count_sweeps(data_large.data);
  REQUIRE(count_small == count_large);
}

TEST_CASE("freezing adaptation after burn-in changes the trajectory") {
  Rng rng(77);
  const Dataset data = random_dataset(16, 1, rng);
  const KnotSet knots = svc::knotset_from_dataset(data);
  const PriorSpec priors = PriorSpec::defaults(1, 0.1, 50.0);
  RunConfig adaptive;
  adaptive.mcmc = 200;
  adaptive.burn_in = 20;
  adaptive.seed = 78;
  RunConfig frozen = adaptive;
  frozen.adapt_entire_chain = false;
  const PosteriorSamples a = svc::run_chain(data, knots, priors, adaptive);
  const PosteriorSamples b = svc::run_chain(data, knots, priors, frozen);
  // identical through burn-in, diverging once the frozen chain stops adapting
  REQUIRE((a.phi_draws.topRows(20).array() == b.phi_draws.topRows(20).array()).all());
  REQUIRE((a.phi_draws.bottomRows(100).array() != b.phi_draws.bottomRows(100).array()).any());
}

TEST_CASE("run_chain validates knots and configuration") {
  Rng rng(76);
  Dataset data = random_dataset(10, 1, rng);
  const PriorSpec priors = PriorSpec::defaults(1, 0.1, 10.0);
  RunConfig config;
  config.mcmc = 5;

  KnotSet missing = svc::knotset_from_dataset(data);
  missing.y(0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(svc::run_chain(data, missing, priors, config), svc::ConfigError);

  KnotSet single;
  single.y = data.y.head(1);
  single.x = data.x.topRows(1);
  single.coords = data.coords.topRows(1);
  REQUIRE_THROWS_AS(svc::run_chain(data, single, priors, config), svc::ConfigError);

  RunConfig bad = config;
  bad.burn_in = 5;
  REQUIRE_THROWS_AS(svc::run_chain(data, svc::knotset_from_dataset(data), priors, bad),
                    svc::ConfigError);
}
