#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "amspline/data.hpp"
#include "amspline/sampler.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace amspline;

namespace {

const SplineConfig kToyConfig{{0.0, 4.0, 8.0}, 1.0};
const ParameterState kToyState{{0.2, 0.5, 0.3}, 0.1, 0.04};

PriorSpec prior_for(std::size_t k, double concentration = 1.0) {
  PriorSpec p;
  p.stick = {concentration, k};
  return p;
}

// Responses sit on the toy curve plus fixed offsets, so the residual sum of
// squares is known exactly.
Dataset toy_data(double offset) {
  Dataset d;
  const CurveEvaluator mu(kToyConfig, kToyState);
  for (int i = 0; i <= 10; ++i) {
    const double x = i;
    d.observations.push_back({x, mu(x) + (i % 2 ? offset : -offset)});
  }
  return d;
}

double normal_density(double y, double m, double v) {
  return std::exp(-0.5 * (y - m) * (y - m) / v) / std::sqrt(2.0 * std::numbers::pi * v);
}

}  // namespace

TEST_CASE("log_likelihood with zero residual") {
  const SplineConfig c{{5.0}, 1.0};
  const ParameterState s{{1.0}, 0.0, 1.0};
  const Dataset d{{{2.0, curve(2.0, c, s)}}, "", false};
  CHECK(log_likelihood(d, c, s) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));

  const Dataset d5 = toy_data(0.0);
  ParameterState doubled = kToyState;
  doubled.noise_var *= 2.0;
  const double drop = log_likelihood(d5, kToyConfig, kToyState) -
                      log_likelihood(d5, kToyConfig, doubled);
  CHECK(drop == doctest::Approx(0.5 * static_cast<double>(d5.size()) * std::log(2.0)));
}

TEST_CASE("log_likelihood matches a per-point density product") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    auto rc = oracle::random_case(rng);
    rc.state.noise_var = 0.01 + 0.2 * u(rng);
    Dataset d;
    const std::size_t n = 1 + rep % 8;
    for (std::size_t i = 0; i < n; ++i) d.observations.push_back({10.0 * u(rng), u(rng)});
    double prod = 1.0;
    for (const auto& o : d.observations)
      prod *= normal_density(o.response, curve(o.dose, rc.config, rc.state), rc.state.noise_var);
    CHECK(std::abs(log_likelihood(d, rc.config, rc.state) - std::log(prod)) <= 1e-10);
  }
}

TEST_CASE("acceptance probability") {
  CHECK(acceptance_probability(-3.0, -3.0) == 1.0);
  CHECK(acceptance_probability(-3.0, 5.0) == 1.0);
  CHECK(acceptance_probability(0.0, -std::log(4.0)) == doctest::Approx(0.25));
  CHECK(acceptance_probability(0.0, -std::numeric_limits<double>::infinity()) == 0.0);
  CHECK(acceptance_probability(0.0, std::nan("")) == 0.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double q = acceptance_probability(n(rng), n(rng));
    CHECK((q >= 0.0 && q <= 1.0));
  }
}

TEST_CASE("transformed coordinates round trip") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 500; ++i) {
    auto rc = oracle::random_case(rng);
    rc.state.floor = std::max(rc.state.floor, 1e-6);
    const auto back = TransformedState::from(rc.state).to_state();
    REQUIRE(back.weights.size() == rc.state.weights.size());
    for (std::size_t j = 0; j < back.weights.size(); ++j)
      CHECK(std::abs(back.weights[j] - rc.state.weights[j]) <= 1e-12);
    CHECK(back.floor == doctest::Approx(rc.state.floor).epsilon(1e-12));
    CHECK(back.noise_var == doctest::Approx(rc.state.noise_var).epsilon(1e-12));
  }
}

TEST_CASE("log_jacobian matches a finite-difference determinant for one stick") {
  // K = 2: (a_1, alpha, sigma^2) depend on one coordinate each, so the
  // Jacobian is diagonal.
  TransformedState t;
  t.fraction_logits = {0.7};
  t.floor_logit = -1.3;
  t.log_sigma = -0.4;
  const double h = 1e-6;
  auto bump = [&](int which, double d) {
    TransformedState u = t;
    if (which == 0) u.fraction_logits[0] += d;
    if (which == 1) u.floor_logit += d;
    if (which == 2) u.log_sigma += d;
    const auto s = u.to_state();
    return std::array<double, 3>{s.weights[0], s.floor, s.noise_var};
  };
  double log_det = 0.0;
  for (int k = 0; k < 3; ++k)
    log_det += std::log((bump(k, h)[k] - bump(k, -h)[k]) / (2.0 * h));
  CHECK(t.log_jacobian() == doctest::Approx(log_det).epsilon(1e-7));
}

TEST_CASE("mh_step keeps every state valid and rejects impossible proposals") {
  const Dataset d = toy_data(0.05);
  const PosteriorModel model(d, kToyConfig, prior_for(3));
  Rng rng(3);
  ParameterState s = kToyState;
  StepSizes big{5.0, 5.0, 5.0};
  for (int i = 0; i < 2000; ++i) {
    const auto r = mh_step(s, model, rng, big);
    CHECK(r.state.is_valid(3));
    CHECK(std::isfinite(r.log_posterior));
    s = r.state;
  }
}

TEST_CASE("mh_step with frozen blocks leaves them untouched") {
  const Dataset d = toy_data(0.05);
  const PosteriorModel model(d, kToyConfig, prior_for(3));
  Rng rng(5);
  const auto r = mh_step(kToyState, model, rng, StepSizes{}, {false, false, true});
  CHECK(r.accepted[0] == false);
  CHECK(r.accepted[1] == false);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(r.state.weights[j] == doctest::Approx(kToyState.weights[j]).epsilon(1e-14));
  CHECK(r.state.floor == doctest::Approx(kToyState.floor).epsilon(1e-14));
}

TEST_CASE("noise-only chain matches log-grid quadrature of the posterior") {
  // With df = 2, sigma is exponential with mean 2, so
  // p(sigma^2) is proportional to exp(-sqrt(v) / 2) / sqrt(v).
  const Dataset d = toy_data(0.15);
  const double n = static_cast<double>(d.size());
  const double ss = n * 0.15 * 0.15;
  auto log_post = [&](double v) {
    return -0.5 * std::sqrt(v) - 0.5 * std::log(v) - 0.5 * n * std::log(v) - 0.5 * ss / v;
  };
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double t = -12.0 + 16.0 * i / 200000.0;
    const double v = std::exp(t);
    const double w = std::exp(log_post(v) - log_post(ss / n)) * v;
    num += w * v;
    den += w;
  }
  const double truth = num / den;

  const PosteriorModel model(d, kToyConfig, prior_for(3));
  ChainConfig cc;
  cc.n_samples = 100000;
  cc.update = {false, false, true};
  cc.seed = 77;
  const auto samples = run_chain(model, cc, kToyState);
  double mean = 0.0;
  for (const auto& s : samples.states) mean += s.noise_var;
  mean /= static_cast<double>(samples.size());
  CHECK(mean == doctest::Approx(truth).epsilon(0.02).scale(0.0));
}

TEST_CASE("prior-only chain reproduces the first-weight prior mean") {
  const auto d = generate_sim(SimKind::sim1, 30, 0.05, 1);
  for (double c : {1.0, 3.0}) {
    ChainConfig cc;
    cc.n_samples = 100000;
    cc.use_likelihood = false;
    cc.seed = 12;
    const SplineConfig sc{{0.0, 2.0, 5.0, 8.0}, 1.0};
    const auto samples = run_chain(d, sc, prior_for(4, c), cc);
    std::vector<double> a1;
    for (const auto& s : samples.states) a1.push_back(s.weights[0]);
    const double se = oracle::batch_means_se(a1);
    double mean = 0.0;
    for (double x : a1) mean += x;
    mean /= static_cast<double>(a1.size());
    CHECK(std::abs(mean - 1.0 / (1.0 + c)) <= 3.0 * se);
  }
}

TEST_CASE("equal seeds give bit-identical chains") {
  const auto d = generate_sim(SimKind::sim1, 50, 0.05, 3);
  const SplineConfig sc{{0.0, 2.0, 5.0}, 0.8};
  ChainConfig cc;
  cc.n_samples = 500;
  cc.n_tune = 200;
  const auto a = run_chain(d, sc, prior_for(3), cc);
  const auto b = run_chain(d, sc, prior_for(3), cc);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.states[i].weights == b.states[i].weights);
    CHECK(a.states[i].floor == b.states[i].floor);
    CHECK(a.states[i].noise_var == b.states[i].noise_var);
    CHECK(a.log_posterior[i] == b.log_posterior[i]);
  }
  cc.seed += 1;
  const auto c = run_chain(d, sc, prior_for(3), cc);
  CHECK(c.states.back().floor != a.states.back().floor);
}

TEST_CASE("tuned chain on step-shaped data") {
  const auto d = generate_sim(SimKind::sim1, 100, 0.05, 4);
  const SplineConfig sc{{0.0, 1.0, 2.0, 3.0, 5.0, 8.0}, 0.8};
  ChainConfig cc;
  cc.n_samples = 3000;
  const auto s = run_chain(d, sc, prior_for(6), cc);
  CHECK(s.tuning_acceptance.size() == 3);
  double sum = 0.0;
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    const double r = s.acceptance_rate(static_cast<Block>(b));
    CHECK(r >= 0.15);
    CHECK(r <= 0.6);
    sum += r;
  }
  CHECK(sum / kNumBlocks <= 0.5);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(std::isfinite(s.log_posterior[i]));
    CHECK(s.states[i].is_valid(6));
  }
}

TEST_CASE("tuned acceptance with the thirteen-knot step-data configuration") {
  // The tuner only rescales outside [0.15, 0.6]; the block average is the
  // figure held to [0.15, 0.5].
  const auto d = generate_sim(SimKind::sim1, 140, 0.05, 5);
  const SplineConfig sc{{0, 0.1, 0.25, 0.5, 1, 1.2, 2, 3, 4, 5, 6, 7, 10}, 0.8};
  ChainConfig cc;
  cc.n_samples = 5000;
  const auto s = run_chain(d, sc, prior_for(13), cc);
  double sum = 0.0;
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    const double r = s.acceptance_rate(static_cast<Block>(b));
    CHECK(r >= 0.15);
    CHECK(r <= 0.6);
    sum += r;
  }
  CHECK(sum / kNumBlocks >= 0.15);
  CHECK(sum / kNumBlocks <= 0.5);
}

TEST_CASE("run_chain input errors") {
  Dataset one;
  for (int i = 0; i < 5; ++i) one.observations.push_back({0.0, 1.0});
  const SplineConfig sc{{0.0, 2.0}, 1.0};
  CHECK_THROWS_AS(run_chain(one, sc, prior_for(2), ChainConfig{}), IllPosedData);
  const auto d = generate_sim(SimKind::sim1, 20, 0.05, 1);
  CHECK_THROWS_AS(run_chain(d, sc, prior_for(3), ChainConfig{}), DimensionError);
  ChainConfig bad;
  bad.n_samples = 0;
  CHECK_THROWS_AS(run_chain(d, sc, prior_for(2), bad), ConfigError);
  bad = ChainConfig{};
  bad.steps.floor = 0.0;
  CHECK_THROWS_AS(run_chain(d, sc, prior_for(2), bad), ConfigError);
}

TEST_CASE("summarize") {
  const std::vector<double> constant(200, 0.3);
  const auto s = summarize(constant);
  CHECK(s.mean == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(s.median == 0.3);
  CHECK(s.stdev == doctest::Approx(0.0));
  CHECK(s.ci_lower == 0.3);
  CHECK(s.ci_upper == 0.3);

  CHECK_THROWS_AS(summarize(std::vector<double>(99, 1.0)), InsufficientSamples);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> draws(40000);
  for (double& x : draws) x = u(rng);
  const auto us = summarize(draws);
  CHECK(std::abs(us.mean - 0.5) <= 3.0 / std::sqrt(12.0 * static_cast<double>(draws.size())));
  CHECK(us.ci_lower == doctest::Approx(0.025).epsilon(0.1).scale(0.0));
  CHECK(us.ci_upper == doctest::Approx(0.975).epsilon(0.01).scale(0.0));
}

TEST_CASE("summarize over a chain brackets the noise median") {
  const auto d = generate_sim(SimKind::sim1, 50, 0.05, 6);
  const SplineConfig sc{{0.0, 3.0}, 1.0};
  ChainConfig cc;
  cc.n_samples = 1000;
  cc.n_tune = 200;
  const auto samples = run_chain(d, sc, prior_for(2), cc);
  const auto s = summarize(samples, ParameterSelector::noise_var());
  CHECK(s.ci_lower <= s.median);
  CHECK(s.median <= s.ci_upper);
  CHECK(ParameterSelector::noise_var().name() == "sigma2");
  CHECK(ParameterSelector::floor().name() == "alpha");
  CHECK(ParameterSelector::weight(12).name() == "a_13");
  CHECK_THROWS_AS(ParameterSelector::weight(2)(samples.states[0]), DimensionError);
}
