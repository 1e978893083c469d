#pragma once
// Block-wise random-walk Metropolis-Hastings for the spline posterior.
//
// The chain lives in an unconstrained space: logits of the stick fractions,
// the logit of the floor and log sigma.  Each block gets a symmetric Gaussian
// proposal there, so the acceptance ratio only needs the posterior and the
// Jacobian of the back-transform.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amspline/data.hpp"
#include "amspline/prior.hpp"
#include "amspline/spline.hpp"

namespace amspline {

enum class Block : std::size_t { fractions = 0, floor = 1, noise = 2 };
inline constexpr std::size_t kNumBlocks = 3;
using BlockFlags = std::array<bool, kNumBlocks>;

struct StepSizes {
  double fractions = 0.2;
  double floor = 0.1;
  double log_noise = 0.2;

  double& at(Block b) noexcept;
  double at(Block b) const noexcept;
};

struct ChainConfig {
  std::size_t n_samples = 10000;
  std::size_t n_tune = 1000;       // steps per tuning chain
  std::size_t n_tune_chains = 3;
  StepSizes steps;
  std::uint64_t seed = 20240601;
  std::size_t thin = 1;
  BlockFlags update{true, true, true};  // frozen blocks keep their start value
  bool use_likelihood = true;           // false samples the prior

  void validate() const;
};

// Unconstrained coordinates of a ParameterState.
struct TransformedState {
  std::vector<double> fraction_logits;  // K - 1
  double floor_logit = 0.0;
  double log_sigma = 0.0;

  static TransformedState from(const ParameterState& state);
  ParameterState to_state() const;
  // log |d(weights, floor, sigma^2) / d(this)|
  double log_jacobian() const;
};

double log_likelihood(const Dataset& data, const SplineConfig& config,
                      const ParameterState& state);

class PosteriorModel {
 public:
  PosteriorModel(Dataset data, SplineConfig config, PriorSpec prior, bool use_likelihood = true);

  // log p(state | data) up to a constant; -inf off the support.
  double log_posterior(const ParameterState& state) const;
  // Density of the transformed coordinates (posterior times Jacobian).
  double log_target(const TransformedState& t) const;

  const Dataset& data() const noexcept { return data_; }
  const SplineConfig& config() const noexcept { return config_; }
  const PriorSpec& prior() const noexcept { return prior_; }

 private:
  Dataset data_;
  SplineConfig config_;
  PriorSpec prior_;
  bool use_likelihood_;
};

// Q = min{1, exp(proposed - current)}; 0 when the proposal has no density.
double acceptance_probability(double log_current, double log_proposed) noexcept;

struct StepResult {
  ParameterState state;
  BlockFlags accepted{};
  double log_posterior = 0.0;
};

StepResult mh_step(const ParameterState& current, const PosteriorModel& model, Rng& rng,
                   const StepSizes& steps, const BlockFlags& update = {true, true, true});

struct PosteriorSamples {
  std::vector<ParameterState> states;
  std::vector<double> log_posterior;
  std::vector<BlockFlags> accepted;  // per retained iteration
  std::array<std::size_t, kNumBlocks> accept_count{};
  std::array<std::size_t, kNumBlocks> proposal_count{};
  StepSizes tuned_steps;
  // Per-block acceptance of each tuning chain, in order.
  std::vector<std::array<double, kNumBlocks>> tuning_acceptance;

  std::size_t size() const noexcept { return states.size(); }
  double acceptance_rate(Block b) const noexcept;
};

PosteriorSamples run_chain(const Dataset& data, const SplineConfig& config,
                           const PriorSpec& prior, const ChainConfig& chain);

// Same, from an explicit start state (frozen blocks keep its values).
PosteriorSamples run_chain(const PosteriorModel& model, const ChainConfig& chain,
                           const ParameterState& start);

class ParameterSelector {
 public:
  static ParameterSelector floor() { return {Kind::floor, 0}; }
  static ParameterSelector noise_var() { return {Kind::noise_var, 0}; }
  static ParameterSelector weight(std::size_t j) { return {Kind::weight, j}; }

  double operator()(const ParameterState& s) const;
  std::string name() const;  // "alpha", "sigma2", "a_<j+1>"

 private:
  enum class Kind { floor, noise_var, weight };
  ParameterSelector(Kind k, std::size_t i) : kind_(k), index_(i) {}
  Kind kind_;
  std::size_t index_;
};

struct Summary {
  double mean = 0.0;
  double median = 0.0;
  double stdev = 0.0;
  double ci_lower = 0.0;  // 0.025 quantile
  double ci_upper = 0.0;  // 0.975 quantile
};

inline constexpr std::size_t kMinSummarySamples = 100;

Summary summarize(std::span<const double> values);
Summary summarize(const PosteriorSamples& samples, const ParameterSelector& selector);

}  // namespace amspline
