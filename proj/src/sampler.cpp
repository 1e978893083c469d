#include "amspline/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "amspline/stats.hpp"

namespace amspline {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kFloorClamp = 1e-9;

double log_sigmoid(double u) {
  return u >= 0.0 ? -std::log1p(std::exp(-u)) : u - std::log1p(std::exp(u));
}

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

struct ChainState {
  TransformedState point;
  double log_target = kNegInf;
};

BlockFlags kernel_step(ChainState& cur, const PosteriorModel& model, Rng& rng,
                       const StepSizes& steps, const BlockFlags& update) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  BlockFlags accepted{};
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    if (!update[b]) continue;
    const auto block = static_cast<Block>(b);
    if (block == Block::fractions && cur.point.fraction_logits.empty()) continue;

    TransformedState proposal = cur.point;
    const double step = steps.at(block);
    switch (block) {
      case Block::fractions:
        for (double& u : proposal.fraction_logits) u += step * normal(rng);
        break;
      case Block::floor:
        proposal.floor_logit += step * normal(rng);
        break;
      case Block::noise:
        proposal.log_sigma += step * normal(rng);
        break;
    }
    const double lt = model.log_target(proposal);
    const double q = acceptance_probability(cur.log_target, lt);
    if (unif(rng) < q) {
      cur.point = std::move(proposal);
      cur.log_target = lt;
      accepted[b] = true;
    }
  }
  return accepted;
}

ChainState make_chain_state(const ParameterState& start, const PosteriorModel& model) {
  ParameterState s = start;
  s.floor = std::clamp(s.floor, kFloorClamp, 1.0 - kFloorClamp);
  ChainState cur{TransformedState::from(s), 0.0};
  cur.log_target = model.log_target(cur.point);
  if (!std::isfinite(cur.log_target))
    throw DomainError("chain start state has zero posterior density");
  return cur;
}

bool block_active(const ChainState& cur, const BlockFlags& update, std::size_t b) {
  if (!update[b]) return false;
  return !(static_cast<Block>(b) == Block::fractions && cur.point.fraction_logits.empty());
}

PosteriorSamples run_from(const PosteriorModel& model, const ChainConfig& chain,
                          const ParameterState& start, Rng& rng) {
  ChainState cur = make_chain_state(start, model);
  PosteriorSamples out;
  StepSizes steps = chain.steps;

  // Tuning chains: discarded, each one rescales the step of every block.
  for (std::size_t c = 0; c < chain.n_tune_chains; ++c) {
    std::array<std::size_t, kNumBlocks> acc{};
    for (std::size_t i = 0; i < chain.n_tune; ++i) {
      const auto flags = kernel_step(cur, model, rng, steps, chain.update);
      for (std::size_t b = 0; b < kNumBlocks; ++b) acc[b] += flags[b];
    }
    std::array<double, kNumBlocks> rates{};
    for (std::size_t b = 0; b < kNumBlocks; ++b) {
      if (!block_active(cur, chain.update, b)) continue;
      rates[b] = static_cast<double>(acc[b]) / static_cast<double>(chain.n_tune);
      double& s = steps.at(static_cast<Block>(b));
      if (rates[b] > 0.6) s *= 2.0;
      else if (rates[b] < 0.15) s *= 0.5;
    }
    out.tuning_acceptance.push_back(rates);
  }
  out.tuned_steps = steps;

  out.states.reserve(chain.n_samples);
  out.log_posterior.reserve(chain.n_samples);
  out.accepted.reserve(chain.n_samples);
  for (std::size_t i = 0; i < chain.n_samples; ++i) {
    BlockFlags flags{};
    for (std::size_t t = 0; t < chain.thin; ++t) {
      flags = kernel_step(cur, model, rng, steps, chain.update);
      for (std::size_t b = 0; b < kNumBlocks; ++b) {
        if (!block_active(cur, chain.update, b)) continue;
        ++out.proposal_count[b];
        out.accept_count[b] += flags[b];
      }
    }
    out.states.push_back(cur.point.to_state());
    out.log_posterior.push_back(cur.log_target - cur.point.log_jacobian());
    out.accepted.push_back(flags);
  }
  return out;
}

}  // namespace

double& StepSizes::at(Block b) noexcept {
  switch (b) {
    case Block::fractions: return fractions;
    case Block::floor: return floor;
    case Block::noise: break;
  }
  return log_noise;
}

double StepSizes::at(Block b) const noexcept {
  return const_cast<StepSizes&>(*this).at(b);
}

void ChainConfig::validate() const {
  if (n_samples < 1 || n_tune < 1 || n_tune_chains < 1 || thin < 1)
    throw ConfigError("chain counts must all be >= 1");
  for (double s : {steps.fractions, steps.floor, steps.log_noise})
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("step sizes must be positive");
}

TransformedState TransformedState::from(const ParameterState& state) {
  if (state.weights.empty()) throw DimensionError("empty weight vector");
  std::vector<double> a = state.weights;
  if (std::any_of(a.begin(), a.end(), [](double w) { return w == 0.0; })) {
    const auto z = unstick(a, ZeroWeightPolicy::nudge);
    a = stick_break(z);
  }
  TransformedState t;
  // logit Z_k = log a_k - log(a_{k+1} + ... + a_K)
  std::vector<double> tails(a.size());
  double tail = 0.0;
  for (std::size_t k = a.size(); k-- > 0;) {
    tail += a[k];
    tails[k] = tail;
  }
  t.fraction_logits.resize(a.size() - 1);
  for (std::size_t k = 0; k + 1 < a.size(); ++k)
    t.fraction_logits[k] = std::log(a[k]) - std::log(tails[k + 1]);
  t.floor_logit = std::log(state.floor) - std::log1p(-state.floor);
  t.log_sigma = 0.5 * std::log(state.noise_var);
  return t;
}

ParameterState TransformedState::to_state() const {
  ParameterState s;
  s.weights = stick_break_logit(fraction_logits);
  s.floor = sigmoid(floor_logit);
  s.noise_var = std::exp(2.0 * log_sigma);
  return s;
}

double TransformedState::log_jacobian() const {
  double lj = 0.0;
  double log_remaining = 0.0;
  for (double u : fraction_logits) {
    // d a_k / d Z_k = remaining stick; d Z / d u = Z (1 - Z)
    lj += log_remaining + log_sigmoid(u) + log_sigmoid(-u);
    log_remaining += log_sigmoid(-u);
  }
  lj += log_sigmoid(floor_logit) + log_sigmoid(-floor_logit);
  lj += std::log(2.0) + 2.0 * log_sigma;
  return lj;
}

double log_likelihood(const Dataset& data, const SplineConfig& config,
                      const ParameterState& state) {
  if (data.empty()) throw IllPosedData("likelihood of an empty dataset");
  if (!(state.noise_var > 0.0)) throw DomainError("noise variance must be positive");
  const CurveEvaluator mu(config, state);
  double ss = 0.0;
  for (const auto& o : data.observations) {
    const double r = o.response - mu(o.dose);
    ss += r * r;
  }
  const double n = static_cast<double>(data.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi * state.noise_var) -
         0.5 * ss / state.noise_var;
}

PosteriorModel::PosteriorModel(Dataset data, SplineConfig config, PriorSpec prior,
                               bool use_likelihood)
    : data_(std::move(data)),
      config_(std::move(config)),
      prior_(prior),
      use_likelihood_(use_likelihood) {
  config_.validate();
  prior_.validate();
  if (prior_.stick.num_sticks != config_.size())
    throw DimensionError("prior stick count does not match knot count");
  if (use_likelihood_ && data_.empty()) throw IllPosedData("dataset is empty");
}

double PosteriorModel::log_posterior(const ParameterState& state) const {
  if (state.weights.size() != config_.size())
    throw DimensionError("weight vector length does not match knot count");
  const double lp = log_prior(state, prior_);
  if (lp == kNegInf || std::isnan(lp)) return kNegInf;
  if (!use_likelihood_) return lp;
  const double ll = log_likelihood(data_, config_, state);
  if (std::isnan(ll)) return kNegInf;
  return lp + ll;
}

double PosteriorModel::log_target(const TransformedState& t) const {
  const ParameterState s = t.to_state();
  const double lp = log_posterior(s);
  if (lp == kNegInf) return kNegInf;
  const double v = lp + t.log_jacobian();
  return std::isnan(v) ? kNegInf : v;
}

double acceptance_probability(double log_current, double log_proposed) noexcept {
  if (std::isnan(log_proposed) || log_proposed == kNegInf) return 0.0;
  const double delta = log_proposed - log_current;
  if (delta >= 0.0 || std::isnan(delta)) return 1.0;
  return std::exp(delta);
}

StepResult mh_step(const ParameterState& current, const PosteriorModel& model, Rng& rng,
                   const StepSizes& steps, const BlockFlags& update) {
  ChainState cur = make_chain_state(current, model);
  StepResult r;
  r.accepted = kernel_step(cur, model, rng, steps, update);
  r.state = cur.point.to_state();
  r.log_posterior = cur.log_target - cur.point.log_jacobian();
  return r;
}

double PosteriorSamples::acceptance_rate(Block b) const noexcept {
  const auto i = static_cast<std::size_t>(b);
  if (proposal_count[i] == 0) return 0.0;
  return static_cast<double>(accept_count[i]) / static_cast<double>(proposal_count[i]);
}

PosteriorSamples run_chain(const Dataset& data, const SplineConfig& config,
                           const PriorSpec& prior, const ChainConfig& chain) {
  chain.validate();
  if (data.distinct_doses() < 2)
    throw IllPosedData("need at least two distinct dose levels");
  const PosteriorModel model(data, config, prior, chain.use_likelihood);
  Rng rng(chain.seed);
  // Prior draws can land where the likelihood underflows; redraw a few times.
  for (int attempt = 0; attempt < 100; ++attempt) {
    ParameterState start = sample_prior(model.prior(), rng);
    start.floor = std::clamp(start.floor, kFloorClamp, 1.0 - kFloorClamp);
    if (std::isfinite(model.log_target(TransformedState::from(start))))
      return run_from(model, chain, start, rng);
  }
  throw DomainError("could not find a start state with positive posterior density");
}

PosteriorSamples run_chain(const PosteriorModel& model, const ChainConfig& chain,
                           const ParameterState& start) {
  chain.validate();
  if (model.data().distinct_doses() < 2)
    throw IllPosedData("need at least two distinct dose levels");
  start.validate(model.config().size());
  Rng rng(chain.seed);
  return run_from(model, chain, start, rng);
}

double ParameterSelector::operator()(const ParameterState& s) const {
  switch (kind_) {
    case Kind::floor: return s.floor;
    case Kind::noise_var: return s.noise_var;
    case Kind::weight: break;
  }
  if (index_ >= s.weights.size()) throw DimensionError("weight index out of range");
  return s.weights[index_];
}

std::string ParameterSelector::name() const {
  switch (kind_) {
    case Kind::floor: return "alpha";
    case Kind::noise_var: return "sigma2";
    case Kind::weight: break;
  }
  return "a_" + std::to_string(index_ + 1);
}

Summary summarize(std::span<const double> values) {
  if (values.size() < kMinSummarySamples)
    throw InsufficientSamples("need at least " + std::to_string(kMinSummarySamples) +
                              " samples, have " + std::to_string(values.size()));
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  Summary s;
  s.mean = stats::mean(values);
  s.median = stats::quantile_sorted(sorted, 0.5);
  s.stdev = stats::stdev(values);
  s.ci_lower = stats::quantile_sorted(sorted, 0.025);
  s.ci_upper = stats::quantile_sorted(sorted, 0.975);
  return s;
}

Summary summarize(const PosteriorSamples& samples, const ParameterSelector& selector) {
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& s : samples.states) v.push_back(selector(s));
  return summarize(v);
}

}  // namespace amspline
