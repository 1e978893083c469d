#include "amspline/prior.hpp"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace amspline {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sigmoid(u)) without overflow.
double log_sigmoid(double u) {
  return u >= 0.0 ? -std::log1p(std::exp(-u)) : u - std::log1p(std::exp(u));
}

}  // namespace

void PriorSpec::validate() const {
  if (!(stick.concentration > 0.0) || !std::isfinite(stick.concentration))
    throw InvalidArgument("stick-breaking concentration must be positive");
  if (stick.num_sticks < 1) throw InvalidArgument("need at least one stick");
  if (!std::isfinite(floor_mean)) throw InvalidArgument("floor prior mean must be finite");
  if (!(floor_sd > 0.0) || !std::isfinite(floor_sd))
    throw InvalidArgument("floor prior sd must be positive");
  if (!(noise_df > 0.0) || !std::isfinite(noise_df))
    throw InvalidArgument("noise prior degrees of freedom must be positive");
}

std::vector<double> stick_break(std::span<const double> fractions) {
  std::vector<double> weights;
  weights.reserve(fractions.size() + 1);
  double remaining = 1.0;
  for (double z : fractions) {
    if (!(z > 0.0 && z < 1.0)) throw DomainError("stick fraction must lie in (0, 1)");
    weights.push_back(z * remaining);
    remaining *= 1.0 - z;
  }
  weights.push_back(remaining);
  return weights;
}

std::vector<double> stick_break_logit(std::span<const double> logits) {
  std::vector<double> weights;
  weights.reserve(logits.size() + 1);
  double log_remaining = 0.0;
  for (double u : logits) {
    if (!std::isfinite(u)) throw DomainError("stick logit must be finite");
    weights.push_back(std::exp(log_remaining + log_sigmoid(u)));
    log_remaining += log_sigmoid(-u);
  }
  weights.push_back(std::exp(log_remaining));
  return weights;
}

std::vector<double> unstick(std::span<const double> weights, ZeroWeightPolicy policy) {
  if (weights.empty()) throw DimensionError("empty weight vector");
  std::vector<double> a(weights.begin(), weights.end());
  bool has_zero = false;
  for (double w : a) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("weights must be non-negative");
    if (w == 0.0) has_zero = true;
  }
  if (has_zero) {
    if (policy == ZeroWeightPolicy::reject)
      throw DegenerateWeight("zero weight has no stick-breaking preimage");
    double sum = 0.0;
    for (double& w : a) {
      if (w == 0.0) w = kZeroWeightNudge;
      sum += w;
    }
    for (double& w : a) w /= sum;
  }
  // Tail sums instead of 1 - prefix to avoid cancellation near the end.
  std::vector<double> fractions(a.size() - 1);
  double tail = 0.0;
  std::vector<double> tails(a.size());
  for (std::size_t k = a.size(); k-- > 0;) {
    tail += a[k];
    tails[k] = tail;
  }
  for (std::size_t k = 0; k + 1 < a.size(); ++k) fractions[k] = a[k] / tails[k];
  return fractions;
}

double log_weight_prior(std::span<const double> weights, double concentration) {
  if (weights.empty()) return kNegInf;
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) return kNegInf;
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) return kNegInf;
  if (weights.size() == 1) return 0.0;

  const auto z = unstick(weights, ZeroWeightPolicy::nudge);
  // Beta(1, c) density of each fraction, then |dZ/da| = 1 / prod_k r_k with
  // r_k the stick length left before break k.
  double lp = 0.0;
  double log_remaining = 0.0;
  for (double zk : z) {
    lp += std::log(concentration) + (concentration - 1.0) * std::log1p(-zk);
    lp -= log_remaining;
    log_remaining += std::log1p(-zk);
  }
  return lp;
}

double log_floor_prior(double floor, double mean, double sd) {
  if (!(floor >= 0.0 && floor < 1.0)) return kNegInf;
  const double z = (floor - mean) / sd;
  const double mass = normal_cdf((1.0 - mean) / sd) - normal_cdf(-mean / sd);
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(sd) -
         std::log(mass);
}

double log_noise_prior(double noise_var, double df) {
  if (!(noise_var > 0.0) || !std::isfinite(noise_var)) return kNegInf;
  const double sigma = std::sqrt(noise_var);
  const double half = 0.5 * df;
  const double log_chi2 = (half - 1.0) * std::log(sigma) - 0.5 * sigma -
                          half * std::log(2.0) - std::lgamma(half);
  // d sigma / d sigma^2 = 1 / (2 sigma)
  return log_chi2 - std::log(2.0 * sigma);
}

double log_prior(const ParameterState& state, const PriorSpec& spec) {
  const double lw = log_weight_prior(state.weights, spec.stick.concentration);
  if (lw == kNegInf) return kNegInf;
  const double lf = log_floor_prior(state.floor, spec.floor_mean, spec.floor_sd);
  if (lf == kNegInf) return kNegInf;
  const double ln = log_noise_prior(state.noise_var, spec.noise_df);
  if (ln == kNegInf) return kNegInf;
  return lw + lf + ln;
}

ParameterState sample_prior(const PriorSpec& spec, Rng& rng) {
  spec.validate();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t k = spec.stick.num_sticks;

  std::vector<double> fractions;
  fractions.reserve(k - 1);
  while (fractions.size() + 1 < k) {
    // Inverse CDF of Beta(1, c): Z = 1 - U^(1/c).
    const double u = unif(rng);
    const double z = -std::expm1(std::log(u) / spec.stick.concentration);
    if (z > 0.0 && z < 1.0) fractions.push_back(z);
  }

  ParameterState state;
  state.weights = stick_break(fractions);

  const double lo = normal_cdf(-spec.floor_mean / spec.floor_sd);
  const double hi = normal_cdf((1.0 - spec.floor_mean) / spec.floor_sd);
  for (;;) {
    const double p = lo + (hi - lo) * unif(rng);
    const double f = spec.floor_mean + spec.floor_sd * gsl_cdf_ugaussian_Pinv(p);
    if (f >= 0.0 && f < 1.0) {
      state.floor = f;
      break;
    }
  }

  std::chi_squared_distribution<double> chi2(spec.noise_df);
  double sigma = 0.0;
  while (!(sigma > 0.0)) sigma = chi2(rng);
  state.noise_var = sigma * sigma;
  return state;
}

}  // namespace amspline
