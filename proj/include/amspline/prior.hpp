#pragma once
// Joint prior over (weights, floor, noise variance).
//
// Weights: finite stick-breaking with Z_k ~ Beta(1, concentration), the
// leftover stick assigned to the last knot.  Floor: normal truncated to
// [0, 1).  Noise: chi-square on sigma (not sigma^2).

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "amspline/spline.hpp"

namespace amspline {

using Rng = std::mt19937_64;

struct StickBreakingPrior {
  double concentration = 1.0;  // second Beta parameter
  std::size_t num_sticks = 1;  // == number of knots
};

struct PriorSpec {
  StickBreakingPrior stick;
  double floor_mean = 0.1;
  double floor_sd = 0.5;
  double noise_df = 2.0;

  void validate() const;
};

// Fractions Z_1..Z_{K-1} in (0,1) -> weights a_1..a_K on the simplex.
std::vector<double> stick_break(std::span<const double> fractions);

// Same map parameterized by logit(Z); keeps precision when Z is close to 1.
std::vector<double> stick_break_logit(std::span<const double> logits);

enum class ZeroWeightPolicy {
  reject,  // throw DegenerateWeight
  nudge,   // add 1e-12 to every zero weight and renormalize
};

inline constexpr double kZeroWeightNudge = 1e-12;

// Inverse of stick_break: Z_k = a_k / (a_k + ... + a_K).
std::vector<double> unstick(std::span<const double> weights,
                            ZeroWeightPolicy policy = ZeroWeightPolicy::reject);

double log_weight_prior(std::span<const double> weights, double concentration);
double log_floor_prior(double floor, double mean, double sd);
double log_noise_prior(double noise_var, double df);

// Sum of the three block densities; -inf off the support.
double log_prior(const ParameterState& state, const PriorSpec& spec);

ParameterState sample_prior(const PriorSpec& spec, Rng& rng);

}  // namespace amspline
