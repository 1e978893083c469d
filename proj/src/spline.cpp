#include "amspline/spline.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace amspline {

void SplineConfig::validate() const {
  if (knots.empty()) throw InvalidArgument("spline needs at least one knot");
  for (double k : knots)
    if (!std::isfinite(k)) throw InvalidArgument("knot is not finite");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i] > knots[i - 1]))
      throw InvalidArgument("knots must be strictly increasing");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw InvalidArgument("bandwidth must be positive");
}

void ParameterState::validate(std::size_t num_knots) const {
  if (weights.size() != num_knots)
    throw DimensionError("weight vector has " + std::to_string(weights.size()) +
                         " entries, expected " + std::to_string(num_knots));
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) throw DomainError("weights must sum to one");
  if (!(floor >= 0.0 && floor < 1.0)) throw DomainError("floor must lie in [0, 1)");
  if (!(noise_var > 0.0) || !std::isfinite(noise_var))
    throw DomainError("noise variance must be positive");
}

bool ParameterState::is_valid(std::size_t num_knots) const noexcept {
  try {
    validate(num_knots);
    return true;
  } catch (const Error&) {
    return false;
  }
}

double basis_value(double x, double knot, double bandwidth) {
  if (!std::isfinite(x)) throw InvalidArgument("dose is not finite");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw InvalidArgument("bandwidth must be positive");
  // 1 - Phi(z) == 0.5 * erfc(z / sqrt 2), no cancellation in the right tail.
  return 0.5 * std::erfc((x - knot) / (bandwidth * std::sqrt(2.0)));
}

double raw_spline(double x, const SplineConfig& config, std::span<const double> weights) {
  if (weights.size() != config.size())
    throw DimensionError("weight vector length does not match knot count");
  double s = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j)
    s += weights[j] * basis_value(x, config.knots[j], config.bandwidth);
  return s;
}

CurveEvaluator::CurveEvaluator(const SplineConfig& config, const ParameterState& state)
    : config_(&config), weights_(state.weights), floor_(state.floor) {
  if (state.weights.size() != config.size())
    throw DimensionError("weight vector length does not match knot count");
  if (!(floor_ >= 0.0 && floor_ < 1.0)) throw DomainError("floor must lie in [0, 1)");
  scale_at_zero_ = unnormalized(0.0);
  if (!(scale_at_zero_ > 0.0))
    throw DomainError("spline vanishes at dose 0; knots lie too far below the origin");
}

double CurveEvaluator::unnormalized(double x) const noexcept {
  const double inv = 1.0 / (config_->bandwidth * std::sqrt(2.0));
  double s = 0.0;
  for (std::size_t j = 0; j < weights_.size(); ++j)
    s += weights_[j] * (0.5 * std::erfc((x - config_->knots[j]) * inv));
  return s;
}

double CurveEvaluator::operator()(double x) const {
  if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("dose must be finite and >= 0");
  // Written as 1 - (1 - floor) * drop so that x == 0 gives exactly 1; the
  // clamp absorbs the last-ulp rounding of 1 - (1 - floor) in the far tail.
  const double ratio = std::min(1.0, unnormalized(x) / scale_at_zero_);
  const double value = 1.0 - (1.0 - floor_) * (1.0 - ratio);
  return std::max(floor_, value);
}

double curve(double x, const SplineConfig& config, const ParameterState& state) {
  return CurveEvaluator(config, state)(x);
}

double invert_curve(double target, const SplineConfig& config, const ParameterState& state,
                    double search_upper) {
  if (!std::isfinite(target) || target > 1.0)
    throw InvalidArgument("target response must be finite and <= 1");
  if (target == 1.0) return 0.0;
  const CurveEvaluator mu(config, state);
  if (target <= mu.floor()) throw NotAttained("target is at or below the curve floor");
  return bisect_decreasing(mu, target, search_upper);
}

}  // namespace amspline
