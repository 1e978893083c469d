#pragma once
// Monotone-decreasing spline built from complements of normal CDFs.
//
//   S(x)  = sum_j a_j * (1 - Phi((x - k_j) / lambda))
//   mu(x) = floor + (1 - floor) * S(x) / S(0)
//
// so that mu(0) == 1 and mu(x) > floor for every dose.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "amspline/error.hpp"

namespace amspline {

struct SplineConfig {
  std::vector<double> knots;  // strictly increasing, dose units
  double bandwidth = 1.0;     // shared normal-CDF scale

  std::size_t size() const noexcept { return knots.size(); }
  // Throws InvalidArgument when the invariants do not hold.
  void validate() const;
};

struct ParameterState {
  std::vector<double> weights;  // simplex, one per knot
  double floor = 0.0;           // lower support, [0, 1)
  double noise_var = 1.0;       // sigma^2 > 0

  // Throws DimensionError / DomainError.
  void validate(std::size_t num_knots) const;
  bool is_valid(std::size_t num_knots) const noexcept;
};

inline constexpr double kSimplexTolerance = 1e-12;

// Standard normal CDF via erfc, accurate in both tails.
inline double normal_cdf(double z) noexcept {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// 1 - Phi((x - knot) / bandwidth).
double basis_value(double x, double knot, double bandwidth);

double raw_spline(double x, const SplineConfig& config,
                  std::span<const double> weights);

// Evaluates mu(x) for one (config, state) pair with S(0) cached.
class CurveEvaluator {
 public:
  CurveEvaluator(const SplineConfig& config, const ParameterState& state);

  double operator()(double x) const;
  double floor() const noexcept { return floor_; }

 private:
  double unnormalized(double x) const noexcept;

  const SplineConfig* config_;
  std::span<const double> weights_;
  double floor_;
  double scale_at_zero_;
};

double curve(double x, const SplineConfig& config, const ParameterState& state);

// Dose d in [0, search_upper] with curve(d) == target.
double invert_curve(double target, const SplineConfig& config,
                    const ParameterState& state, double search_upper);

inline constexpr int kBisectionMaxIter = 200;
inline constexpr double kInversionTolerance = 1e-9;

// Root of a non-increasing f on [0, upper] at level target.  Shared by the
// spline and the parametric baselines so every ED uses the same contract.
// Requires f(0) >= target > f(upper); throws NotAttained otherwise.
template <class F>
double bisect_decreasing(F&& f, double target, double upper) {
  if (!std::isfinite(target)) throw InvalidArgument("bisection target is not finite");
  if (!(upper > 0.0) || !std::isfinite(upper))
    throw InvalidArgument("search upper bound must be positive and finite");
  const double f_hi = f(upper);
  if (f_hi >= target) throw NotAttained("curve does not reach target within [0, upper]");
  double lo = 0.0;
  double hi = upper;
  double f_lo = f(lo);
  if (f_lo <= target) {
    if (std::abs(f_lo - target) <= kInversionTolerance) return 0.0;
    throw NotAttained("curve is already below target at dose 0");
  }
  double flo = f_lo;
  double fhi = f_hi;
  for (int it = 0; it < kBisectionMaxIter; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm >= target) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  const double err_lo = std::abs(flo - target);
  const double err_hi = std::abs(fhi - target);
  const double best = err_lo <= err_hi ? lo : hi;
  const double err = std::min(err_lo, err_hi);
  if (err > kInversionTolerance)
    throw ToleranceError("bisection did not reach tolerance");
  return best;
}

}  // namespace amspline
