#pragma once
// Comparison models: four decreasing parametric families fitted by least
// squares, and the pool-adjacent-violators antitonic fit.
//
//   logistic     mu(x) = a + (1 - a) / (1 + exp((x - m) / s))
//   gompertz     mu(x) = a + (1 - a) * exp(-exp((x - m) / s))
//   gaussian     mu(x) = a + (1 - a) * exp(-x^2 / (2 s^2))
//   exponential  mu(x) = a + (1 - a) * exp(-x / tau)
//
// a in [0, 1), s > 0, tau > 0.  The fit adds n * (mu(0) - 1)^2 to the
// residual sum of squares so every family is anchored near 1 at the control.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "amspline/data.hpp"
#include "amspline/inference.hpp"

namespace amspline {

enum class Family { logistic, gompertz, gaussian, exponential };

std::string_view family_name(Family f);
std::optional<Family> parse_family(std::string_view name);
std::size_t family_param_count(Family f);

struct ParametricModel {
  Family family = Family::exponential;
  // logistic/gompertz: {a, m, s}; gaussian: {a, s}; exponential: {a, tau}
  std::vector<double> params;
  double residual_var = 0.0;
  bool converged = false;
  std::size_t iterations = 0;

  double operator()(double dose) const;
};

double evaluate_family(Family f, std::span<const double> params, double dose);

inline constexpr std::size_t kFitMaxIter = 20000;
inline constexpr double kFitSizeTolerance = 1e-10;
inline constexpr std::size_t kFitStallIter = 500;

// Throws IllPosedData with too few distinct doses and FitFailure (carrying
// the best parameters) when the simplex search does not converge.
ParametricModel fit_parametric(const Dataset& data, Family family);

// Same bisection contract as invert_curve; throws NotAttained.
double parametric_ed(const ParametricModel& model, double gamma, double search_upper,
                     EdConvention convention = EdConvention::reduction);

// Least-squares non-increasing fit of y (already ordered by dose).
std::vector<double> pava_antitonic(std::span<const double> y);
std::vector<double> pava_antitonic(std::span<const double> y, std::span<const double> w);

// Antitonic fit of a dataset: tied doses pooled, then weighted PAVA.  Evaluates
// as a right-continuous step function.
struct IsotonicFit {
  std::vector<double> doses;  // distinct, ascending
  std::vector<double> values;

  double operator()(double dose) const;
};

IsotonicFit fit_isotonic(const Dataset& data);

}  // namespace amspline
