#pragma once
// Posterior summaries of the fitted curve: pointwise bands, the effective
// dose distribution and its BMDL.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "amspline/sampler.hpp"
#include "amspline/spline.hpp"

namespace amspline {

struct PredictiveBand {
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> lower;  // 0.025 quantile of mu(x) across draws
  std::vector<double> upper;  // 0.975 quantile
};

inline constexpr double kBandLower = 0.025;
inline constexpr double kBandUpper = 0.975;

// Bands are quantiles of the mean curve of each draw, not of noisy replicates.
PredictiveBand predictive_band(std::span<const ParameterState> states,
                               const SplineConfig& config, std::span<const double> grid);
PredictiveBand predictive_band(const PosteriorSamples& samples, const SplineConfig& config,
                               std::span<const double> grid);

// n evenly spaced doses from 0 to upper inclusive.
std::vector<double> make_grid(double upper, std::size_t n);

// reduction: ED_g is where the curve has lost g percent (crosses 1 - g/100).
// remaining: ED_g is where g percent of the response remains (crosses g/100).
enum class EdConvention { reduction, remaining };

std::optional<EdConvention> parse_ed_convention(std::string_view name);
std::string_view ed_convention_name(EdConvention c);

// Curve level the ED solves for; throws InvalidArgument unless 0 < gamma < 100.
double ed_target(double gamma, EdConvention convention);

inline constexpr double kBmdlQuantile = 0.05;
inline constexpr double kEdIntervalUpper = 0.95;
inline constexpr double kMinAttainedFraction = 0.5;

struct EDResult {
  double gamma = 50.0;
  std::vector<std::optional<double>> samples;  // empty where not attained
  // Statistics over attained draws; unset when no draw attains the target.
  std::optional<double> point;  // median
  std::optional<double> bmdl;   // 0.05 quantile
  std::optional<double> lower;  // 0.05 quantile
  std::optional<double> upper;  // 0.95 quantile
  double attained_fraction = 0.0;
  // False when fewer than half the draws reach the target.
  bool determinable = false;

  std::vector<double> attained() const;
};

EDResult ed_distribution(std::span<const ParameterState> states, const SplineConfig& config,
                         double gamma, double search_upper,
                         EdConvention convention = EdConvention::reduction);
EDResult ed_distribution(const PosteriorSamples& samples, const SplineConfig& config,
                         double gamma, double search_upper,
                         EdConvention convention = EdConvention::reduction);

std::vector<EDResult> ed_table(const PosteriorSamples& samples, const SplineConfig& config,
                               std::span<const double> gammas, double search_upper,
                               EdConvention convention = EdConvention::reduction);

}  // namespace amspline
