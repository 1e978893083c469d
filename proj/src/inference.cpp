#include "amspline/inference.hpp"

#include <algorithm>
#include <cmath>

#include "amspline/stats.hpp"

namespace amspline {

PredictiveBand predictive_band(std::span<const ParameterState> states,
                               const SplineConfig& config, std::span<const double> grid) {
  if (states.empty()) throw InsufficientSamples("no posterior draws");
  if (grid.empty()) throw InvalidArgument("empty dose grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i]))
      throw InvalidArgument("grid doses must be finite and >= 0");
    if (i > 0 && grid[i] < grid[i - 1]) throw InvalidArgument("grid must be sorted ascending");
  }

  std::vector<CurveEvaluator> curves;
  curves.reserve(states.size());
  for (const auto& s : states) curves.emplace_back(config, s);

  PredictiveBand band;
  band.grid.assign(grid.begin(), grid.end());
  band.mean.resize(grid.size());
  band.lower.resize(grid.size());
  band.upper.resize(grid.size());
  std::vector<double> values(states.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t d = 0; d < curves.size(); ++d) values[d] = curves[d](grid[i]);
    const double m = stats::mean(values);
    std::sort(values.begin(), values.end());
    // A heavily skewed pointwise distribution can put a tail quantile on the
    // wrong side of the mean; clamp so lower <= mean <= upper always holds.
    band.mean[i] = m;
    band.lower[i] = std::min(m, stats::quantile_sorted(values, kBandLower));
    band.upper[i] = std::max(m, stats::quantile_sorted(values, kBandUpper));
  }
  return band;
}

PredictiveBand predictive_band(const PosteriorSamples& samples, const SplineConfig& config,
                               std::span<const double> grid) {
  return predictive_band(std::span<const ParameterState>(samples.states), config, grid);
}

std::vector<double> make_grid(double upper, std::size_t n) {
  if (n < 2) throw InvalidArgument("grid needs at least two points");
  if (!(upper > 0.0) || !std::isfinite(upper)) throw InvalidArgument("grid upper must be > 0");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = upper * static_cast<double>(i) / static_cast<double>(n - 1);
  g.back() = upper;
  return g;
}

std::optional<EdConvention> parse_ed_convention(std::string_view name) {
  if (name == "reduction") return EdConvention::reduction;
  if (name == "remaining") return EdConvention::remaining;
  return std::nullopt;
}

std::string_view ed_convention_name(EdConvention c) {
  return c == EdConvention::reduction ? "reduction" : "remaining";
}

double ed_target(double gamma, EdConvention convention) {
  if (!(gamma > 0.0 && gamma < 100.0)) throw InvalidArgument("gamma must lie in (0, 100)");
  return convention == EdConvention::reduction ? 1.0 - gamma / 100.0 : gamma / 100.0;
}

std::vector<double> EDResult::attained() const {
  std::vector<double> v;
  for (const auto& s : samples)
    if (s) v.push_back(*s);
  return v;
}

EDResult ed_distribution(std::span<const ParameterState> states, const SplineConfig& config,
                         double gamma, double search_upper, EdConvention convention) {
  const double target = ed_target(gamma, convention);
  if (states.empty()) throw InsufficientSamples("no posterior draws");
  EDResult r;
  r.gamma = gamma;
  r.samples.reserve(states.size());
  for (const auto& s : states) {
    try {
      r.samples.emplace_back(invert_curve(target, config, s, search_upper));
    } catch (const NotAttained&) {
      r.samples.emplace_back(std::nullopt);
    }
  }
  auto doses = r.attained();
  r.attained_fraction = static_cast<double>(doses.size()) / static_cast<double>(states.size());
  r.determinable = r.attained_fraction >= kMinAttainedFraction;
  if (!doses.empty()) {
    std::sort(doses.begin(), doses.end());
    r.point = stats::quantile_sorted(doses, 0.5);
    r.bmdl = stats::quantile_sorted(doses, kBmdlQuantile);
    r.lower = r.bmdl;
    r.upper = stats::quantile_sorted(doses, kEdIntervalUpper);
  }
  return r;
}

EDResult ed_distribution(const PosteriorSamples& samples, const SplineConfig& config,
                         double gamma, double search_upper, EdConvention convention) {
  return ed_distribution(std::span<const ParameterState>(samples.states), config, gamma,
                         search_upper, convention);
}

std::vector<EDResult> ed_table(const PosteriorSamples& samples, const SplineConfig& config,
                               std::span<const double> gammas, double search_upper,
                               EdConvention convention) {
  std::vector<EDResult> out;
  out.reserve(gammas.size());
  for (double g : gammas)
    out.push_back(ed_distribution(samples, config, g, search_upper, convention));
  return out;
}

}  // namespace amspline
