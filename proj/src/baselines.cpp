#include "amspline/baselines.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>

namespace amspline {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::logistic: return "logistic";
    case Family::gompertz: return "gompertz";
    case Family::gaussian: return "gaussian";
    case Family::exponential: return "exponential";
  }
  return "unknown";
}

std::optional<Family> parse_family(std::string_view name) {
  for (Family f : {Family::logistic, Family::gompertz, Family::gaussian, Family::exponential})
    if (family_name(f) == name) return f;
  return std::nullopt;
}

std::size_t family_param_count(Family f) {
  return (f == Family::logistic || f == Family::gompertz) ? 3 : 2;
}

double evaluate_family(Family f, std::span<const double> p, double x) {
  if (p.size() != family_param_count(f)) throw DimensionError("wrong parameter count for family");
  const double a = p[0];
  switch (f) {
    case Family::logistic:
      return a + (1.0 - a) / (1.0 + std::exp((x - p[1]) / p[2]));
    case Family::gompertz:
      return a + (1.0 - a) * std::exp(-std::exp((x - p[1]) / p[2]));
    case Family::gaussian:
      return a + (1.0 - a) * std::exp(-x * x / (2.0 * p[1] * p[1]));
    case Family::exponential:
      return a + (1.0 - a) * std::exp(-x / p[1]);
  }
  return 0.0;
}

double ParametricModel::operator()(double dose) const {
  return evaluate_family(family, params, dose);
}

namespace {

// Unconstrained search coordinates: a = r^2 / (1 + r^2), scales as logs.
std::vector<double> to_natural(Family f, const gsl_vector* raw) {
  const double r = gsl_vector_get(raw, 0);
  std::vector<double> p{r * r / (1.0 + r * r)};
  if (f == Family::logistic || f == Family::gompertz) {
    p.push_back(gsl_vector_get(raw, 1));
    p.push_back(std::exp(gsl_vector_get(raw, 2)));
  } else {
    p.push_back(std::exp(gsl_vector_get(raw, 1)));
  }
  return p;
}

struct Objective {
  const Dataset* data;
  Family family;
};

double sse(const Dataset& data, Family f, std::span<const double> p) {
  double s = 0.0;
  for (const auto& o : data.observations) {
    const double r = o.response - evaluate_family(f, p, o.dose);
    s += r * r;
  }
  return s;
}

double penalized_objective(const gsl_vector* raw, void* ctx) {
  const auto* obj = static_cast<const Objective*>(ctx);
  const auto p = to_natural(obj->family, raw);
  const double s = sse(*obj->data, obj->family, p);
  const double anchor = evaluate_family(obj->family, p, 0.0) - 1.0;
  const double v = s + static_cast<double>(obj->data->size()) * anchor * anchor;
  return std::isfinite(v) ? v : GSL_POSINF;
}

struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
using MinimizerPtr = std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter>;
using VectorPtr = std::unique_ptr<gsl_vector, VectorDeleter>;

VectorPtr make_vector(const std::vector<double>& v) {
  VectorPtr out(gsl_vector_alloc(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) gsl_vector_set(out.get(), i, v[i]);
  return out;
}

std::vector<double> starting_point(const Dataset& data, Family f, std::vector<double>& steps) {
  double y_min = data.observations.front().response;
  double y_max = y_min;
  double x_min = data.observations.front().dose;
  double x_max = x_min;
  for (const auto& o : data.observations) {
    y_min = std::min(y_min, o.response);
    y_max = std::max(y_max, o.response);
    x_min = std::min(x_min, o.dose);
    x_max = std::max(x_max, o.dose);
  }
  const double range = std::max(x_max - x_min, 1e-6);
  auto dose_nearest = [&](double level) {
    const Observation* best = &data.observations.front();
    for (const auto& o : data.observations)
      if (std::abs(o.response - level) < std::abs(best->response - level)) best = &o;
    return best->dose;
  };
  const double a0 = std::clamp(y_min, 0.0, 0.95);
  std::vector<double> raw{std::sqrt(a0 / (1.0 - a0))};
  steps = {0.3};
  switch (f) {
    case Family::logistic:
    case Family::gompertz:
      raw.push_back(dose_nearest(0.5 * (y_min + y_max)));
      raw.push_back(std::log(range / 4.0));
      steps.push_back(range / 10.0);
      steps.push_back(0.5);
      break;
    case Family::gaussian:
      raw.push_back(std::log(range / 4.0));
      steps.push_back(0.5);
      break;
    case Family::exponential:
      raw.push_back(std::log(std::max(dose_nearest(std::exp(-1.0)), range / 100.0)));
      steps.push_back(0.5);
      break;
  }
  return raw;
}

}  // namespace

ParametricModel fit_parametric(const Dataset& data, Family family) {
  const std::size_t p = family_param_count(family);
  if (data.distinct_doses() < p + 1)
    throw IllPosedData(std::string(family_name(family)) + " fit needs at least " +
                       std::to_string(p + 1) + " distinct doses");

  Objective obj{&data, family};
  gsl_multimin_function fn{&penalized_objective, p, &obj};
  std::vector<double> steps;
  std::vector<double> start = starting_point(data, family, steps);

  MinimizerPtr minimizer(gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, p));
  ParametricModel model;
  model.family = family;
  std::size_t iter = 0;
  bool converged = false;
  // Restart from the best vertex with fresh steps; converged once two
  // consecutive runs end at the same objective value.
  double previous = GSL_POSINF;
  for (int restart = 0; restart < 5 && iter < kFitMaxIter; ++restart) {
    VectorPtr x = make_vector(start);
    VectorPtr ss = make_vector(steps);
    gsl_multimin_fminimizer_set(minimizer.get(), &fn, x.get(), ss.get());
    bool run_converged = false;
    double best_f = GSL_POSINF;
    std::size_t unchanged = 0;
    while (iter < kFitMaxIter) {
      ++iter;
      if (gsl_multimin_fminimizer_iterate(minimizer.get()) != GSL_SUCCESS) break;
      const double size = gsl_multimin_fminimizer_size(minimizer.get());
      if (gsl_multimin_test_size(size, kFitSizeTolerance) == GSL_SUCCESS) {
        run_converged = true;
        break;
      }
      // An exactly flat objective keeps the simplex from shrinking further.
      unchanged = minimizer->fval == best_f ? unchanged + 1 : 0;
      best_f = minimizer->fval;
      if (unchanged >= kFitStallIter) {
        run_converged = true;
        break;
      }
    }
    const gsl_vector* best = gsl_multimin_fminimizer_x(minimizer.get());
    for (std::size_t i = 0; i < p; ++i) start[i] = gsl_vector_get(best, i);
    const double value = minimizer->fval;
    if (run_converged && std::abs(previous - value) <= 1e-12 * (1.0 + std::abs(value))) {
      converged = true;
      break;
    }
    previous = value;
  }

  VectorPtr best = make_vector(start);
  model.params = to_natural(family, best.get());
  model.iterations = iter;
  model.converged = converged;
  const double n = static_cast<double>(data.size());
  model.residual_var = sse(data, family, model.params) / (n - static_cast<double>(p));
  if (!converged)
    throw FitFailure(std::string(family_name(family)) + " fit did not converge", model.params);
  return model;
}

double parametric_ed(const ParametricModel& model, double gamma, double search_upper,
                     EdConvention convention) {
  const double target = ed_target(gamma, convention);
  return bisect_decreasing(model, target, search_upper);
}

std::vector<double> pava_antitonic(std::span<const double> y, std::span<const double> w) {
  if (y.size() != w.size()) throw DimensionError("weights and responses differ in length");
  struct Pool {
    double sum;     // sum of w * y
    double weight;  // sum of w
    std::size_t count;
    double mean() const { return sum / weight; }
  };
  std::vector<Pool> pools;
  pools.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(w[i] > 0.0)) throw InvalidArgument("PAVA weights must be positive");
    pools.push_back({w[i] * y[i], w[i], 1});
    // A later pool above an earlier one violates the non-increasing order.
    while (pools.size() > 1 && pools[pools.size() - 2].mean() < pools.back().mean()) {
      Pool last = pools.back();
      pools.pop_back();
      pools.back().sum += last.sum;
      pools.back().weight += last.weight;
      pools.back().count += last.count;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& p : pools) out.insert(out.end(), p.count, p.mean());
  return out;
}

std::vector<double> pava_antitonic(std::span<const double> y) {
  const std::vector<double> ones(y.size(), 1.0);
  return pava_antitonic(y, ones);
}

double IsotonicFit::operator()(double dose) const {
  if (doses.empty()) throw EmptyDataset("empty isotonic fit");
  const auto it = std::upper_bound(doses.begin(), doses.end(), dose);
  if (it == doses.begin()) return values.front();
  return values[static_cast<std::size_t>(it - doses.begin()) - 1];
}

IsotonicFit fit_isotonic(const Dataset& data) {
  if (data.empty()) throw EmptyDataset("dataset has no observations");
  std::map<double, std::pair<double, double>> by_dose;  // dose -> (sum, count)
  for (const auto& o : data.observations) {
    auto& [sum, count] = by_dose[o.dose];
    sum += o.response;
    count += 1.0;
  }
  IsotonicFit fit;
  std::vector<double> means;
  std::vector<double> counts;
  for (const auto& [dose, sc] : by_dose) {
    fit.doses.push_back(dose);
    means.push_back(sc.first / sc.second);
    counts.push_back(sc.second);
  }
  fit.values = pava_antitonic(means, counts);
  return fit;
}

}  // namespace amspline
