#pragma once

#include <span>
#include <vector>

namespace amspline::stats {

double mean(std::span<const double> xs);
// Sample standard deviation (n - 1 denominator); 0 for a single value.
double stdev(std::span<const double> xs);
// Linear interpolation between order statistics (R type 7).  `sorted` must be
// ascending and nonempty.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::vector<double> xs, double p);

}  // namespace amspline::stats
