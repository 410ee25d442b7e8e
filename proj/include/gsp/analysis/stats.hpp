#pragma once

#include <span>

namespace gsp::analysis {

struct PearsonResult {
  double r = 0.0;
  int df = 0;
  double p = 1.0;  // two-sided
};

/// Product-moment correlation with a t-test p-value. Throws
/// Error(undefined_correlation) for fewer than 3 points or zero variance.
PearsonResult pearson(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1).
double stddev(std::span<const double> x);

}  // namespace gsp::analysis
