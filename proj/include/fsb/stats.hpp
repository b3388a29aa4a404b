#pragma once

#include <cstdint>
#include <span>

namespace fsb {

inline constexpr double kDefaultConfidence = 0.95;

struct ConfidenceInterval {
  double mean = 0.0;
  double half_width = 0.0;
  double level = kDefaultConfidence;
  std::int64_t n = 0;
  double stddev = 0.0;  // sample standard deviation, n - 1 denominator
};

/// Regularized incomplete beta I_x(a, b). `one_minus_x` must equal 1 - x; it
/// is taken separately so callers can supply it without cancellation.
double regularized_incomplete_beta(double a, double b, double x, double one_minus_x);

/// Student-t CDF with `df` degrees of freedom.
double t_cdf(double x, double df);

/// Inverse Student-t CDF: x with t_cdf(x, df) == p, absolute error <= 1e-9.
/// Throws DomainError unless df >= 1 and 0 < p < 1.
double t_quantile(std::int64_t df, double p);

/// mean +- t_{n-1,(1+level)/2} * s / sqrt(n). Needs at least two values.
ConfidenceInterval mean_confidence_interval(std::span<const double> values,
                                            double level = kDefaultConfidence);

}  // namespace fsb
