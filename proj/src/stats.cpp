#include "fsb/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fsb/error.hpp"

namespace fsb {

namespace {

// Continued fraction for I_x(a, b) (modified Lentz), valid for
// x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 1'000'000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;
}

// Upper-tail probability P(T > x) for x >= 0.
double t_upper_tail(double x, double df) {
  const double x2 = x * x;
  const double w = df / (df + x2);
  const double one_minus_w = x2 / (df + x2);
  return 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, w, one_minus_w);
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x, double one_minus_x) {
  if (x <= 0.0) return 0.0;
  if (one_minus_x <= 0.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log(one_minus_x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, one_minus_x) / b;
}

double t_cdf(double x, double df) {
  if (std::isnan(x)) return x;
  const double tail = t_upper_tail(std::fabs(x), df);
  return x >= 0.0 ? 1.0 - tail : tail;
}

double t_quantile(std::int64_t df, double p) {
  if (df < 1) throw DomainError("degrees of freedom must be at least 1, got " + std::to_string(df));
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("probability must lie in (0, 1), got " + std::to_string(p));
  if (p == 0.5) return 0.0;
  const double nu = static_cast<double>(df);
  // Solve P(T > x) = tail for x > 0, then mirror for the lower half.
  const double tail = p > 0.5 ? 1.0 - p : p;
  double lo = 0.0;
  double hi = 1.0;
  while (t_upper_tail(hi, nu) > tail) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw DomainError("t quantile does not fit in a double");
  }
  for (int i = 0; i < 400 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (t_upper_tail(mid, nu) > tail)
      lo = mid;
    else
      hi = mid;
  }
  const double x = 0.5 * (lo + hi);
  return p > 0.5 ? x : -x;
}

ConfidenceInterval mean_confidence_interval(std::span<const double> values, double level) {
  if (values.size() < 2)
    throw InsufficientDataError("a confidence interval needs at least 2 values, got " +
                                std::to_string(values.size()));
  if (!(level > 0.0 && level < 1.0))
    throw DomainError("confidence level must lie in (0, 1)");
  const auto n = static_cast<double>(values.size());
  // Deviations are taken from the first value so equal inputs give exactly
  // zero spread and the mean is not perturbed by a large common offset.
  const double shift = values.front();
  double sum = 0.0;
  for (double v : values) sum += v - shift;
  const double offset = sum / n;
  const double mean = shift + offset;
  double ss = 0.0;
  for (double v : values) ss += (v - shift - offset) * (v - shift - offset);
  const double stddev = std::sqrt(ss / (n - 1.0));
  const double t = t_quantile(static_cast<std::int64_t>(values.size()) - 1, 0.5 * (1.0 + level));
  return {mean, t * stddev / std::sqrt(n), level, static_cast<std::int64_t>(values.size()), stddev};
}

}  // namespace fsb
