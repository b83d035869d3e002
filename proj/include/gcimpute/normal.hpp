#pragma once

#include <cmath>
#include <numbers>

namespace gcimpute::normal {

inline double pdf(double x) {
  if (!std::isfinite(x)) return 0.0;
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper tail 1 - cdf(x) without cancellation.
inline double sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Inverse of cdf on (0, 1); returns -inf / +inf at the endpoints.
double quantile(double p);

/// P(X > h, Y > k) for a standard bivariate normal with correlation r.
double bivariate_upper(double h, double k, double r);

/// P(a1 <= X <= b1, a2 <= Y <= b2) for a standard bivariate normal with
/// correlation r. Infinite bounds are allowed.
double bivariate_box(double a1, double b1, double a2, double b2, double r);

}  // namespace gcimpute::normal
