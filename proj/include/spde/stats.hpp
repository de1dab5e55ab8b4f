#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace spde {

double normal_cdf(double x);

/// P(K > z) for the limiting Kolmogorov distribution, K = sup|B_t| of a
/// Brownian bridge.
double kolmogorov_survival(double z);

struct KsResult {
  double D = 0.0;
  double p_approx = 1.0;  // asymptotic, from sqrt(n) D; approximate
};

/// One-sample KS distance against N(mean, variance), evaluated at the jump
/// points of the empirical CDF. The target law must be fixed in advance.
KsResult ks_statistic(std::span<const double> sample, double mean, double variance);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;         // unbiased (n - 1)
  double skewness = 0.0;         // m3 / m2^{3/2}; NaN when undefined
  double excess_kurtosis = 0.0;  // m4 / m2^2 - 3; NaN when undefined
};

Moments sample_moments(std::span<const double> sample);

struct OrderFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;  // NaN when the y values are all equal
  std::vector<std::pair<double, double>> points;  // (ln x, ln y)
};

/// Least squares of ln y on ln x. Needs >= 3 points, all positive.
OrderFit fit_order(std::span<const double> x, std::span<const double> y);

/// [lower, upper] such that (n-1) s^2 / sigma^2 ~ chi^2_{n-1} lands inside
/// with probability `level`; returned as ratios s^2 / sigma^2.
std::pair<double, double> chi_square_variance_band(std::size_t n, double level);

}  // namespace spde
