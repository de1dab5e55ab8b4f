#include "spde/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "spde/error.hpp"

namespace spde {

namespace {
constexpr double kPiSquared = std::numbers::pi * std::numbers::pi;
}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_survival(double z) {
  if (z <= 0.0) return 1.0;
  if (z < 1.0) {
    // theta-function form of the CDF converges fast for small z
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double m = 2.0 * k - 1.0;
      cdf += std::exp(-m * m * kPiSquared / (8.0 * z * z));
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / z;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * z * z);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_statistic(std::span<const double> sample, double mean, double variance) {
  if (!(variance > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "KS target variance must be > 0");
  }
  if (sample.empty()) throw Error(ErrorKind::kInsufficientData, "KS sample is empty");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double sd = std::sqrt(variance);
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf((sorted[i] - mean) / sd);
    const double below = static_cast<double>(i) / n;
    const double above = static_cast<double>(i + 1) / n;
    d = std::max({d, above - f, f - below});
  }
  return {d, kolmogorov_survival(std::sqrt(n) * d)};
}

Moments sample_moments(std::span<const double> sample) {
  if (sample.size() < 2) {
    throw Error(ErrorKind::kInsufficientData, "moments need at least 2 samples");
  }
  const double n = static_cast<double>(sample.size());
  const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : sample) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  Moments out;
  out.mean = mean;
  out.variance = m2 / (n - 1.0);
  m2 /= n;
  m3 /= n;
  m4 /= n;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  const bool spread = m2 > 0.0;
  out.skewness = (spread && sample.size() >= 3) ? m3 / std::pow(m2, 1.5) : nan;
  out.excess_kurtosis = (spread && sample.size() >= 4) ? m4 / (m2 * m2) - 3.0 : nan;
  return out;
}

OrderFit fit_order(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::kInvalidArgument, "fit_order: x and y lengths differ");
  }
  if (x.size() < 3) throw Error(ErrorKind::kInsufficientData, "fit_order needs >= 3 points");
  OrderFit fit;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw Error(ErrorKind::kInvalidArgument, "fit_order needs finite positive values");
    }
    fit.points.emplace_back(std::log(x[i]), std::log(y[i]));
  }
  const double n = static_cast<double>(fit.points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [lx, ly] : fit.points) {
    mx += lx;
    my += ly;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [lx, ly] : fit.points) {
    sxx += (lx - mx) * (lx - mx);
    sxy += (lx - mx) * (ly - my);
    syy += (ly - my) * (ly - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::kInvalidArgument, "fit_order: x values coincide");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy)
                            : std::numeric_limits<double>::quiet_NaN();
  return fit;
}

std::pair<double, double> chi_square_variance_band(std::size_t n, double level) {
  if (n < 2) throw Error(ErrorKind::kInsufficientData, "variance band needs n >= 2");
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "band level must lie in (0,1)");
  }
  const double dof = static_cast<double>(n - 1);
  const boost::math::chi_squared dist(dof);
  const double a = 0.5 * (1.0 - level);
  return {boost::math::quantile(dist, a) / dof, boost::math::quantile(dist, 1.0 - a) / dof};
}

}  // namespace spde
