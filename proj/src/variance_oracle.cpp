#include "spde/variance_oracle.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "spde/error.hpp"

namespace spde {

namespace {

double margin(std::size_t j, double c) {
  const double k = static_cast<double>(j + 1);
  const double d = kLambda1 * k * k - c;
  if (!(d > 0.0)) {
    throw Error(ErrorKind::kInadmissibleDrift,
                "lambda_" + std::to_string(j + 1) + " - c must be > 0");
  }
  return d;
}

}  // namespace

SpectralField linear_poisson_gradient(double c, const SpectralField& v) {
  SpectralField w(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) w[j] = -v[j] / margin(j, c);
  return w;
}

double linear_poisson_variance(double c, const NoiseSpec& noise, const SpectralField& v) {
  if (v.size() == 0) return 0.0;
  const auto q = q_eigenvalues(noise, v.size());
  const auto w = linear_poisson_gradient(c, v);
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) s += q[j] * w[j] * w[j];
  return s;
}

double integrated_autocovariance_variance(double c, const NoiseSpec& noise,
                                          const SpectralField& v) {
  if (v.size() == 0) return 0.0;
  const auto q = q_eigenvalues(noise, v.size());
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double d = margin(j, c);
    const double stationary = q[j] / (2.0 * d);
    // int_0^inf e^{-d t} dt, doubled for the two-sided Green-Kubo integral
    const double correlation_time = 2.0 / d;
    s += v[j] * v[j] * stationary * correlation_time;
  }
  return s;
}

double stationary_projection_variance(double c, const NoiseSpec& noise,
                                      const SpectralField& v) {
  if (v.size() == 0) return 0.0;
  const auto q = q_eigenvalues(noise, v.size());
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) s += v[j] * v[j] * q[j] / (2.0 * margin(j, c));
  return s;
}

double ou_mode_stationary_variance(double lambda, double q, std::optional<double> tau,
                                   double c) {
  if (!(lambda > 0.0) || !(q > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "OU mode needs lambda > 0 and q > 0");
  }
  if (!(lambda - c > 0.0)) {
    throw Error(ErrorKind::kInadmissibleDrift, "OU mode needs lambda - c > 0");
  }
  if (!tau) return q / (2.0 * (lambda - c));
  const double t = *tau;
  if (!(t > 0.0)) throw Error(ErrorKind::kInvalidTime, "tau must be > 0");
  const double a2 = std::exp(-2.0 * lambda * t);
  const double g = 1.0 + c * t;
  const double denom = c == 0.0 ? -std::expm1(-2.0 * lambda * t) : 1.0 - g * g * a2;
  if (!(denom > 0.0)) {
    throw Error(ErrorKind::kStability, "discrete OU recursion is not contractive");
  }
  return q * t * a2 / denom;
}

BatchMeans::BatchMeans(std::size_t batch_len) : batch_len_(batch_len) {
  if (batch_len == 0) throw Error(ErrorKind::kInvalidArgument, "batch length must be >= 1");
}

void BatchMeans::push(double value) {
  partial_ += value;
  if (++filled_ == batch_len_) {
    batch_means_.push_back(partial_ / static_cast<double>(batch_len_));
    partial_ = 0.0;
    filled_ = 0;
  }
}

BatchMeansResult BatchMeans::result(double tau) const {
  if (batch_means_.size() < 20) {
    throw Error(ErrorKind::kInsufficientData,
                "batch means needs >= 20 batches, have " + std::to_string(batch_means_.size()));
  }
  const double b = static_cast<double>(batch_means_.size());
  const double mean = std::accumulate(batch_means_.begin(), batch_means_.end(), 0.0) / b;
  double ss = 0.0;
  for (double m : batch_means_) ss += (m - mean) * (m - mean);
  BatchMeansResult out;
  out.batches = batch_means_.size();
  out.batch_len = batch_len_;
  out.mean = mean;
  out.sigma2 = static_cast<double>(batch_len_) * tau * ss / (b - 1.0);
  return out;
}

BatchMeansResult batch_means_variance(std::span<const double> series, double tau,
                                      std::size_t batch_len) {
  BatchMeans bm(batch_len);
  for (double x : series) bm.push(x);
  return bm.result(tau);
}

std::size_t default_batch_length(double K, double tau) {
  return static_cast<std::size_t>(std::ceil(20.0 / ((kLambda1 - K) * tau)));
}

GaussHermite gauss_hermite(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "Gauss-Hermite needs n >= 1");
  // Newton iteration on the orthonormal Hermite recurrence with the usual
  // asymptotic starting guesses; roots come in +/- pairs.
  GaussHermite rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const double pim4 = std::pow(kPi, -0.25);
  const std::size_t m = (n + 1) / 2;
  const double nd = static_cast<double>(n);
  double z = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * nd + 1.0) - 1.85575 * std::pow(2.0 * nd + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(nd, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[i - 2];
    }
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4;
      double p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / (jd + 1.0)) * p2 - std::sqrt(jd / (jd + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * nd) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes[i] = z;
    rule.nodes[n - 1 - i] = -z;
    rule.weights[i] = 2.0 / (pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

double gaussian_expectation(const std::function<double(double)>& f, double variance,
                            std::size_t nodes) {
  if (!(variance >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "variance must be >= 0");
  if (variance == 0.0) return f(0.0);
  const auto rule = gauss_hermite(nodes);
  const double scale = std::sqrt(2.0 * variance);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(scale * rule.nodes[i]);
  return s / std::sqrt(kPi);
}

}  // namespace spde
