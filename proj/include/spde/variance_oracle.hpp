#pragma once

// Reference values for ergodic limits and CLT variances.
//
// For F = c Id and h = <v, .> the Poisson equation L phi = h - pi(h) has the
// linear solution phi = <w, .> with w_j = -v_j / (lambda_j - c), so the CLT
// variance pi(||Q^{1/2} D phi||^2) is sum_j q_j v_j^2 / (lambda_j - c)^2.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "spde/noise.hpp"
#include "spde/spectral.hpp"

namespace spde {

/// D phi for the linear model; throws kInadmissibleDrift if lambda_j <= c.
SpectralField linear_poisson_gradient(double c, const SpectralField& v);

/// sum_j q_j v_j^2 / (lambda_j - c)^2 over the support of v.
double linear_poisson_variance(double c, const NoiseSpec& noise, const SpectralField& v);

/// The same limit computed as 2 int_0^inf Cov(h(X_0), h(X_t)) dt, i.e.
/// stationary variance times integrated autocorrelation, mode by mode.
double integrated_autocovariance_variance(double c, const NoiseSpec& noise,
                                          const SpectralField& v);

/// Variance of <v, X> under the continuous invariant law,
/// sum_j v_j^2 q_j / (2 (lambda_j - c)).
double stationary_projection_variance(double c, const NoiseSpec& noise,
                                      const SpectralField& v);

/// Stationary variance of one mode. Without tau: q / (2 (lambda - c)).
/// With tau: the law of x' = e^{-lambda tau}((1 + c tau) x + w), Var w = q tau,
/// i.e. q tau e^{-2 lambda tau} / (1 - (1 + c tau)^2 e^{-2 lambda tau}).
double ou_mode_stationary_variance(double lambda, double q, std::optional<double> tau,
                                   double c = 0.0);

struct BatchMeansResult {
  double sigma2 = 0.0;  // asymptotic variance in time units
  std::size_t batches = 0;
  std::size_t batch_len = 0;
  double mean = 0.0;  // mean of the batched part of the series
};

/// Streaming batch-means accumulator; values past the last full batch are
/// ignored by result().
class BatchMeans {
 public:
  explicit BatchMeans(std::size_t batch_len);

  void push(double value);
  std::size_t batches() const noexcept { return batch_means_.size(); }
  /// sigma^2 = (L tau) * sample variance of batch means; needs >= 20 batches.
  BatchMeansResult result(double tau) const;

 private:
  std::size_t batch_len_;
  std::size_t filled_ = 0;
  double partial_ = 0.0;
  std::vector<double> batch_means_;
};

BatchMeansResult batch_means_variance(std::span<const double> series, double tau,
                                      std::size_t batch_len);

/// ceil(20 / ((lambda_1 - K) tau)): twenty relaxation times.
std::size_t default_batch_length(double K, double tau);

struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;  // for weight e^{-x^2}
};

/// n-point Gauss-Hermite rule (physicists' weight).
GaussHermite gauss_hermite(std::size_t n);

/// E f(Z), Z ~ N(0, variance), by Gauss-Hermite quadrature.
double gaussian_expectation(const std::function<double(double)>& f, double variance,
                            std::size_t nodes = 64);

}  // namespace spde
