#pragma once

// Time-averaging estimator Pi = m^{-1} sum_{k=B}^{B+m-1} h(X_k), the coupling
// rules m = floor(tau^{-1-beta}), N = floor(tau^{-alpha}) with alpha in
// (1/4, 1/2), the normalized deviation tau^{-beta/2} (Pi - pi(h)), and a
// martingale/remainder split of that deviation for linear models.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spde/integrator.hpp"
#include "spde/spectral.hpp"
#include "spde/stats.hpp"
#include "spde/variance_oracle.hpp"

namespace spde {

enum class ObservableKind { kLinear, kComposed };
enum class OuterFunction { kSin, kCos, kArctan };

/// h(x) = <v, x>  or  h(x) = scale * g(gain * <v, x>).
/// v is zero-padded or truncated against x, so one observable serves every N.
struct Observable {
  ObservableKind kind = ObservableKind::kLinear;
  SpectralField direction;
  OuterFunction outer = OuterFunction::kSin;
  double gain = 1.0;
  double scale = 1.0;

  static Observable linear(SpectralField v) {
    return {ObservableKind::kLinear, std::move(v), OuterFunction::kSin, 1.0, 1.0};
  }
  static Observable composed(OuterFunction g, SpectralField v, double gain = 1.0,
                             double scale = 1.0) {
    return {ObservableKind::kComposed, std::move(v), g, gain, scale};
  }

  double projection(const SpectralField& x) const;
  double operator()(const SpectralField& x) const;
  /// scale * g(gain * u)
  double outer_value(double u) const;

  /// "linear (unbounded, outside C_b^4)" or "bounded-smooth C_b^4"
  std::string observable_class() const;
};

/// Throws kInvalidArgument unless the direction is finite and nonzero.
void validate_observable(const Observable& h);

const char* to_string(OuterFunction g);

struct CouplingParams {
  std::size_t m = 0;  // averaging length
  std::size_t N = 0;  // Galerkin dimension
  bool violation = false;  // alpha outside (1/4, 1/2) but explicitly allowed
};

/// floor(x), snapping to the nearest integer first when x is within 1e-9
/// relative of it (pow(0.02, -2) evaluates to 2499.99...).
std::size_t snapped_floor(double x);

CouplingParams coupling_params(double tau, double beta, double alpha,
                               bool allow_violation = false);

/// ceil(5 / ((lambda_1 - K) tau)): about five relaxation times.
std::size_t default_burn_in(double K, double tau);

/// Streaming fold: feed states in order; averages h over states B..B+m-1.
class TimeAverager {
 public:
  TimeAverager(const Observable& h, std::size_t burn_in, std::size_t m);

  void operator()(std::uint64_t k, const SpectralField& x);
  bool complete() const noexcept { return seen_ >= burn_in_ + m_; }
  /// Throws kInsufficientData if fewer than B+m states were observed.
  double value() const;

 private:
  const Observable* h_;
  std::size_t burn_in_;
  std::size_t m_;
  std::size_t seen_ = 0;
  double sum_ = 0.0;
};

/// Simulates B+m steps from x0 and returns the time average.
double time_average(const ModelSpec& model, const SchemeParams& params,
                    const SpectralField& x0, RngKey key, const Observable& h,
                    std::size_t burn_in, std::size_t m);

double normalized_deviation(double Pi, double pi_h, double tau, double beta);

/// pi(h) when it is known in closed form: linear drift, linear h -> 0;
/// linear drift, composed h -> E scale g(gain Z) by 64-node Gauss-Hermite with
/// Z ~ N(0, sum_j v_j^2 q_j / (2(lambda_j - c))). nullopt for nonlinear drift.
std::optional<double> analytic_ergodic_mean(const ModelSpec& model, const Observable& h);

/// Long-run estimate of pi(h) at (tau/4, 2N) for models without a closed form.
double estimate_ergodic_mean(const ModelSpec& model, const Observable& h, double tau,
                             std::size_t N, std::size_t steps, RngKey key);

struct LongRunVariance {
  BatchMeansResult batch;
  double mean = 0.0;
  std::size_t steps = 0;
};

/// sigma^2 of h along one long run of the scheme (tau, N), by batch means.
LongRunVariance long_run_variance(const ModelSpec& model, const Observable& h, double tau,
                                  std::size_t N, std::size_t steps, std::size_t burn_in,
                                  std::size_t batch_len, RngKey key);

struct CltRequest {
  ModelSpec model;
  Observable observable;
  double tau = 0.02;
  double alpha = 0.4;
  bool allow_coupling_violation = false;
  std::size_t replicas = 400;
  std::optional<std::size_t> burn_in;  // default_burn_in when unset
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
  /// Length of the independent run used for batch-means sigma^2 when no
  /// analytic variance exists.
  std::size_t variance_run_steps = 2'000'000;
  std::optional<std::size_t> batch_len;
  /// Length of the fine run estimating pi(h) for nonlinear drift.
  std::size_t ergodic_mean_run_steps = 2'000'000;
  /// Skip the sigma^2 reference (weak-LLN runs only need Pi).
  bool compute_sigma2 = true;
  /// Stream label for replica noise keys.
  std::string stream = "clt";
};

struct CltSample {
  std::size_t replicas = 0;
  std::vector<double> deviations;     // tau^{-beta/2} (Pi_r - pi_h_ref)
  std::vector<double> time_averages;  // Pi_r
  double pi_h_ref = 0.0;
  std::string pi_h_source;
  double sigma2_ref = 0.0;
  std::string sigma2_source;
  std::optional<BatchMeansResult> sigma2_batch;
  CouplingParams coupling;
  std::size_t burn_in = 0;
  double tau = 0.0;
  double beta = 0.0;
};

CltSample replicate_clt(const CltRequest& request);

struct DecompositionSample {
  std::vector<double> deviations;
  std::vector<double> martingale;
  std::vector<double> remainder;
  Moments martingale_moments;
  Moments remainder_moments;
  /// tau^beta m sum_j w_j^2 q_j (1 - e^{-2 lambda_j tau}) / (2 lambda_j)
  double martingale_variance_closed_form = 0.0;
  double sigma2_ref = 0.0;
  CouplingParams coupling;
  std::size_t burn_in = 0;
  double tau = 0.0;
};

/// Linear drift and linear observable only (kUnsupportedModel otherwise).
/// Reuses CltRequest; the variance-run fields are ignored.
DecompositionSample decomposition_diagnostic(const CltRequest& request);

}  // namespace spde
