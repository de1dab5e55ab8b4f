#pragma once

// Exponential-Euler full discretization
//
//   X_{k+1} = S^N(tau) ( X_k + tau F^N(X_k) + P^N dW_k )
//
// of dX = AX dt + F(X) dt + dW on (0,1), plus the paired-path studies used to
// measure its strong temporal and spatial orders.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spde/drift.hpp"
#include "spde/error.hpp"
#include "spde/noise.hpp"
#include "spde/spectral.hpp"

namespace spde {

struct ModelSpec {
  DriftSpec drift;
  NoiseSpec noise;
  double beta = 1.0;  // noise regularity, (0,1]
};

struct SchemeParams {
  double tau = 0.01;
  std::size_t N = 1;
  std::size_t steps = 0;
  std::size_t burn_in = 0;
  std::size_t grid_size = 0;  // 0 selects 4N-1
};

struct TrajectoryState {
  std::uint64_t k = 0;
  SpectralField x;
};

/// (lambda_1 - K) / (4 L_F^2); nullopt when L_F = 0 (no restriction).
/// Throws kInadmissibleDrift when K >= pi^2.
std::optional<double> stability_max_tau(double K, double L_F);

/// Checks tau in (0, 1/2), the stability window, N >= 1, drift dissipativity
/// and noise admissibility for model.beta. Throws on the first violation.
void validate_scheme(const ModelSpec& model, double tau, std::size_t N);

/// Precomputed per-(model, N, tau) data; applies one step in place.
class Stepper {
 public:
  Stepper(const ModelSpec& model, std::size_t N, double tau, std::size_t grid_size = 0);

  std::size_t dim() const noexcept { return decay_.size(); }
  double tau() const noexcept { return tau_; }
  std::span<const double> decay() const noexcept { return decay_; }
  /// sqrt(q_j tau), the per-mode increment standard deviation.
  std::span<const double> increment_stddev() const noexcept { return stddev_; }
  std::span<const double> q() const noexcept { return q_; }

  /// x <- S(tau)(x + tau F(x) + w). `k` is the index of the state being
  /// replaced and only appears in the divergence message.
  void step(std::span<double> x, std::span<const double> w, std::uint64_t k);

  /// Draws the increment from `noise` and steps.
  void step(std::span<double> x, NoiseStream& noise);

 private:
  double tau_;
  std::vector<double> decay_;
  std::vector<double> stddev_;
  std::vector<double> q_;
  DriftEvaluator drift_;
  std::vector<double> f_;
  std::vector<double> w_;
};

/// One step of the scheme from `state`. Validates dimensions.
TrajectoryState step(const TrajectoryState& state, const SchemeParams& params,
                     const ModelSpec& model, const SpectralField& increment);

/// Runs params.steps steps from x0 with noise stream `key`, calling
/// observe(k, x) for every state k = 0..steps (the trajectory is not stored).
/// Returns the final state.
template <class Observer>
TrajectoryState simulate(const ModelSpec& model, const SchemeParams& params,
                         const SpectralField& x0, RngKey key, Observer&& observe) {
  Stepper stepper(model, params.N, params.tau, params.grid_size);
  if (x0.size() != params.N) {
    throw Error(ErrorKind::kDimensionMismatch, "initial state dimension differs from N");
  }
  TrajectoryState state{0, x0};
  NoiseStream noise{key, 0};
  observe(state.k, std::as_const(state.x));
  for (std::size_t k = 0; k < params.steps; ++k) {
    stepper.step(state.x.coeffs, noise);
    ++state.k;
    observe(state.k, std::as_const(state.x));
  }
  return state;
}

/// Mean-square error summary over independent replicas.
struct ErrorEstimate {
  double rms = 0.0;
  double stderr_rms = 0.0;  // delta-method standard error of rms
  std::size_t replicas = 0;
  std::vector<double> squared_errors;  // per replica, index order
};

ErrorEstimate summarize_squared_errors(std::vector<double> squared_errors);

/// Number of steps of size tau covering `horizon`; throws kInvalidTime when
/// horizon is not an integer multiple of tau.
std::uint64_t horizon_steps(double horizon, double tau);

struct TemporalErrorRequest {
  ModelSpec model;
  std::size_t N = 32;
  double tau = 0.0625;
  std::size_t refinement = 16;
  double horizon = 1.0;
  std::size_t replicas = 64;
  std::uint64_t master_seed = 0;
  std::string stream = "temporal";
  std::size_t workers = 1;
  std::optional<SpectralField> x0;  // zero when unset
};

/// Coarse (tau) and fine (tau/r) chains driven by one fine noise path per
/// replica; returns the RMS of ||X_coarse(T) - X_fine(T)||.
ErrorEstimate coupled_temporal_error(const TemporalErrorRequest& request);

struct SpatialErrorRequest {
  ModelSpec model;
  std::size_t N = 8;
  std::size_t N_ref = 128;
  double tau = 1e-3;
  double horizon = 1.0;
  std::size_t replicas = 64;
  std::uint64_t master_seed = 0;
  std::string stream = "spatial";
  std::size_t workers = 1;
  std::optional<SpectralField> x0;  // in H_{N_ref}; projected for the coarse chain
};

/// Chains of dimension N and N_ref sharing the mode-major noise stream;
/// returns the RMS of ||pad(X_N(T)) - X_{N_ref}(T)||.
ErrorEstimate coupled_spatial_error(const SpatialErrorRequest& request);

}  // namespace spde
