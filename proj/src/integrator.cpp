#include "spde/integrator.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "spde/error.hpp"
#include "spde/parallel.hpp"

namespace spde {

std::optional<double> stability_max_tau(double K, double L_F) {
  if (!(K < kLambda1)) {
    throw Error(ErrorKind::kInadmissibleDrift,
                "zero or negative dissipativity margin: K >= pi^2");
  }
  if (L_F == 0.0) return std::nullopt;
  return (kLambda1 - K) / (4.0 * L_F * L_F);
}

void validate_scheme(const ModelSpec& model, double tau, std::size_t N) {
  if (N == 0) throw Error(ErrorKind::kInvalidDimension, "N must be >= 1");
  if (!(tau > 0.0 && tau < 0.5)) {
    throw Error(ErrorKind::kInvalidTime, "tau must lie in (0, 1/2), got " + std::to_string(tau));
  }
  validate_drift(model.drift);
  const auto meta = drift_metadata(model.drift);
  if (const auto max_tau = stability_max_tau(meta.K, meta.L_F); max_tau && tau > *max_tau) {
    throw Error(ErrorKind::kStability, "tau = " + std::to_string(tau) +
                                           " exceeds the stability bound (lambda_1 - K)/(4 L_F^2) = " +
                                           std::to_string(*max_tau));
  }
  admissibility(model.noise, model.beta);
}

Stepper::Stepper(const ModelSpec& model, std::size_t N, double tau, std::size_t grid_size)
    : tau_(tau),
      decay_(N),
      stddev_(N),
      q_(q_eigenvalues(model.noise, N)),
      drift_(model.drift, N, grid_size == 0 ? default_grid_size(N) : grid_size),
      f_(N),
      w_(N) {
  if (!(tau > 0.0)) throw Error(ErrorKind::kInvalidTime, "tau must be > 0");
  const SpectralSpace space(N);
  for (std::size_t i = 0; i < N; ++i) {
    decay_[i] = std::exp(-space.eigenvalues()[i] * tau);
    stddev_[i] = std::sqrt(q_[i] * tau);
  }
}

void Stepper::step(std::span<double> x, std::span<const double> w, std::uint64_t k) {
  const std::size_t n = decay_.size();
  if (x.size() != n || w.size() != n) {
    throw Error(ErrorKind::kDimensionMismatch, "step: dimension mismatch");
  }
  if (drift_.spec().kind == DriftKind::kZero) {
    for (std::size_t i = 0; i < n; ++i) x[i] = decay_[i] * (x[i] + w[i]);
  } else {
    drift_.apply(x, f_);
    for (std::size_t i = 0; i < n; ++i) x[i] = decay_[i] * (x[i] + tau_ * f_[i] + w[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) {
      throw DivergenceError(static_cast<long long>(k) + 1,
                            "trajectory diverged at step " + std::to_string(k + 1) +
                                " (mode " + std::to_string(i + 1) + " non-finite)");
    }
  }
}

void Stepper::step(std::span<double> x, NoiseStream& noise) {
  const std::uint64_t k = noise.step;
  sample_increment_scaled(noise, stddev_, w_);
  step(x, w_, k);
}

TrajectoryState step(const TrajectoryState& state, const SchemeParams& params,
                     const ModelSpec& model, const SpectralField& increment) {
  if (state.x.size() != params.N || increment.size() != params.N) {
    throw Error(ErrorKind::kDimensionMismatch, "step: state/increment dimension differs from N");
  }
  Stepper stepper(model, params.N, params.tau, params.grid_size);
  TrajectoryState next{state.k + 1, state.x};
  stepper.step(next.x.coeffs, increment.coeffs, state.k);
  return next;
}

ErrorEstimate summarize_squared_errors(std::vector<double> squared_errors) {
  ErrorEstimate out;
  out.replicas = squared_errors.size();
  if (squared_errors.empty()) return out;
  const double n = static_cast<double>(squared_errors.size());
  const double mean = std::accumulate(squared_errors.begin(), squared_errors.end(), 0.0) / n;
  double ss = 0.0;
  for (double e : squared_errors) ss += (e - mean) * (e - mean);
  const double se_mean = squared_errors.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  out.rms = std::sqrt(mean);
  out.stderr_rms = out.rms > 0.0 ? se_mean / (2.0 * out.rms) : 0.0;
  out.squared_errors = std::move(squared_errors);
  return out;
}

std::uint64_t horizon_steps(double horizon, double tau) {
  if (!(tau > 0.0) || !(horizon > 0.0)) {
    throw Error(ErrorKind::kInvalidTime, "horizon and tau must be positive");
  }
  const double ratio = horizon / tau;
  const double k = std::round(ratio);
  if (k < 1.0 || std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio)) {
    throw Error(ErrorKind::kInvalidTime, "horizon " + std::to_string(horizon) +
                                             " is not an integer multiple of tau " +
                                             std::to_string(tau));
  }
  return static_cast<std::uint64_t>(k);
}

ErrorEstimate coupled_temporal_error(const TemporalErrorRequest& req) {
  if (req.refinement < 4) {
    throw Error(ErrorKind::kInvalidArgument, "temporal reference needs refinement >= 4");
  }
  if (req.replicas == 0) throw Error(ErrorKind::kInvalidArgument, "replicas must be >= 1");
  const std::uint64_t coarse_steps = horizon_steps(req.horizon, req.tau);
  const double fine_tau = req.tau / static_cast<double>(req.refinement);
  const SpectralField x0 = req.x0.value_or(SpectralField(req.N));
  if (x0.size() != req.N) throw Error(ErrorKind::kDimensionMismatch, "x0 dimension differs from N");

  std::vector<double> sq(req.replicas);
  parallel_for(req.replicas, req.workers, [&](std::size_t r) {
    Stepper coarse(req.model, req.N, req.tau);
    Stepper fine(req.model, req.N, fine_tau);
    NoiseStream noise{seed_derivation(req.master_seed, r, req.stream), 0};
    std::vector<double> xc = x0.coeffs;
    std::vector<double> xf = x0.coeffs;
    std::vector<double> w(req.N);
    std::vector<double> wc(req.N);
    const auto sd = fine.increment_stddev();
    for (std::uint64_t k = 0; k < coarse_steps; ++k) {
      std::fill(wc.begin(), wc.end(), 0.0);
      for (std::size_t i = 0; i < req.refinement; ++i) {
        const std::uint64_t fk = noise.step;
        sample_increment_scaled(noise, sd, w);
        fine.step(xf, w, fk);
        for (std::size_t j = 0; j < req.N; ++j) wc[j] += w[j];
      }
      coarse.step(xc, wc, k);
    }
    double e = 0.0;
    for (std::size_t j = 0; j < req.N; ++j) e += (xc[j] - xf[j]) * (xc[j] - xf[j]);
    sq[r] = e;
  });
  return summarize_squared_errors(std::move(sq));
}

ErrorEstimate coupled_spatial_error(const SpatialErrorRequest& req) {
  if (req.N == 0) throw Error(ErrorKind::kInvalidDimension, "N must be >= 1");
  if (req.N_ref < req.N) {
    throw Error(ErrorKind::kInvalidArgument, "reference dimension N_ref must be >= N");
  }
  if (req.replicas == 0) throw Error(ErrorKind::kInvalidArgument, "replicas must be >= 1");
  const std::uint64_t steps = horizon_steps(req.horizon, req.tau);
  const SpectralField x0 = req.x0.value_or(SpectralField(req.N_ref));
  if (x0.size() != req.N_ref) {
    throw Error(ErrorKind::kDimensionMismatch, "x0 dimension differs from N_ref");
  }

  std::vector<double> sq(req.replicas);
  parallel_for(req.replicas, req.workers, [&](std::size_t r) {
    Stepper coarse(req.model, req.N, req.tau);
    Stepper ref(req.model, req.N_ref, req.tau);
    const RngKey key = seed_derivation(req.master_seed, r, req.stream);
    NoiseStream noise{key, 0};
    std::vector<double> xr = x0.coeffs;
    std::vector<double> xc(x0.coeffs.begin(), x0.coeffs.begin() + static_cast<std::ptrdiff_t>(req.N));
    std::vector<double> w(req.N_ref);
    const auto sd = ref.increment_stddev();
    for (std::uint64_t k = 0; k < steps; ++k) {
      sample_increment_scaled(noise, sd, w);
      ref.step(xr, w, k);
      // draws are addressed by mode, so the first N entries are exactly the
      // increment a dimension-N stream would have produced
      coarse.step(xc, std::span<const double>(w).first(req.N), k);
    }
    double e = 0.0;
    for (std::size_t j = 0; j < req.N_ref; ++j) {
      const double c = j < req.N ? xc[j] : 0.0;
      e += (c - xr[j]) * (c - xr[j]);
    }
    sq[r] = e;
  });
  return summarize_squared_errors(std::move(sq));
}

}  // namespace spde
