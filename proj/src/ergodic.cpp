#include "spde/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spde/error.hpp"
#include "spde/parallel.hpp"
#include "spde/variance_oracle.hpp"

namespace spde {

double Observable::projection(const SpectralField& x) const {
  const std::size_t n = std::min(direction.size(), x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += direction[i] * x[i];
  return s;
}

double Observable::outer_value(double u) const {
  const double z = gain * u;
  switch (outer) {
    case OuterFunction::kSin: return scale * std::sin(z);
    case OuterFunction::kCos: return scale * std::cos(z);
    case OuterFunction::kArctan: return scale * std::atan(z);
  }
  return 0.0;
}

double Observable::operator()(const SpectralField& x) const {
  const double u = projection(x);
  return kind == ObservableKind::kLinear ? u : outer_value(u);
}

std::string Observable::observable_class() const {
  return kind == ObservableKind::kLinear ? "linear (unbounded, outside C_b^4)"
                                         : "bounded-smooth C_b^4";
}

const char* to_string(OuterFunction g) {
  switch (g) {
    case OuterFunction::kSin: return "sin";
    case OuterFunction::kCos: return "cos";
    case OuterFunction::kArctan: return "arctan";
  }
  return "?";
}

void validate_observable(const Observable& h) {
  bool nonzero = false;
  for (double c : h.direction.coeffs) {
    if (!std::isfinite(c)) throw Error(ErrorKind::kInvalidArgument, "observable direction must be finite");
    nonzero = nonzero || c != 0.0;
  }
  if (!nonzero) throw Error(ErrorKind::kInvalidArgument, "observable direction must be nonzero");
  if (!std::isfinite(h.gain) || !std::isfinite(h.scale)) {
    throw Error(ErrorKind::kInvalidArgument, "observable gain/scale must be finite");
  }
}

std::size_t snapped_floor(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::floor(x));
}

CouplingParams coupling_params(double tau, double beta, double alpha, bool allow_violation) {
  if (!(tau > 0.0 && tau < 0.5)) throw Error(ErrorKind::kInvalidTime, "tau must lie in (0, 1/2)");
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorKind::kInvalidArgument, "beta must lie in (0,1]");
  CouplingParams out;
  if (!(alpha > 0.25 && alpha < 0.5)) {
    if (!allow_violation) {
      throw Error(ErrorKind::kCouplingViolation,
                  "alpha outside (1/4,1/2): " + std::to_string(alpha));
    }
    out.violation = true;
  }
  out.m = snapped_floor(std::pow(tau, -1.0 - beta));
  out.N = snapped_floor(std::pow(tau, -alpha));
  if (out.N == 0) throw Error(ErrorKind::kCouplingViolation, "coupling gives N = 0");
  return out;
}

std::size_t default_burn_in(double K, double tau) {
  return static_cast<std::size_t>(std::ceil(5.0 / ((kLambda1 - K) * tau)));
}

TimeAverager::TimeAverager(const Observable& h, std::size_t burn_in, std::size_t m)
    : h_(&h), burn_in_(burn_in), m_(m) {
  if (m == 0) throw Error(ErrorKind::kInvalidArgument, "averaging length m must be >= 1");
}

void TimeAverager::operator()(std::uint64_t k, const SpectralField& x) {
  if (k >= burn_in_ && k < burn_in_ + m_) sum_ += (*h_)(x);
  if (k + 1 > seen_) seen_ = static_cast<std::size_t>(k + 1);
}

double TimeAverager::value() const {
  if (!complete()) {
    throw Error(ErrorKind::kInsufficientData,
                "trajectory yielded " + std::to_string(seen_) + " states, need " +
                    std::to_string(burn_in_ + m_));
  }
  return sum_ / static_cast<double>(m_);
}

double time_average(const ModelSpec& model, const SchemeParams& params,
                    const SpectralField& x0, RngKey key, const Observable& h,
                    std::size_t burn_in, std::size_t m) {
  SchemeParams p = params;
  p.steps = burn_in + m;
  TimeAverager avg(h, burn_in, m);
  simulate(model, p, x0, key, avg);
  return avg.value();
}

double normalized_deviation(double Pi, double pi_h, double tau, double beta) {
  return std::pow(tau, -0.5 * beta) * (Pi - pi_h);
}

std::optional<double> analytic_ergodic_mean(const ModelSpec& model, const Observable& h) {
  if (!model.drift.is_linear()) return std::nullopt;
  if (h.kind == ObservableKind::kLinear) return 0.0;
  const double var =
      model.noise.kind == NoiseKind::kZero
          ? 0.0
          : stationary_projection_variance(model.drift.linear_coefficient(), model.noise, h.direction);
  return gaussian_expectation([&](double u) { return h.outer_value(u); }, var, 64);
}

double estimate_ergodic_mean(const ModelSpec& model, const Observable& h, double tau,
                             std::size_t N, std::size_t steps, RngKey key) {
  SchemeParams p;
  p.tau = tau / 4.0;
  p.N = 2 * N;
  const auto K = drift_metadata(model.drift).K;
  const std::size_t burn = default_burn_in(K, p.tau);
  return time_average(model, p, SpectralField(p.N), key, h, burn, steps);
}

LongRunVariance long_run_variance(const ModelSpec& model, const Observable& h, double tau,
                                  std::size_t N, std::size_t steps, std::size_t burn_in,
                                  std::size_t batch_len, RngKey key) {
  SchemeParams p;
  p.tau = tau;
  p.N = N;
  p.steps = burn_in + steps;
  BatchMeans bm(batch_len);
  double sum = 0.0;
  simulate(model, p, SpectralField(N), key, [&](std::uint64_t k, const SpectralField& x) {
    if (k < burn_in || k >= burn_in + steps) return;
    const double v = h(x);
    sum += v;
    bm.push(v);
  });
  LongRunVariance out;
  out.batch = bm.result(tau);
  out.mean = sum / static_cast<double>(steps);
  out.steps = steps;
  return out;
}

namespace {

struct Prepared {
  CouplingParams coupling;
  std::size_t burn_in = 0;
};

Prepared prepare(const CltRequest& req) {
  validate_observable(req.observable);
  if (req.replicas == 0) throw Error(ErrorKind::kInvalidArgument, "replicas must be >= 1");
  Prepared p;
  p.coupling = coupling_params(req.tau, req.model.beta, req.alpha, req.allow_coupling_violation);
  validate_scheme(req.model, req.tau, p.coupling.N);
  p.burn_in = req.burn_in.value_or(default_burn_in(drift_metadata(req.model.drift).K, req.tau));
  return p;
}

double replica_time_average(const CltRequest& req, const Prepared& p, std::size_t r) {
  SchemeParams params;
  params.tau = req.tau;
  params.N = p.coupling.N;
  const RngKey key = seed_derivation(req.master_seed, r, req.stream);
  try {
    return time_average(req.model, params, SpectralField(params.N), key, req.observable,
                        p.burn_in, p.coupling.m);
  } catch (const DivergenceError& e) {
    throw DivergenceError(e.step(), "replica " + std::to_string(r) + ": " + e.what());
  }
}

}  // namespace

CltSample replicate_clt(const CltRequest& req) {
  const Prepared p = prepare(req);
  CltSample out;
  out.replicas = req.replicas;
  out.coupling = p.coupling;
  out.burn_in = p.burn_in;
  out.tau = req.tau;
  out.beta = req.model.beta;

  const double K = drift_metadata(req.model.drift).K;
  if (auto mean = analytic_ergodic_mean(req.model, req.observable)) {
    out.pi_h_ref = *mean;
    out.pi_h_source = req.observable.kind == ObservableKind::kLinear
                          ? "analytic (centered Gaussian invariant law)"
                          : "gauss-hermite-64";
  } else {
    out.pi_h_ref = estimate_ergodic_mean(req.model, req.observable, req.tau, p.coupling.N,
                                         req.ergodic_mean_run_steps,
                                         seed_derivation(req.master_seed, 0, "ergodic-mean"));
    out.pi_h_source = "long run at (tau/4, 2N)";
  }

  const bool linear_pair =
      req.model.drift.is_linear() && req.observable.kind == ObservableKind::kLinear;
  if (!req.compute_sigma2) {
    out.sigma2_source = "not computed";
  } else if (linear_pair) {
    out.sigma2_ref = req.model.noise.kind == NoiseKind::kZero
                         ? 0.0
                         : linear_poisson_variance(req.model.drift.linear_coefficient(),
                                                   req.model.noise, req.observable.direction);
    out.sigma2_source = "analytic Poisson solution";
  } else {
    const std::size_t L = req.batch_len.value_or(default_batch_length(K, req.tau));
    const auto run = long_run_variance(req.model, req.observable, req.tau, p.coupling.N,
                                       req.variance_run_steps, p.burn_in, L,
                                       seed_derivation(req.master_seed, 0, "variance-run"));
    out.sigma2_ref = run.batch.sigma2;
    out.sigma2_batch = run.batch;
    out.sigma2_source = "batch means on an independent long run";
  }

  out.time_averages.assign(req.replicas, 0.0);
  parallel_for(req.replicas, req.workers,
               [&](std::size_t r) { out.time_averages[r] = replica_time_average(req, p, r); });
  out.deviations.reserve(req.replicas);
  for (double Pi : out.time_averages) {
    out.deviations.push_back(normalized_deviation(Pi, out.pi_h_ref, req.tau, req.model.beta));
  }
  return out;
}

DecompositionSample decomposition_diagnostic(const CltRequest& req) {
  if (!req.model.drift.is_linear()) {
    throw Error(ErrorKind::kUnsupportedModel,
                "decomposition diagnostic needs linear drift (closed-form Poisson solution)");
  }
  if (req.observable.kind != ObservableKind::kLinear) {
    throw Error(ErrorKind::kUnsupportedModel, "decomposition diagnostic needs a linear observable");
  }
  const Prepared p = prepare(req);
  const std::size_t N = p.coupling.N;
  const std::size_t m = p.coupling.m;
  const double tau = req.tau;
  const double beta = req.model.beta;
  const double c = req.model.drift.linear_coefficient();

  SpectralField v(N);
  for (std::size_t j = 0; j < std::min(N, req.observable.direction.size()); ++j) {
    v[j] = req.observable.direction[j];
  }
  const SpectralField w = linear_poisson_gradient(c, v);  // D phi

  // I_k = int_{t_k}^{t_{k+1}} S(t - t_k) dW(t) per mode, jointly Gaussian with
  // dW_k: I = a dW + b Z with a = Cov/Var(dW), b^2 = Var(I) - a^2 Var(dW).
  const SpectralSpace space(N);
  const auto q = q_eigenvalues(req.model.noise, N);
  std::vector<double> reg(N), resid(N);
  double closed_form = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    const double lt = space.eigenvalues()[j] * tau;
    const double var_dw = q[j] * tau;
    const double var_i = q[j] * tau * (-std::expm1(-2.0 * lt)) / (2.0 * lt);
    const double cov = q[j] * tau * (-std::expm1(-lt)) / lt;
    reg[j] = var_dw > 0.0 ? cov / var_dw : 0.0;
    resid[j] = std::sqrt(std::max(0.0, var_i - reg[j] * cov));
    closed_form += w[j] * w[j] * var_i;
  }
  const double scale_m = std::pow(tau, 0.5 * beta);
  closed_form *= std::pow(tau, beta) * static_cast<double>(m);

  DecompositionSample out;
  out.coupling = p.coupling;
  out.burn_in = p.burn_in;
  out.tau = tau;
  out.martingale_variance_closed_form = closed_form;
  out.sigma2_ref = req.model.noise.kind == NoiseKind::kZero
                       ? 0.0
                       : linear_poisson_variance(c, req.model.noise, req.observable.direction);
  out.deviations.assign(req.replicas, 0.0);
  out.martingale.assign(req.replicas, 0.0);

  const Observable& h = req.observable;
  parallel_for(req.replicas, req.workers, [&](std::size_t r) {
    Stepper stepper(req.model, N, tau);
    const RngKey key = seed_derivation(req.master_seed, r, req.stream);
    NoiseStream noise{key, 0};
    std::vector<double> x(N, 0.0), dw(N);
    SpectralField view(N);
    double sum_h = 0.0;
    double sum_m = 0.0;
    const std::size_t end = p.burn_in + m;
    for (std::size_t k = 0; k < end; ++k) {
      const bool in_window = k >= p.burn_in;
      if (in_window) {
        view.coeffs = x;
        sum_h += h(view);
      }
      const std::uint64_t step_index = noise.step;
      sample_increment_scaled(noise, stepper.increment_stddev(), dw);
      if (in_window) {
        double inner = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
          const double conv =
              reg[j] * dw[j] + resid[j] * counter_normal(key, step_index, j, 1);
          inner += conv * w[j];
        }
        sum_m += inner;
      }
      stepper.step(x, dw, step_index);
    }
    const double Pi = sum_h / static_cast<double>(m);
    out.deviations[r] = normalized_deviation(Pi, 0.0, tau, beta);
    out.martingale[r] = -scale_m * sum_m;
  });
  out.remainder.resize(req.replicas);
  for (std::size_t r = 0; r < req.replicas; ++r) {
    out.remainder[r] = out.deviations[r] - out.martingale[r];
  }
  if (req.replicas >= 2) {
    out.martingale_moments = sample_moments(out.martingale);
    out.remainder_moments = sample_moments(out.remainder);
  }
  return out;
}

}  // namespace spde
