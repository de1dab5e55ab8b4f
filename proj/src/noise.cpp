#include "spde/noise.hpp"

#include <cmath>
#include <string>

#include "spde/error.hpp"

namespace spde {

double counter_normal(RngKey key, std::uint64_t step, std::uint64_t mode,
                      std::uint64_t lane) noexcept {
  std::uint64_t h = mix64(key.value ^ mix64(step));
  h = mix64(h ^ (mode << 2 | (lane & 3)));
  const std::uint64_t g = mix64(h ^ 0xD1B54A32D192ED03ULL);
  // u1 in (0,1], u2 in [0,1)
  const double u1 = (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(g >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

std::vector<double> q_eigenvalues(const NoiseSpec& spec, std::size_t dim) {
  if (dim == 0) {
    throw Error(ErrorKind::kInvalidDimension, "noise dimension must be >= 1");
  }
  std::vector<double> q(dim, 0.0);
  switch (spec.kind) {
    case NoiseKind::kZero:
      break;
    case NoiseKind::kPowerLaw:
      for (std::size_t j = 0; j < dim; ++j) {
        const double k = static_cast<double>(j + 1);
        q[j] = std::pow(kLambda1 * k * k, spec.kappa);
      }
      break;
    case NoiseKind::kExplicit:
      for (std::size_t j = 0; j < spec.explicit_q.size(); ++j) {
        const double v = spec.explicit_q[j];
        if (!(v > 0.0) || !std::isfinite(v)) {
          throw Error(ErrorKind::kInvalidNoise,
                      "explicit noise eigenvalue q_" + std::to_string(j + 1) +
                          " must be positive and finite");
        }
        if (j < dim) q[j] = v;
      }
      break;
  }
  return q;
}

Admissibility admissibility(const NoiseSpec& spec, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "beta must lie in (0,1]");
  }
  Admissibility out;
  switch (spec.kind) {
    case NoiseKind::kZero:
      return out;
    case NoiseKind::kExplicit: {
      const auto q = q_eigenvalues(spec, std::max<std::size_t>(1, spec.explicit_q.size()));
      for (std::size_t j = 0; j < spec.explicit_q.size(); ++j) {
        const double k = static_cast<double>(j + 1);
        out.partial_sum += std::pow(kLambda1 * k * k, beta - 1.0) * q[j];
      }
      out.terms = spec.explicit_q.size();
      return out;
    }
    case NoiseKind::kPowerLaw:
      break;
  }
  const double p = beta - 1.0 + spec.kappa;  // summand (pi^2 j^2)^p
  if (p >= -0.5) {
    throw Error(ErrorKind::kInadmissibleNoise,
                "noise inadmissible: need kappa < 1/2 - beta (beta - 1 + kappa = " +
                    std::to_string(p) + " >= -1/2)");
  }
  // Partial sum up to J, then int_J^inf (pi^2 x^2)^p dx bounds the tail
  // because the summand is decreasing.
  constexpr std::size_t kTerms = 1u << 20;
  double sum = 0.0;
  for (std::size_t j = kTerms; j >= 1; --j) {  // small terms first
    const double k = static_cast<double>(j);
    sum += std::pow(kLambda1 * k * k, p);
  }
  const double J = static_cast<double>(kTerms);
  out.partial_sum = sum;
  out.tail_bound = std::pow(kLambda1, p) * std::pow(J, 2.0 * p + 1.0) / (-(2.0 * p + 1.0));
  out.terms = kTerms;
  return out;
}

bool satisfies_range_condition(const NoiseSpec& spec) {
  switch (spec.kind) {
    case NoiseKind::kZero: return false;
    case NoiseKind::kExplicit: return false;  // finite rank
    case NoiseKind::kPowerLaw: return spec.kappa > -1.0;
  }
  return false;
}

void sample_increment_scaled(NoiseStream& stream, std::span<const double> stddev,
                             std::span<double> out) {
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = stddev[j] == 0.0 ? 0.0 : stddev[j] * counter_normal(stream.key, stream.step, j);
  }
  ++stream.step;
}

SpectralField sample_increment(NoiseStream& stream, std::span<const double> q,
                               double tau) {
  if (!(tau > 0.0)) {
    throw Error(ErrorKind::kInvalidTime, "increment step must be > 0");
  }
  std::vector<double> sd(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) sd[j] = std::sqrt(q[j] * tau);
  SpectralField w(q.size());
  sample_increment_scaled(stream, sd, w.coeffs);
  return w;
}

IncrementPath generate_path(RngKey key, std::span<const double> q,
                            double fine_step, std::size_t steps) {
  IncrementPath path{key, fine_step, {}};
  path.increments.reserve(steps);
  NoiseStream stream{key, 0};
  for (std::size_t k = 0; k < steps; ++k) {
    path.increments.push_back(sample_increment(stream, q, fine_step));
  }
  return path;
}

std::vector<SpectralField> aggregate_increments(const IncrementPath& path,
                                                std::size_t refinement) {
  const std::size_t n = path.increments.size();
  if (refinement == 0 || n % refinement != 0) {
    throw Error(ErrorKind::kInvalidArgument,
                std::to_string(n) + " fine increments not divisible by refinement " +
                    std::to_string(refinement));
  }
  std::vector<SpectralField> coarse;
  coarse.reserve(n / refinement);
  for (std::size_t k = 0; k < n; k += refinement) {
    SpectralField sum(path.increments[k].size());
    for (std::size_t i = k; i < k + refinement; ++i) {
      const auto& inc = path.increments[i];
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += inc[j];
    }
    coarse.push_back(std::move(sum));
  }
  return coarse;
}

}  // namespace spde
