#include "spde/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spde/error.hpp"

namespace spde {

namespace {

void require_same_dim(const SpectralSpace& space, const SpectralField& x) {
  if (x.size() != space.dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "field has " + std::to_string(x.size()) +
                    " coefficients, space has dimension " +
                    std::to_string(space.dim()));
  }
}

}  // namespace

SpectralField SpectralField::basis(std::size_t n, std::size_t mode) {
  if (mode == 0 || mode > n) {
    throw Error(ErrorKind::kOutOfRange,
                "basis mode " + std::to_string(mode) + " outside 1.." +
                    std::to_string(n));
  }
  SpectralField e(n);
  e[mode - 1] = 1.0;
  return e;
}

bool SpectralField::all_finite() const noexcept {
  return std::all_of(coeffs.begin(), coeffs.end(),
                     [](double c) { return std::isfinite(c); });
}

double dot(const SpectralField& x, const SpectralField& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "dot: dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm(const SpectralField& x) { return std::sqrt(dot(x, x)); }

SpectralField padded_difference(const SpectralField& x, const SpectralField& y) {
  SpectralField d(std::max(x.size(), y.size()));
  for (std::size_t i = 0; i < x.size(); ++i) d[i] += x[i];
  for (std::size_t i = 0; i < y.size(); ++i) d[i] -= y[i];
  return d;
}

SpectralSpace::SpectralSpace(std::size_t dim) {
  if (dim == 0) {
    throw Error(ErrorKind::kInvalidDimension, "spectral dimension must be >= 1");
  }
  eigenvalues_.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double k = static_cast<double>(i + 1);
    eigenvalues_[i] = kLambda1 * k * k;
  }
}

double SpectralSpace::eigenvalue(std::size_t i) const {
  if (i == 0 || i > dim()) {
    throw Error(ErrorKind::kOutOfRange,
                "eigenvalue index " + std::to_string(i) + " outside 1.." +
                    std::to_string(dim()));
  }
  return eigenvalues_[i - 1];
}

SpectralSpace make_spectral_space(std::size_t dim) { return SpectralSpace(dim); }

SpectralField apply_fractional_power(const SpectralSpace& space, double s,
                                     const SpectralField& x) {
  require_same_dim(space, x);
  SpectralField y(x.size());
  const auto lam = space.eigenvalues();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::pow(lam[i], s) * x[i];
  return y;
}

SpectralField semigroup_apply(const SpectralSpace& space, double t,
                              const SpectralField& x) {
  if (!(t >= 0.0)) {
    throw Error(ErrorKind::kInvalidTime, "semigroup time must be >= 0");
  }
  require_same_dim(space, x);
  SpectralField y(x.size());
  const auto lam = space.eigenvalues();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::exp(-lam[i] * t) * x[i];
  return y;
}

double sobolev_norm(const SpectralSpace& space, double s, const SpectralField& x) {
  require_same_dim(space, x);
  const auto lam = space.eigenvalues();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += std::pow(lam[i], s) * x[i] * x[i];
  return std::sqrt(sum);
}

SineTransform::SineTransform(std::size_t dim, std::size_t grid_size)
    : dim_(dim), grid_size_(grid_size), table_(dim * grid_size) {
  if (dim == 0) {
    throw Error(ErrorKind::kInvalidDimension, "sine transform dimension must be >= 1");
  }
  if (grid_size < dim) {
    throw Error(ErrorKind::kAliasing,
                "grid size " + std::to_string(grid_size) +
                    " is smaller than dimension " + std::to_string(dim));
  }
  const double h = 1.0 / static_cast<double>(grid_size + 1);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < grid_size; ++j) {
      // reduce the argument mod 2(M+1) so large products keep full precision
      const std::size_t p = ((i + 1) * (j + 1)) % (2 * (grid_size + 1));
      table_[i * grid_size + j] =
          std::numbers::sqrt2 * std::sin(kPi * static_cast<double>(p) * h);
    }
  }
}

void SineTransform::synthesize(std::span<const double> coeffs,
                               std::span<double> values) const {
  std::fill(values.begin(), values.end(), 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    const double c = coeffs[i];
    if (c == 0.0) continue;
    const double* row = &table_[i * grid_size_];
    for (std::size_t j = 0; j < grid_size_; ++j) values[j] += c * row[j];
  }
}

void SineTransform::analyze(std::span<const double> values,
                            std::span<double> coeffs) const {
  const double w = 1.0 / static_cast<double>(grid_size_ + 1);
  for (std::size_t i = 0; i < dim_; ++i) {
    const double* row = &table_[i * grid_size_];
    double s = 0.0;
    for (std::size_t j = 0; j < grid_size_; ++j) s += values[j] * row[j];
    coeffs[i] = w * s;
  }
}

std::vector<double> to_grid(const SpectralField& x, std::size_t grid_size) {
  SineTransform t(x.size(), grid_size);
  std::vector<double> values(grid_size);
  t.synthesize(x.coeffs, values);
  return values;
}

SpectralField from_grid(std::span<const double> values, std::size_t dim) {
  SineTransform t(dim, values.size());
  SpectralField x(dim);
  t.analyze(values, x.coeffs);
  return x;
}

}  // namespace spde
