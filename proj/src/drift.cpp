#include "spde/drift.hpp"

#include <cmath>
#include <string>

#include "spde/error.hpp"

namespace spde {

DriftMetadata drift_metadata(const DriftSpec& spec) {
  switch (spec.kind) {
    case DriftKind::kZero: return {0.0, 0.0};
    case DriftKind::kLinear: return {spec.gain, std::abs(spec.gain)};
    case DriftKind::kSine:
    case DriftKind::kArctan: return {std::abs(spec.gain), std::abs(spec.gain)};
  }
  return {};
}

void validate_drift(const DriftSpec& spec) {
  if (!std::isfinite(spec.gain)) {
    throw Error(ErrorKind::kInadmissibleDrift, "drift gain must be finite");
  }
  const auto meta = drift_metadata(spec);
  if (!(meta.K < kLambda1)) {
    throw Error(ErrorKind::kInadmissibleDrift,
                "drift violates dissipativity: K = " + std::to_string(meta.K) +
                    " must be < lambda_1 = pi^2");
  }
}

DriftEvaluator::DriftEvaluator(DriftSpec spec, std::size_t dim, std::size_t grid_size)
    : spec_(spec), dim_(dim) {
  validate_drift(spec_);
  if (dim == 0) {
    throw Error(ErrorKind::kInvalidDimension, "drift dimension must be >= 1");
  }
  if (grid_size < dim) {
    throw Error(ErrorKind::kAliasing, "drift grid size " + std::to_string(grid_size) +
                                          " smaller than dimension " + std::to_string(dim));
  }
  if (!spec_.is_linear()) {
    transform_.emplace_back(dim, grid_size);
    grid_.resize(grid_size);
  }
}

void DriftEvaluator::apply(std::span<const double> x, std::span<double> out) {
  if (x.size() != dim_ || out.size() != dim_) {
    throw Error(ErrorKind::kDimensionMismatch, "drift: dimension mismatch");
  }
  const double a = spec_.gain;
  switch (spec_.kind) {
    case DriftKind::kZero:
      for (auto& v : out) v = 0.0;
      return;
    case DriftKind::kLinear:
      for (std::size_t i = 0; i < dim_; ++i) out[i] = a * x[i];
      return;
    case DriftKind::kSine:
    case DriftKind::kArctan:
      break;
  }
  const auto& t = transform_.front();
  t.synthesize(x, grid_);
  if (spec_.kind == DriftKind::kSine) {
    for (auto& u : grid_) u = a * std::sin(u);
  } else {
    for (auto& u : grid_) u = a * std::atan(u);
  }
  t.analyze(grid_, out);
}

SpectralField apply_drift(const DriftSpec& spec, const SpectralField& x,
                          std::size_t grid_size) {
  DriftEvaluator eval(spec, x.size(), grid_size);
  SpectralField out(x.size());
  eval.apply(x.coeffs, out.coeffs);
  return out;
}

SpectralField apply_drift(const DriftSpec& spec, const SpectralField& x) {
  return apply_drift(spec, x, default_grid_size(x.size()));
}

}  // namespace spde
