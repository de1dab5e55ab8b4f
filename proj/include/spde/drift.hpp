#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spde/spectral.hpp"

namespace spde {

enum class DriftKind { kZero, kLinear, kSine, kArctan };

/// F = 0, F = c Id, or the Nemytskii operator F(x)(xi) = f(x(xi)) with
/// f(u) = a sin(u) or f(u) = a arctan(u).
struct DriftSpec {
  DriftKind kind = DriftKind::kZero;
  double gain = 0.0;  // c for linear, a for the Nemytskii kinds

  static DriftSpec zero() { return {DriftKind::kZero, 0.0}; }
  static DriftSpec linear(double c) { return {DriftKind::kLinear, c}; }
  static DriftSpec sine(double a) { return {DriftKind::kSine, a}; }
  static DriftSpec arctan(double a) { return {DriftKind::kArctan, a}; }

  bool is_linear() const { return kind == DriftKind::kZero || kind == DriftKind::kLinear; }
  /// c for the linear family (0 for zero drift).
  double linear_coefficient() const { return kind == DriftKind::kLinear ? gain : 0.0; }
};

struct DriftMetadata {
  double K = 0.0;    // one-sided Lipschitz constant
  double L_F = 0.0;  // bound on ||DF||
};

DriftMetadata drift_metadata(const DriftSpec& spec);

/// Throws kInadmissibleDrift unless K < lambda_1 (and |a| < lambda_1 for
/// the Nemytskii kinds).
void validate_drift(const DriftSpec& spec);

/// Evaluates F^N = P^N F on H_N. Holds the grid transform and scratch space,
/// so one evaluator belongs to one trajectory.
class DriftEvaluator {
 public:
  DriftEvaluator(DriftSpec spec, std::size_t dim, std::size_t grid_size);
  DriftEvaluator(DriftSpec spec, std::size_t dim)
      : DriftEvaluator(spec, dim, default_grid_size(dim)) {}

  const DriftSpec& spec() const noexcept { return spec_; }

  /// out = F^N(x). `out` may not alias `x`.
  void apply(std::span<const double> x, std::span<double> out);

 private:
  DriftSpec spec_;
  std::size_t dim_;
  std::vector<SineTransform> transform_;  // empty for zero/linear
  std::vector<double> grid_;
};

SpectralField apply_drift(const DriftSpec& spec, const SpectralField& x,
                          std::size_t grid_size);
SpectralField apply_drift(const DriftSpec& spec, const SpectralField& x);

}  // namespace spde
