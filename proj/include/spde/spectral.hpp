#pragma once

// Diagonal spectral machinery for the Dirichlet Laplacian on (0,1).
//
// The eigenpairs are -A e_i = lambda_i e_i with lambda_i = pi^2 i^2 and
// e_i(x) = sqrt(2) sin(i pi x). Every operator used by the integrator is
// diagonal in this basis, so fields are stored as plain coefficient vectors.

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace spde {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kLambda1 = kPi * kPi;

/// Coefficients <x, e_i>, i = 1..N, of an element of H_N. Index 0 holds mode 1.
struct SpectralField {
  std::vector<double> coeffs;

  SpectralField() = default;
  explicit SpectralField(std::size_t n) : coeffs(n, 0.0) {}
  explicit SpectralField(std::vector<double> c) : coeffs(std::move(c)) {}

  std::size_t size() const noexcept { return coeffs.size(); }
  double& operator[](std::size_t i) { return coeffs[i]; }
  double operator[](std::size_t i) const { return coeffs[i]; }

  /// The basis vector e_mode (mode is 1-based) in H_n.
  static SpectralField basis(std::size_t n, std::size_t mode);

  bool all_finite() const noexcept;

  friend bool operator==(const SpectralField&, const SpectralField&) = default;
};

double dot(const SpectralField& x, const SpectralField& y);
double norm(const SpectralField& x);

/// x - y after zero-padding the shorter operand.
SpectralField padded_difference(const SpectralField& x, const SpectralField& y);

class SpectralSpace {
 public:
  explicit SpectralSpace(std::size_t dim);

  std::size_t dim() const noexcept { return eigenvalues_.size(); }
  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }

  /// lambda_i for 1-based i; throws kOutOfRange past dim().
  double eigenvalue(std::size_t i) const;

 private:
  std::vector<double> eigenvalues_;
};

SpectralSpace make_spectral_space(std::size_t dim);

/// (-A)^s x, coefficientwise lambda_i^s x_i.
SpectralField apply_fractional_power(const SpectralSpace& space, double s,
                                     const SpectralField& x);

/// S(t) x = e^{tA} x, coefficientwise e^{-lambda_i t} x_i.
SpectralField semigroup_apply(const SpectralSpace& space, double t,
                              const SpectralField& x);

/// ||x||_s = (sum_i lambda_i^s x_i^2)^{1/2}.
double sobolev_norm(const SpectralSpace& space, double s,
                    const SpectralField& x);

/// Grid size used for pointwise (Nemytskii) evaluation when none is given.
inline std::size_t default_grid_size(std::size_t dim) { return 4 * dim - 1; }

/// Sine synthesis/analysis between H_N coefficients and the interior grid
/// xi_j = j/(M+1), j = 1..M. The table is built once; apply it many times.
class SineTransform {
 public:
  SineTransform(std::size_t dim, std::size_t grid_size);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t grid_size() const noexcept { return grid_size_; }

  /// values_j = sum_i c_i sqrt(2) sin(i pi xi_j)
  void synthesize(std::span<const double> coeffs, std::span<double> values) const;
  /// c_i = (1/(M+1)) sum_j values_j sqrt(2) sin(i pi xi_j), i = 1..dim
  void analyze(std::span<const double> values, std::span<double> coeffs) const;

 private:
  std::size_t dim_;
  std::size_t grid_size_;
  // row-major [mode][grid point], already scaled by sqrt(2)
  std::vector<double> table_;
};

std::vector<double> to_grid(const SpectralField& x, std::size_t grid_size);
SpectralField from_grid(std::span<const double> values, std::size_t dim);

}  // namespace spde
