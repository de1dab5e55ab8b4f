#pragma once

// Q-Wiener increments in the sine eigenbasis.
//
// Draws are produced by a counter-based generator addressed by
// (key, step, mode, lane). A draw never depends on how many other draws were
// taken before it, so
//   * increasing N extends the per-step stream instead of permuting it, and
//   * replicas, refinements and worker schedules are reproducible.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "spde/spectral.hpp"

namespace spde {

// --- counter-based RNG ------------------------------------------------------

/// splitmix64 finaliser; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// FNV-1a over the bytes of a label.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

struct RngKey {
  std::uint64_t value = 0;
  friend bool operator==(RngKey, RngKey) = default;
};

/// key = mix64(mix64(master ^ fnv1a64(stream)) ^ replica).
/// For a fixed (master, stream) the map replica -> key is a bijection.
constexpr RngKey seed_derivation(std::uint64_t master, std::uint64_t replica,
                                 std::string_view stream) noexcept {
  return RngKey{mix64(mix64(master ^ fnv1a64(stream)) ^ replica)};
}

/// Standard normal addressed by (step, mode, lane). Box-Muller on two hashed
/// uniforms; only the cosine branch is used so every address is independent.
double counter_normal(RngKey key, std::uint64_t step, std::uint64_t mode,
                      std::uint64_t lane = 0) noexcept;

// --- noise model ------------------------------------------------------------

enum class NoiseKind { kZero, kPowerLaw, kExplicit };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kPowerLaw;
  double kappa = 0.0;                 // power law: q_j = lambda_j^kappa
  std::vector<double> explicit_q;     // explicit: q_1..q_n, modes past n get 0

  static NoiseSpec zero() { return {NoiseKind::kZero, 0.0, {}}; }
  static NoiseSpec power_law(double kappa) { return {NoiseKind::kPowerLaw, kappa, {}}; }
  static NoiseSpec explicit_sequence(std::vector<double> q) {
    return {NoiseKind::kExplicit, 0.0, std::move(q)};
  }
};

/// q_1..q_N. Throws kInvalidNoise on nonpositive explicit entries.
std::vector<double> q_eigenvalues(const NoiseSpec& spec, std::size_t dim);

struct Admissibility {
  double partial_sum = 0.0;   // sum_{j <= terms} lambda_j^{beta-1} q_j
  double tail_bound = 0.0;    // integral bound on the remaining terms
  std::size_t terms = 0;
  double value() const { return partial_sum + tail_bound; }
};

/// Squared Hilbert-Schmidt norm ||(-A)^{(beta-1)/2} Q^{1/2}||^2.
/// Throws kInadmissibleNoise when the power-law series diverges
/// (beta - 1 + kappa >= -1/2) and kInvalidArgument for beta outside (0,1].
Admissibility admissibility(const NoiseSpec& spec, double beta);

/// Whether a power-law Q also satisfies Range((-A)^{-eps/2}) in Range(Q^{1/2})
/// for some eps < 1; recorded as metadata only.
bool satisfies_range_condition(const NoiseSpec& spec);

// --- increments -------------------------------------------------------------

/// Per-replica noise stream: advancing `step` is the only state.
struct NoiseStream {
  RngKey key;
  std::uint64_t step = 0;
};

/// Mode j ~ N(0, q_j tau), drawn at address (stream.step, j); advances the stream.
SpectralField sample_increment(NoiseStream& stream, std::span<const double> q,
                               double tau);

/// Same draw, with sqrt(q_j tau) precomputed, written into `out`.
void sample_increment_scaled(NoiseStream& stream, std::span<const double> stddev,
                             std::span<double> out);

struct IncrementPath {
  RngKey key;
  double fine_step = 0.0;
  std::vector<SpectralField> increments;
};

IncrementPath generate_path(RngKey key, std::span<const double> q,
                            double fine_step, std::size_t steps);

/// Coarse increment k is the modewise sum of fine increments rk..rk+r-1.
std::vector<SpectralField> aggregate_increments(const IncrementPath& path,
                                                std::size_t refinement);

}  // namespace spde
