#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "spde/error.hpp"
#include "spde/integrator.hpp"
#include "spde/stats.hpp"
#include "spde/variance_oracle.hpp"

using namespace spde;

namespace {

const ModelSpec kOu{DriftSpec::zero(), NoiseSpec::power_law(-1.0), 1.0};
const ModelSpec kQuiet{DriftSpec::zero(), NoiseSpec::zero(), 1.0};

}  // namespace

TEST(StabilityMaxTau, Window) {
  auto t = stability_max_tau(0.0, 1.0);
  ASSERT_TRUE(t);
  EXPECT_NEAR(*t, 2.46740110027234, 1e-13);
  EXPECT_FALSE(stability_max_tau(-3.0, 0.0));
  EXPECT_THROW(stability_max_tau(kPi * kPi, 1.0), Error);
}

TEST(ValidateScheme, RejectsBadParameters) {
  EXPECT_NO_THROW(validate_scheme(kOu, 0.01, 8));
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kValidation;
  };
  EXPECT_EQ(kind_of([] { validate_scheme(kOu, 0.01, 0); }), ErrorKind::kInvalidDimension);
  EXPECT_EQ(kind_of([] { validate_scheme(kOu, 0.5, 4); }), ErrorKind::kInvalidTime);
  EXPECT_EQ(kind_of([] { validate_scheme(kOu, 0.0, 4); }), ErrorKind::kInvalidTime);
  const ModelSpec stiff{DriftSpec::sine(5.0), NoiseSpec::power_law(-1.0), 1.0};
  // (pi^2 - 5) / 100 ~ 0.0487
  EXPECT_NO_THROW(validate_scheme(stiff, 0.04, 4));
  EXPECT_EQ(kind_of([&] { validate_scheme(stiff, 0.06, 4); }), ErrorKind::kStability);
  const ModelSpec rough{DriftSpec::zero(), NoiseSpec::power_law(0.0), 1.0};
  EXPECT_EQ(kind_of([&] { validate_scheme(rough, 0.01, 4); }), ErrorKind::kInadmissibleNoise);
}

TEST(Step, DeterministicDecay) {
  SchemeParams p{0.1, 4, 1, 0, 0};
  TrajectoryState s{0, SpectralField::basis(4, 1)};
  auto next = step(s, p, kOu, SpectralField(4));
  EXPECT_EQ(next.k, 1u);
  EXPECT_NEAR(next.x[0], 0.372707838853438, 1e-14);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(next.x[i], 0.0);
}

TEST(Step, ZeroStateMapsIncrementThroughSemigroup) {
  SchemeParams p{0.05, 5, 1, 0, 0};
  SpectralField w({0.3, -0.2, 0.1, 0.05, -0.4});
  auto next = step(TrajectoryState{0, SpectralField(5)}, p, kOu, w);
  auto expected = semigroup_apply(make_spectral_space(5), 0.05, w);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(next.x[i], expected[i]);
  EXPECT_THROW(step(TrajectoryState{0, SpectralField(4)}, p, kOu, w), Error);
}

TEST(Step, LinearDriftMatchesPerModeRecursion) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> cdist(-5.0, 5.0), tdist(1e-4, 0.2);
  for (int trial = 0; trial < 1000; ++trial) {
    const double c = cdist(rng), tau = tdist(rng);
    const std::size_t n = 1 + trial % 9;
    ModelSpec m{DriftSpec::linear(c), NoiseSpec::power_law(-1.0), 1.0};
    SpectralField x(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = z(rng);
      w[i] = z(rng);
    }
    auto next = step(TrajectoryState{0, x}, SchemeParams{tau, n, 1, 0, 0}, m, w);
    for (std::size_t i = 0; i < n; ++i) {
      const double lambda = kPi * kPi * double((i + 1) * (i + 1));
      const double expected = std::exp(-lambda * tau) * ((1.0 + c * tau) * x[i] + w[i]);
      EXPECT_NEAR(next.x[i], expected, 1e-14 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST(Step, NonFiniteStateRaisesDivergence) {
  Stepper st(kOu, 3, 0.01);
  std::vector<double> x{1.0, 0.0, 0.0}, w{0.0, std::nan(""), 0.0};
  try {
    st.step(x, w, 41);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 42);
    EXPECT_EQ(e.kind(), ErrorKind::kDivergence);
  }
}

TEST(Simulate, ZeroNoiseDecayIsExact) {
  const double tau = 0.01;
  SchemeParams p{tau, 6, 200, 0, 0};
  simulate(kQuiet, p, SpectralField::basis(6, 1), seed_derivation(1, 0, "sim"),
           [&](std::uint64_t k, const SpectralField& x) {
             const double expected = std::exp(-kPi * kPi * tau * double(k));
             EXPECT_NEAR(norm(x), expected, 1e-12);
           });
}

TEST(Simulate, StationarySecondMoments) {
  // E||X||^2 and E x_1^2 under the discrete stationary law, N = 8, tau = 0.05
  const double tau = 0.05;
  const std::size_t steps = 1'000'000, burn = 200, L = 500;
  BatchMeans total(L), first(L);
  double s_total = 0.0, s_first = 0.0;
  SchemeParams p{tau, 8, burn + steps, 0, 0};
  simulate(kOu, p, SpectralField(8), seed_derivation(7, 0, "moments"),
           [&](std::uint64_t k, const SpectralField& x) {
             if (k < burn || k >= burn + steps) return;
             const double n2 = dot(x, x);
             s_total += n2;
             s_first += x[0] * x[0];
             total.push(n2);
             first.push(x[0] * x[0]);
           });
  const double se_total = std::sqrt(total.result(tau).sigma2 / (steps * tau));
  const double se_first = std::sqrt(first.result(tau).sigma2 / (steps * tau));
  EXPECT_NEAR(s_total / steps, 0.0030350149279115909, 3 * se_total);
  const double lam = kPi * kPi, e = std::exp(-2 * lam * tau);
  EXPECT_NEAR(s_first / steps, tau * e / (lam * (1 - e)), 3 * se_first);
}

TEST(Simulate, HolderExponentOfIncrements) {
  const double tau = 1e-3;
  const std::size_t N = 64, burn = 1000, steps = 200'000;
  const std::vector<std::size_t> lags{1, 2, 4, 8, 16, 32};
  std::vector<SpectralField> ring(33);
  std::vector<double> sums(lags.size(), 0.0);
  std::size_t count = 0;
  SchemeParams p{tau, N, burn + steps, 0, 0};
  simulate(kOu, p, SpectralField(N), seed_derivation(8, 0, "holder"),
           [&](std::uint64_t k, const SpectralField& x) {
             ring[k % 33] = x;
             if (k < burn + 32) return;
             for (std::size_t i = 0; i < lags.size(); ++i) {
               const auto d = padded_difference(x, ring[(k - lags[i]) % 33]);
               sums[i] += dot(d, d);
             }
             ++count;
           });
  std::vector<double> t, m;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    t.push_back(double(lags[i]) * tau);
    m.push_back(sums[i] / double(count));
  }
  const auto fit = fit_order(t, m);
  EXPECT_NEAR(fit.slope, 1.0, 0.2);
}

TEST(Simulate, ContractionUnderSharedNoise) {
  const double tau = 0.01;
  for (const auto& model : {kOu, ModelSpec{DriftSpec::sine(2.0), NoiseSpec::power_law(-1.0), 1.0}}) {
    const double L = drift_metadata(model.drift).L_F;
    Stepper a(model, 8, tau), b(model, 8, tau);
    std::vector<double> x(8, 0.0), y(8, 0.0);
    x[0] = 1.0;
    y[2] = -0.5;
    NoiseStream na{seed_derivation(9, 0, "contract"), 0}, nb = na;
    double prev = norm(padded_difference(SpectralField(x), SpectralField(y)));
    for (int k = 0; k < 500; ++k) {
      a.step(x, na);
      b.step(y, nb);
      const double d = norm(padded_difference(SpectralField(x), SpectralField(y)));
      ASSERT_LE(d, std::exp(-kPi * kPi * tau) * (1 + tau * L) * prev * (1 + 1e-12) + 1e-14);
      prev = d;
    }
  }
}

TEST(HorizonSteps, IntegerMultiplesOnly) {
  EXPECT_EQ(horizon_steps(1.0, 0.0625), 16u);
  EXPECT_EQ(horizon_steps(1.0, 1e-3), 1000u);
  EXPECT_THROW(horizon_steps(1.0, 0.3), Error);
}

TEST(CoupledTemporalError, DeterministicFlowIsExact) {
  TemporalErrorRequest req;
  req.model = kQuiet;
  req.N = 8;
  req.tau = 0.0625;
  req.replicas = 4;
  req.x0 = SpectralField({1.0, -0.5, 0.25, 0.0, 0.0, 0.0, 0.0, 0.1});
  auto e = coupled_temporal_error(req);
  EXPECT_LT(e.rms, 1e-12);
  EXPECT_EQ(e.replicas, 4u);
  req.refinement = 2;
  EXPECT_THROW(coupled_temporal_error(req), Error);
}

TEST(CoupledTemporalError, WorkerCountDoesNotChangeResult) {
  TemporalErrorRequest req;
  req.model = kOu;
  req.N = 16;
  req.tau = 0.0625;
  req.replicas = 12;
  req.master_seed = 5;
  req.workers = 1;
  auto a = coupled_temporal_error(req);
  req.workers = 4;
  auto b = coupled_temporal_error(req);
  EXPECT_EQ(a.squared_errors, b.squared_errors);
  EXPECT_GT(a.rms, 0.0);
}

TEST(CoupledSpatialError, ZeroCases) {
  SpatialErrorRequest req;
  req.model = kOu;
  req.N = 16;
  req.N_ref = 16;
  req.tau = 0.01;
  req.replicas = 4;
  EXPECT_EQ(coupled_spatial_error(req).rms, 0.0);

  req.model = kQuiet;
  req.N = 2;
  req.N_ref = 32;
  SpectralField x0(32);
  x0[0] = 1.0;
  x0[1] = 0.3;
  req.x0 = x0;
  EXPECT_LT(coupled_spatial_error(req).rms, 1e-12);

  req.N = 40;
  EXPECT_THROW(coupled_spatial_error(req), Error);
}

TEST(SummarizeSquaredErrors, DeltaMethod) {
  auto e = summarize_squared_errors({1.0, 1.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(e.rms, 1.0);
  EXPECT_DOUBLE_EQ(e.stderr_rms, 0.0);
  auto f = summarize_squared_errors({0.0, 4.0});
  EXPECT_DOUBLE_EQ(f.rms, std::sqrt(2.0));
  EXPECT_GT(f.stderr_rms, 0.0);
}
