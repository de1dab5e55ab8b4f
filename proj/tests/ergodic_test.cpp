#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "spde/ergodic.hpp"
#include "spde/error.hpp"

using namespace spde;

namespace {

const ModelSpec kOu{DriftSpec::zero(), NoiseSpec::power_law(-1.0), 1.0};
const ModelSpec kQuiet{DriftSpec::zero(), NoiseSpec::zero(), 1.0};

}  // namespace

TEST(CouplingParams, Rules) {
  auto c = coupling_params(0.01, 1.0, 0.4);
  EXPECT_EQ(c.m, 10000u);
  EXPECT_EQ(c.N, 6u);
  EXPECT_FALSE(c.violation);
  auto d = coupling_params(0.02, 1.0, 0.4);
  EXPECT_EQ(d.m, 2500u);
  EXPECT_EQ(d.N, 4u);
}

TEST(CouplingParams, AlphaWindowIsOpen) {
  for (double alpha : {0.25, 0.5, 0.6, 0.1}) {
    try {
      coupling_params(0.01, 1.0, alpha);
      FAIL() << alpha;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kCouplingViolation);
      EXPECT_NE(std::string(e.what()).find("alpha outside (1/4,1/2)"), std::string::npos);
    }
  }
  auto c = coupling_params(0.01, 1.0, 0.6, true);
  EXPECT_TRUE(c.violation);
  EXPECT_EQ(c.N, 15u);
}

TEST(SnappedFloor, AbsorbsPowRoundoff) {
  EXPECT_EQ(snapped_floor(std::pow(0.02, -2.0)), 2500u);
  EXPECT_EQ(snapped_floor(6.3096), 6u);
  EXPECT_EQ(snapped_floor(2499.5), 2499u);
}

TEST(BurnIn, FiveRelaxationTimes) {
  EXPECT_EQ(default_burn_in(0.0, 0.02), 26u);  // ceil(5 / (pi^2 0.02)) = ceil(25.33)
  EXPECT_EQ(default_burn_in(0.0, 0.01), 51u);
}

TEST(TimeAverage, ConstantObservable) {
  auto h = Observable::composed(OuterFunction::kCos, SpectralField::basis(4, 1), 0.0, 2.5);
  SchemeParams p{0.01, 4, 0, 0, 0};
  EXPECT_EQ(time_average(kOu, p, SpectralField(4), seed_derivation(1, 0, "c"), h, 10, 100), 2.5);
}

TEST(TimeAverage, GeometricSeriesForDeterministicDecay) {
  const double tau = 0.01;
  const std::size_t m = 300;
  auto h = Observable::linear(SpectralField::basis(3, 1));
  SchemeParams p{tau, 3, 0, 0, 0};
  const double Pi = time_average(kQuiet, p, SpectralField::basis(3, 1), seed_derivation(1, 0, "g"),
                                 h, 0, m);
  const double r = std::exp(-kPi * kPi * tau);
  EXPECT_NEAR(Pi, (1 - std::pow(r, double(m))) / (1 - r) / double(m), 1e-14);
}

TEST(TimeAverage, InsufficientStates) {
  TimeAverager avg(Observable::linear(SpectralField::basis(1, 1)), 2, 3);
  SpectralField x(1);
  for (std::uint64_t k = 0; k < 4; ++k) avg(k, x);
  try {
    avg.value();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInsufficientData);
  }
  avg(4, x);
  EXPECT_TRUE(avg.complete());
  EXPECT_EQ(avg.value(), 0.0);
}

TEST(TimeAverage, StationaryOuConcentrates) {
  const double tau = 0.01;
  const std::size_t m = 10000, B = default_burn_in(0.0, tau);
  const double sigma2 = std::pow(kPi, -6.0);
  auto h = Observable::linear(SpectralField::basis(6, 1));
  SchemeParams p{tau, 6, 0, 0, 0};
  int outside = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double Pi = time_average(kOu, p, SpectralField(6), seed_derivation(seed, 0, "ou"), h, B, m);
    if (std::abs(Pi) >= 4 * std::sqrt(sigma2 / (m * tau))) ++outside;
  }
  EXPECT_LE(outside, 1);
}

TEST(TimeAverage, LinearInObservable) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  const double tau = 0.02;
  SchemeParams p{tau, 5, 0, 0, 0};
  const auto key = seed_derivation(4, 0, "lin");
  for (int trial = 0; trial < 5; ++trial) {
    SpectralField u(5), v(5), w(5);
    const double a = z(rng), b = z(rng);
    for (std::size_t i = 0; i < 5; ++i) {
      u[i] = z(rng);
      v[i] = z(rng);
      w[i] = a * u[i] + b * v[i];
    }
    const auto Pu = time_average(kOu, p, SpectralField(5), key, Observable::linear(u), 20, 500);
    const auto Pv = time_average(kOu, p, SpectralField(5), key, Observable::linear(v), 20, 500);
    const auto Pw = time_average(kOu, p, SpectralField(5), key, Observable::linear(w), 20, 500);
    EXPECT_NEAR(Pw, a * Pu + b * Pv, 1e-12 * (1 + std::abs(Pw)));
  }
}

TEST(NormalizedDeviation, Scaling) {
  EXPECT_EQ(normalized_deviation(0.7, 0.7, 0.01, 1.0), 0.0);
  EXPECT_NEAR(normalized_deviation(0.03, 0.0, 0.01, 1.0), 0.3, 1e-12);
  const auto c = coupling_params(0.01, 1.0, 0.4);
  EXPECT_NEAR(std::pow(0.01, -0.5), std::sqrt(double(c.m) * 0.01), 1e-12);
  for (double tau : {0.01, 0.02, 0.04, 0.05}) {
    const auto cp = coupling_params(tau, 1.0, 0.4);
    EXPECT_NEAR(normalized_deviation(0.123, 0.1, tau, 1.0), std::sqrt(cp.m * tau) * 0.023, 1e-12);
  }
}

TEST(Observable, EvaluationAndValidation) {
  auto x = SpectralField({0.5, -1.0, 2.0});
  EXPECT_DOUBLE_EQ(Observable::linear(SpectralField({1.0, 1.0}))(x), -0.5);
  auto h = Observable::composed(OuterFunction::kSin, SpectralField::basis(1, 1), 2.0);
  EXPECT_DOUBLE_EQ(h(x), std::sin(1.0));
  EXPECT_THROW(validate_observable(Observable::linear(SpectralField(3))), Error);
  EXPECT_THROW(validate_observable(Observable::linear(SpectralField(std::vector<double>{std::nan("")}))), Error);
  EXPECT_NE(h.observable_class().find("C_b^4"), std::string::npos);
  EXPECT_NE(Observable::linear(x).observable_class().find("linear"), std::string::npos);
}

TEST(AnalyticErgodicMean, GaussHermiteOracle) {
  // E cos(Z), Z ~ N(0, s2) = exp(-s2/2); s2 = q_1 / (2 lambda_1) = 1/(2 pi^4)
  auto h = Observable::composed(OuterFunction::kCos, SpectralField::basis(1, 1));
  auto v = analytic_ergodic_mean(kOu, h);
  ASSERT_TRUE(v);
  EXPECT_NEAR(*v, std::exp(-0.5 * 5.13299112734217e-3), 1e-13);
  EXPECT_EQ(*analytic_ergodic_mean(kOu, Observable::linear(SpectralField::basis(2, 1))), 0.0);
  const ModelSpec nonlinear{DriftSpec::sine(1.0), NoiseSpec::power_law(-1.0), 1.0};
  EXPECT_FALSE(analytic_ergodic_mean(nonlinear, h));
}

TEST(ReplicateClt, ZeroNoiseGivesZeroDeviation) {
  CltRequest req;
  req.model = kQuiet;
  req.observable = Observable::linear(SpectralField::basis(1, 1));
  req.replicas = 1;
  auto s = replicate_clt(req);
  ASSERT_EQ(s.deviations.size(), 1u);
  EXPECT_EQ(s.deviations[0], 0.0);
  EXPECT_EQ(s.sigma2_ref, 0.0);
}

TEST(ReplicateClt, DeterministicAcrossWorkers) {
  CltRequest req;
  req.model = kOu;
  req.observable = Observable::linear(SpectralField::basis(1, 1));
  req.tau = 0.04;
  req.replicas = 16;
  req.master_seed = 3;
  req.workers = 1;
  auto a = replicate_clt(req);
  req.workers = 5;
  auto b = replicate_clt(req);
  EXPECT_EQ(a.deviations, b.deviations);
  EXPECT_EQ(a.time_averages, b.time_averages);
  EXPECT_NEAR(a.sigma2_ref, std::pow(kPi, -6.0), 1e-15);
  EXPECT_EQ(a.coupling.m, 625u);
  EXPECT_EQ(a.burn_in, default_burn_in(0.0, 0.04));
}

TEST(Decomposition, ZeroNoiseMartingaleVanishes) {
  CltRequest req;
  req.model = kQuiet;
  req.observable = Observable::linear(SpectralField::basis(1, 1));
  req.replicas = 3;
  auto d = decomposition_diagnostic(req);
  for (double m : d.martingale) EXPECT_EQ(m, 0.0);
  EXPECT_EQ(d.martingale_variance_closed_form, 0.0);
}

TEST(Decomposition, PartsAddUpAndMatchClt) {
  CltRequest req;
  req.model = kOu;
  req.observable = Observable::linear(SpectralField::basis(1, 1));
  req.tau = 0.04;
  req.replicas = 8;
  req.master_seed = 12;
  auto d = decomposition_diagnostic(req);
  auto s = replicate_clt(req);
  for (std::size_t r = 0; r < 8; ++r) {
    EXPECT_EQ(d.deviations[r], s.deviations[r]);
    EXPECT_NEAR(d.martingale[r] + d.remainder[r], d.deviations[r], 1e-12);
  }
  // tau m sum_j w_j^2 q_j (1 - e^{-2 lambda_j tau}) / (2 lambda_j), one mode
  const double lam = kPi * kPi, q = 1 / lam, w = 1 / lam;
  EXPECT_NEAR(d.martingale_variance_closed_form,
              0.04 * 625 * w * w * q * (1 - std::exp(-2 * lam * 0.04)) / (2 * lam), 1e-15);
}

TEST(Decomposition, RejectsNonlinearModels) {
  CltRequest req;
  req.model = ModelSpec{DriftSpec::sine(1.0), NoiseSpec::power_law(-1.0), 1.0};
  req.observable = Observable::linear(SpectralField::basis(1, 1));
  try {
    decomposition_diagnostic(req);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnsupportedModel);
  }
  req.model = kOu;
  req.observable = Observable::composed(OuterFunction::kSin, SpectralField::basis(1, 1));
  EXPECT_THROW(decomposition_diagnostic(req), Error);
}
