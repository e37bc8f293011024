#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"

using namespace palmnut;

TEST(Phantom, FlatKindIsCenteredDisc) {
  const Phantom ph = make_phantom(32, 32, PhantomKind::flat);
  std::size_t inside = 0;
  for (std::size_t n = 0; n < ph.magnitude.size(); ++n) {
    const double v = ph.magnitude[n];
    ASSERT_TRUE(v == 0.0 || v == 1.0);
    inside += v == 1.0;
  }
  // Corners are outside, the center is inside.
  EXPECT_EQ(ph.magnitude[0], 0.0);
  EXPECT_EQ(ph.magnitude[32 * 32 - 1], 0.0);
  EXPECT_EQ(ph.magnitude[16 * 32 + 16], 1.0);
  // Area of a radius-0.8 disc in the [-1, 1]^2 square.
  const double frac = static_cast<double>(inside) / (32.0 * 32.0);
  EXPECT_NEAR(frac, std::numbers::pi * 0.64 / 4.0, 0.03);
}

TEST(Phantom, Deterministic) {
  const Phantom a = make_phantom(64, 64);
  const Phantom b = make_phantom(64, 64);
  EXPECT_EQ(a.magnitude, b.magnitude);
  EXPECT_EQ(a.phase, b.phase);
  EXPECT_EQ(a.background_mask, b.background_mask);
}

TEST(Phantom, EllipsesBackgroundFraction) {
  const Phantom ph = make_phantom(64, 64);
  const double background =
      1.0 - static_cast<double>(mask_count(ph.background_mask)) / (64.0 * 64.0);
  EXPECT_GE(background, 0.3);
  EXPECT_LE(background, 0.7);
}

TEST(Phantom, MagnitudeAndPhaseRanges) {
  const Phantom ph = make_phantom(64, 32);
  for (std::size_t n = 0; n < ph.magnitude.size(); ++n) {
    ASSERT_GE(ph.magnitude[n], 0.0);
    ASSERT_LE(ph.magnitude[n], 1.0);
    ASSERT_GT(ph.phase[n], -std::numbers::pi);
    ASSERT_LT(ph.phase[n], std::numbers::pi);
    ASSERT_EQ(ph.background_mask[n], ph.magnitude[n] > kTissueThreshold);
  }
}

TEST(Phantom, RejectsInvalidDimensions) {
  EXPECT_THROW(make_phantom(4, 4), DimensionError);
  EXPECT_THROW(make_phantom(24, 32), DimensionError);
}

TEST(Sensitivities, SingleCoilIsConstant) {
  const auto maps = make_sensitivities(16, 16, 1, 3);
  ASSERT_EQ(maps.size(), 1u);
  for (std::size_t n = 0; n < maps[0].size(); ++n) {
    ASSERT_EQ(maps[0][n], Complex(1.0, 0.0));
  }
}

TEST(Sensitivities, SumOfSquaresLowerBoundInTissue) {
  const auto maps = make_sensitivities(64, 64, 8, 42);
  const Phantom ph = make_phantom(64, 64);
  const RealVector sos = sum_of_squares(maps);
  for (std::size_t n = 0; n < sos.size(); ++n) {
    if (ph.background_mask[n]) {
      ASSERT_GE(sos[n], 0.1) << n;
    }
  }
  EXPECT_NEAR(norm_inf(sos), 1.0, 1e-12);
}

TEST(Sensitivities, DeterministicPerSeed) {
  const auto a = make_sensitivities(16, 16, 4, 5);
  const auto b = make_sensitivities(16, 16, 4, 5);
  const auto c = make_sensitivities(16, 16, 4, 6);
  for (std::size_t j = 0; j < a.size(); ++j) {
    EXPECT_EQ(a[j], b[j]);
  }
  EXPECT_NE(a[0], c[0]);
  EXPECT_THROW(make_sensitivities(16, 16, 0, 1), ConfigError);
}

TEST(Mask, FullySampledAtUnitAcceleration) {
  const auto mask = make_mask(32, 32, 1.0, 0.08, 1);
  EXPECT_EQ(mask_count(mask), 32u * 32u);
}

TEST(Mask, SamplingFractionAndCenter) {
  const auto mask = make_mask(64, 64, 8.0, 0.06, 7);
  const double frac = static_cast<double>(mask_count(mask)) / (64.0 * 64.0);
  EXPECT_GE(frac, 0.1125);
  EXPECT_LE(frac, 0.1375);
  // DC and its immediate (wrapped) neighbours lie in the fully sampled block.
  EXPECT_TRUE(mask[0]);
  EXPECT_TRUE(mask[1]);
  EXPECT_TRUE(mask[63]);
  EXPECT_TRUE(mask[64]);
  EXPECT_TRUE(mask[63 * 64]);
}

TEST(Mask, DeterministicPerSeedAndValidated) {
  EXPECT_EQ(make_mask(32, 32, 4.0, 0.08, 3), make_mask(32, 32, 4.0, 0.08, 3));
  EXPECT_NE(make_mask(32, 32, 4.0, 0.08, 3), make_mask(32, 32, 4.0, 0.08, 4));
  EXPECT_THROW(make_mask(32, 32, 16.0, 0.5, 1), ConfigError);
  EXPECT_THROW(make_mask(32, 32, 0.5, 0.08, 1), ConfigError);
}

TEST(Noise, ZeroSigmaIsIdentity) {
  SplitMix64 rng(1);
  const ComplexVector x = random_complex(32, rng);
  EXPECT_EQ(add_noise(x, 0.0, 9), x);
  EXPECT_THROW(add_noise(x, -1.0, 9), ConfigError);
}

TEST(Noise, EmpiricalStandardDeviation) {
  const double sigma = 0.37;
  const ComplexVector y = add_noise(ComplexVector(1000000), sigma, 2024);
  double re = 0.0, im = 0.0;
  for (std::size_t n = 0; n < y.size(); ++n) {
    re += y.re()[n] * y.re()[n];
    im += y.im()[n] * y.im()[n];
  }
  const double count = static_cast<double>(y.size());
  EXPECT_NEAR(std::sqrt(re / count), sigma, 0.005 * sigma);
  EXPECT_NEAR(std::sqrt(im / count), sigma, 0.005 * sigma);
}

TEST(Noise, SameSeedSameNoise) {
  SplitMix64 rng(2);
  const ComplexVector x = random_complex(64, rng);
  EXPECT_EQ(add_noise(x, 0.1, 5), add_noise(x, 0.1, 5));
  EXPECT_NE(add_noise(x, 0.1, 5), add_noise(x, 0.1, 6));
}

TEST(Nrmse, Examples) {
  const Phantom ph = make_phantom(32, 32);
  const ComplexVector f = ph.image();
  const auto &mask = ph.background_mask;
  EXPECT_EQ(nrmse(f, f, mask), 0.0);
  EXPECT_NEAR(nrmse(2.0 * f, f, mask), 1.0, 1e-14);
  EXPECT_NEAR(nrmse(ComplexVector(f.size()), f, mask), 1.0, 1e-14);
  EXPECT_THROW(nrmse(f, ComplexVector(f.size()), mask), NumericError);
}

TEST(Nrmse, GlobalPhaseInvariance) {
  SplitMix64 rng(3);
  const ComplexVector truth = random_complex(128, rng);
  const ComplexVector est = truth + 0.1 * random_complex(128, rng);
  const auto mask = palmnut::testing::random_mask(128, 0.6, rng);
  const Complex rot = std::polar(1.0, 1.234);
  ComplexVector est_r(128), truth_r(128);
  for (std::size_t n = 0; n < 128; ++n) {
    est_r.set(n, rot * est[n]);
    truth_r.set(n, rot * truth[n]);
  }
  EXPECT_NEAR(nrmse(est_r, truth_r, mask), nrmse(est, truth, mask), 1e-14);
}

TEST(Nrmse, IndependentOfBackground) {
  SplitMix64 rng(4);
  const ComplexVector truth = random_complex(64, rng);
  ComplexVector est = truth + 0.2 * random_complex(64, rng);
  const auto mask = palmnut::testing::random_mask(64, 0.5, rng);
  const double before = nrmse(est, truth, mask);
  ComplexVector truth2 = truth;
  for (std::size_t n = 0; n < 64; ++n) {
    if (!mask[n]) {
      est.set(n, {100.0, -7.0});
      truth2.set(n, {3.0, 3.0});
    }
  }
  EXPECT_EQ(nrmse(est, truth2, mask), before);
}

TEST(Nrmse, SigmaCalibrationHitsTarget) {
  const Phantom ph = make_phantom(64, 64);
  const ComplexVector f = ph.image();
  const double sigma = sigma_for_nrmse(f, ph.background_mask, 0.15);
  EXPECT_NEAR(nrmse(add_noise(f, sigma, 8), f, ph.background_mask), 0.15, 0.01);
}
