#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"

using namespace palmnut;
using palmnut::testing::dot_test;
using palmnut::testing::random_mask;
using palmnut::testing::rel_error;

namespace {

// Direct O(N^2) unitary 2D DFT, row-major, DC at index 0.
ComplexVector direct_dft(const ComplexVector &x, std::size_t w, std::size_t h) {
  ComplexVector y(w * h);
  const double scale = 1.0 / std::sqrt(static_cast<double>(w * h));
  for (std::size_t kr = 0; kr < h; ++kr) {
    for (std::size_t kc = 0; kc < w; ++kc) {
      Complex acc = 0.0;
      for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
          const double ph = -2.0 * std::numbers::pi *
                            (static_cast<double>(kr * r) / static_cast<double>(h) +
                             static_cast<double>(kc * c) / static_cast<double>(w));
          acc += x[r * w + c] * std::polar(1.0, ph);
        }
      }
      y.set(kr * w + kc, scale * acc);
    }
  }
  return y;
}

std::vector<std::pair<std::string, OperatorPtr>> all_operator_kinds() {
  SplitMix64 rng(99);
  const std::size_t w = 8, h = 8;
  auto mask = random_mask(w * h, 0.4, rng);
  auto maps = make_sensitivities(w, h, 3, 4);
  auto fd = make_finite_difference(w, h);
  auto d4 = make_daubechies4(w, h, 2);
  return {
      {"identity", make_identity(w * h)},
      {"diagonal", make_diagonal(random_complex(w * h, rng))},
      {"masked_dft", make_masked_dft(w, h, mask)},
      {"sense", make_sense(w, h, maps, mask)},
      {"finite_difference", fd},
      {"finite_difference_1d", make_finite_difference(8, 1, DifferenceAxes::horizontal)},
      {"daubechies4", d4},
      {"daubechies4_1d", make_daubechies4(64, 1, 3)},
      {"composite", compose(fd, d4)},
      {"stacked", stack({fd, d4, make_identity(w * h)})},
  };
}

} // namespace

TEST(Operators, IdentityExample) {
  const ComplexVector x{{1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}, {-2.0, 0.0}};
  EXPECT_EQ(make_identity(4)->apply(x), x);
  EXPECT_EQ(make_identity(4)->adjoint_apply(x), x);
}

TEST(Operators, DiagonalExamples) {
  auto d = make_diagonal(ComplexVector{{2.0, 0.0}, {3.0, 0.0}});
  const ComplexVector y = d->apply(ComplexVector{{1.0, 0.0}, {1.0, 0.0}});
  EXPECT_EQ(y[0], Complex(2.0, 0.0));
  EXPECT_EQ(y[1], Complex(3.0, 0.0));
  auto d2 = make_diagonal(ComplexVector{{0.0, 2.0}});
  EXPECT_EQ(d2->adjoint_apply(ComplexVector{{1.0, 0.0}})[0], Complex(0.0, -2.0));
}

TEST(Operators, DimensionMismatchThrows) {
  auto op = make_identity(4);
  EXPECT_THROW(op->apply(ComplexVector(3)), DimensionError);
  EXPECT_THROW(op->adjoint_apply(ComplexVector(5)), DimensionError);
  EXPECT_THROW(compose(make_identity(3), make_identity(4)), DimensionError);
}

TEST(Operators, MaskedDftMatchesDirectDft) {
  SplitMix64 rng(1);
  const std::size_t w = 8, h = 4;
  const ComplexVector x = random_complex(w * h, rng);
  auto full = make_masked_dft(w, h, std::vector<bool>(w * h, true));
  EXPECT_LT(norm_inf(abs(full->apply(x) - direct_dft(x, w, h))), 1e-12);
}

TEST(Operators, MaskedDftFullMaskRoundTrip) {
  SplitMix64 rng(2);
  const ComplexVector x = random_complex(16, rng);
  auto op = make_masked_dft(4, 4, std::vector<bool>(16, true));
  EXPECT_LT(norm_inf(abs(op->adjoint_apply(op->apply(x)) - x)), 1e-12);
}

TEST(Operators, MaskedDftCodomainHoldsSampledEntries) {
  std::vector<bool> mask(16, false);
  mask[0] = mask[5] = mask[15] = true;
  auto op = make_masked_dft(4, 4, mask);
  EXPECT_EQ(op->codomain_dim(), 3u);
  SplitMix64 rng(3);
  const ComplexVector x = random_complex(16, rng);
  const ComplexVector k = direct_dft(x, 4, 4);
  const ComplexVector y = op->apply(x);
  EXPECT_LT(std::abs(y[0] - k[0]), 1e-12);
  EXPECT_LT(std::abs(y[1] - k[5]), 1e-12);
  EXPECT_LT(std::abs(y[2] - k[15]), 1e-12);
  EXPECT_THROW(make_masked_dft(4, 4, std::vector<bool>(16, false)), DimensionError);
}

TEST(Operators, SenseMatchesCoilwiseDefinition) {
  SplitMix64 rng(4);
  const std::size_t w = 4, h = 4;
  auto maps = make_sensitivities(w, h, 2, 8);
  auto mask = random_mask(w * h, 0.5, rng);
  auto op = make_sense(w, h, maps, mask);
  auto pf = make_masked_dft(w, h, mask);
  const ComplexVector x = random_complex(w * h, rng);
  std::vector<ComplexVector> blocks;
  for (const auto &s : maps) {
    ComplexVector sx(w * h);
    for (std::size_t n = 0; n < sx.size(); ++n) {
      sx.set(n, s[n] * x[n]);
    }
    blocks.push_back(pf->apply(sx));
  }
  EXPECT_LT(norm_inf(abs(op->apply(x) - concat(blocks))), 1e-12);
}

TEST(Operators, FiniteDifferenceIsPeriodicForward) {
  // 1D horizontal differences on length 4: y_n = x_{n+1} - x_n, wrapping.
  auto op = make_finite_difference(4, 1, DifferenceAxes::horizontal);
  const ComplexVector x{{1.0, 0.0}, {3.0, 0.0}, {6.0, 0.0}, {10.0, 0.0}};
  const ComplexVector y = op->apply(x);
  EXPECT_EQ(y[0], Complex(2.0, 0.0));
  EXPECT_EQ(y[1], Complex(3.0, 0.0));
  EXPECT_EQ(y[2], Complex(4.0, 0.0));
  EXPECT_EQ(y[3], Complex(-9.0, 0.0));
}

TEST(Operators, DotTestEveryKind) {
  SplitMix64 rng(5);
  for (const auto &[name, op] : all_operator_kinds()) {
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      worst = std::max(worst, dot_test(*op, rng));
    }
    EXPECT_LT(worst, 1e-10) << name;
  }
}

TEST(Operators, FiniteDifferenceLength8DotTest) {
  SplitMix64 rng(6);
  auto op = make_finite_difference(8, 1, DifferenceAxes::horizontal);
  for (int t = 0; t < 100; ++t) {
    EXPECT_LT(dot_test(*op, rng), 1e-10);
  }
}

TEST(Operators, Daubechies4IsUnitary) {
  SplitMix64 rng(7);
  auto op = make_daubechies4(16, 16, 3);
  EXPECT_TRUE(op->is_unitary());
  for (int t = 0; t < 20; ++t) {
    const ComplexVector x = random_complex(256, rng);
    EXPECT_LT(rel_error(norm2(op->apply(x)), norm2(x)), 1e-12);
  }
}

TEST(Operators, CompositeEqualsSequentialBitwise) {
  SplitMix64 rng(8);
  auto fd = make_finite_difference(8, 8);
  auto d4 = make_daubechies4(8, 8, 2);
  auto comp = compose(fd, d4);
  const ComplexVector x = random_complex(64, rng);
  EXPECT_EQ(comp->apply(x), fd->apply(d4->apply(x)));
  const ComplexVector y = random_complex(128, rng);
  EXPECT_EQ(comp->adjoint_apply(y), d4->adjoint_apply(fd->adjoint_apply(y)));
}

TEST(Operators, ApplicationIsPure) {
  SplitMix64 rng(9);
  for (const auto &[name, op] : all_operator_kinds()) {
    const ComplexVector x = random_complex(op->domain_dim(), rng);
    EXPECT_EQ(op->apply(x), op->apply(x)) << name;
  }
}

TEST(SpectralNorm, PowerIterationExamples) {
  EXPECT_NEAR(spectral_norm_sq(*make_identity(10)), 1.0, 1e-9);
  EXPECT_NEAR(spectral_norm_sq(*make_diagonal(ComplexVector{{1, 0}, {2, 0}, {3, 0}})), 9.0, 1e-9);
  EXPECT_NEAR(spectral_norm_sq(*make_finite_difference(16, 16)), 8.0, 1e-6);
}

TEST(SpectralNorm, LanczosExamples) {
  EXPECT_NEAR(spectral_norm_sq_lanczos(*make_identity(10)), 1.0, 1e-9);
  EXPECT_NEAR(spectral_norm_sq_lanczos(*make_diagonal(ComplexVector{{1, 0}, {2, 0}, {3, 0}})),
              9.0, 1e-9);
  EXPECT_NEAR(spectral_norm_sq_lanczos(*make_finite_difference(16, 16)), 8.0, 1e-6);
  // Clustered top of the spectrum.
  EXPECT_NEAR(spectral_norm_sq_lanczos(*make_finite_difference(128, 64)), 8.0, 1e-5);
}

TEST(SpectralNorm, EstimatesFromBelow) {
  SplitMix64 rng(10);
  const ComplexVector d = random_complex(40, rng);
  const double exact = std::pow(norm_inf(abs(d)), 2);
  EXPECT_LE(spectral_norm_sq(*make_diagonal(d)), exact * (1.0 + 1e-12));
  EXPECT_LE(spectral_norm_sq_lanczos(*make_diagonal(d)), exact * (1.0 + 1e-12));
  EXPECT_NEAR(spectral_norm_sq(*make_diagonal(d)), exact, 1e-6 * exact);
}

TEST(SpectralNorm, NonConvergenceCarriesLastEstimate) {
  try {
    (void)spectral_norm_sq(*make_finite_difference(128, 64), 1e-12, 5);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError &e) {
    EXPECT_GT(e.last_estimate(), 0.0);
    EXPECT_LE(e.last_estimate(), 8.0);
  }
  EXPECT_THROW((void)spectral_norm_sq(*make_identity(3), 0.0, 10), std::invalid_argument);
}

TEST(SpectralNorm, SenseFullySampledEqualsMaxSumOfSquares) {
  auto maps = make_sensitivities(16, 16, 4, 3);
  auto op = make_sense(16, 16, maps, std::vector<bool>(256, true));
  const double expected = std::pow(norm_inf(sum_of_squares(maps)), 2);
  EXPECT_NEAR(spectral_norm_sq_lanczos(*op), expected, 1e-6);
}
