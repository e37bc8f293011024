#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"

using namespace palmnut;
using palmnut::testing::fd_gradient;
using palmnut::testing::rel_error;
using palmnut::testing::small_denoise_problem;
using palmnut::testing::small_sense_problem;

namespace {

RealVector uniform_real(std::size_t n, SplitMix64 &rng, double scale = 1.0) {
  RealVector v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = scale * (2.0 * rng.uniform() - 1.0);
  }
  return v;
}

ComplexVector random_phase(std::size_t n, SplitMix64 &rng) {
  RealVector p(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = 2.0 * std::numbers::pi * rng.uniform();
  }
  return exp_i(p);
}

MagPhaseProblem sense_l1(std::uint64_t seed) {
  return small_sense_problem(8, 8, seed, L1UnitaryReg(0.03, make_daubechies4(8, 8, 2)));
}

MagPhaseProblem sense_huber(std::uint64_t seed) {
  return small_sense_problem(
      8, 8, seed, HuberStackReg(0.04, 0.1, {make_finite_difference(8, 8)}));
}

} // namespace

TEST(Problem, DataFidelityExamples) {
  const ComplexVector zero(2);
  MagPhaseProblem p(make_identity(2), zero, NoRegularizer{}, NoRegularizer{});
  const RealVector m{1.0, 1.0};
  const ComplexVector q{{1.0, 0.0}, {0.0, 1.0}};
  EXPECT_DOUBLE_EQ(p.data_fidelity(m, q), 1.0);

  MagPhaseProblem exact(make_identity(2), hadamard(m, q), NoRegularizer{}, NoRegularizer{});
  EXPECT_EQ(exact.data_fidelity(m, q), 0.0);
}

TEST(Problem, DataFidelityMatchesElementwiseLoop) {
  SplitMix64 rng(1);
  const std::size_t n = 32;
  const ComplexVector diag = random_complex(n, rng);
  const ComplexVector b = random_complex(n, rng);
  MagPhaseProblem p(make_diagonal(diag), b, NoRegularizer{}, NoRegularizer{});
  const RealVector m = uniform_real(n, rng);
  const ComplexVector q = random_phase(n, rng);
  double expected = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    expected += std::norm(diag[i] * m[i] * q[i] - b[i]);
  }
  EXPECT_LT(rel_error(p.data_fidelity(m, q), 0.5 * expected), 1e-12);
}

TEST(Problem, DimensionMismatchThrows) {
  MagPhaseProblem p(make_identity(4), ComplexVector(4), NoRegularizer{}, NoRegularizer{});
  EXPECT_THROW((void)p.data_fidelity(RealVector(3), ComplexVector(4)), DimensionError);
  EXPECT_THROW((void)p.grad_q(RealVector(4), ComplexVector(5)), DimensionError);
  EXPECT_THROW(MagPhaseProblem(make_identity(4), ComplexVector(3), NoRegularizer{},
                               NoRegularizer{}),
               DimensionError);
}

TEST(Problem, GradMZeroAtGlobalMinimum) {
  SplitMix64 rng(2);
  const RealVector m = uniform_real(6, rng);
  const ComplexVector q = random_phase(6, rng);
  MagPhaseProblem p(make_identity(6), hadamard(m, q), NoRegularizer{}, NoRegularizer{});
  EXPECT_LT(norm_inf(p.grad_m(m, q)), 1e-15);
  EXPECT_LT(norm_inf(abs(p.grad_q(m, q))), 1e-15);
}

TEST(Problem, GradMIsAffineInData) {
  SplitMix64 rng(3);
  const std::size_t n = 16;
  const ComplexVector diag = random_complex(n, rng);
  const ComplexVector b = random_complex(n, rng);
  auto a = make_diagonal(diag);
  MagPhaseProblem p1(a, b, NoRegularizer{}, NoRegularizer{});
  MagPhaseProblem p2(a, 2.0 * b, NoRegularizer{}, NoRegularizer{});
  const RealVector m = uniform_real(n, rng);
  const ComplexVector q = random_phase(n, rng);
  const RealVector expected = p1.grad_m(m, q) - real_conj_product(q, a->adjoint_apply(b));
  EXPECT_LT(norm_inf(p2.grad_m(m, q) - expected), 1e-12);
}

TEST(Problem, GradMFiniteDifferences) {
  SplitMix64 rng(4);
  for (const auto *name : {"denoise", "sense"}) {
    const MagPhaseProblem p = std::string(name) == "denoise" ? small_denoise_problem(4, 4, 5)
                                                              : sense_huber(5);
    for (int t = 0; t < 20; ++t) {
      const RealVector m = uniform_real(p.magnitude_size(), rng);
      const ComplexVector q = random_phase(p.phase_size(), rng);
      auto f = [&](const RealVector &x) { return p.smooth_value(x, q); };
      EXPECT_LT(rel_error(p.grad_m(m, q), fd_gradient(f, m)), 1e-6) << name;
    }
  }
}

TEST(Problem, GradQFiniteDifferences) {
  SplitMix64 rng(6);
  for (const auto *name : {"denoise", "sense"}) {
    const MagPhaseProblem p = std::string(name) == "denoise" ? small_denoise_problem(4, 4, 7)
                                                              : sense_huber(7);
    for (int t = 0; t < 20; ++t) {
      const RealVector m = uniform_real(p.magnitude_size(), rng);
      const ComplexVector q = random_complex(p.phase_size(), rng);
      // smooth_value is defined off the unit circle; only the objective checks it.
      auto f = [&](const ComplexVector &z) { return p.smooth_value(m, z); };
      EXPECT_LT(rel_error(p.grad_q(m, q), fd_gradient(f, q)), 1e-6) << name;
    }
  }
}

TEST(Problem, GradQZeroMagnitudeNoRegularizer) {
  SplitMix64 rng(8);
  MagPhaseProblem p(make_identity(5), random_complex(5, rng), NoRegularizer{},
                    NoRegularizer{});
  EXPECT_EQ(norm_inf(abs(p.grad_q(RealVector(5), random_phase(5, rng)))), 0.0);
}

TEST(Problem, GradQTikhonovWithZeroOperator) {
  SplitMix64 rng(9);
  const std::size_t w = 4, h = 4;
  auto c = make_finite_difference(w, h);
  TikhonovReg r2(0.7, c);
  MagPhaseProblem p(make_diagonal(ComplexVector(w * h)), ComplexVector(w * h),
                    NoRegularizer{}, r2);
  const RealVector m = uniform_real(w * h, rng);
  const ComplexVector q = random_phase(w * h, rng);
  const ComplexVector expected = 0.7 * c->adjoint_apply(c->apply(q));
  EXPECT_LT(norm_inf(abs(p.grad_q(m, q) - expected)), 1e-14);
}

TEST(Problem, GradPMatchesDefinition) {
  SplitMix64 rng(10);
  const MagPhaseProblem p = sense_huber(11);
  const RealVector m = uniform_real(p.magnitude_size(), rng);
  const RealVector ph = uniform_real(p.phase_size(), rng, 3.0);
  const ComplexVector g = p.grad_q(m, exp_i(ph));
  const RealVector gp = grad_p(p, m, ph);
  for (std::size_t n = 0; n < ph.size(); ++n) {
    const double expected = (std::polar(1.0, -ph[n]) * g[n]).imag();
    EXPECT_NEAR(gp[n], expected, 1e-14 * (1.0 + std::abs(expected)));
  }
}

TEST(Problem, GradPFiniteDifferences) {
  SplitMix64 rng(12);
  const MagPhaseProblem p = small_denoise_problem(4, 4, 13);
  for (int t = 0; t < 20; ++t) {
    const RealVector m = uniform_real(p.magnitude_size(), rng);
    const RealVector ph = uniform_real(p.phase_size(), rng, 3.0);
    auto f = [&](const RealVector &x) { return p.objective(m, exp_i(x)); };
    EXPECT_LT(rel_error(grad_p(p, m, ph), fd_gradient(f, ph)), 1e-6);
  }
}

TEST(Problem, GradPZeroMagnitudeAndPeriodicity) {
  SplitMix64 rng(14);
  MagPhaseProblem p0(make_identity(6), random_complex(6, rng), NoRegularizer{},
                     NoRegularizer{});
  EXPECT_EQ(norm_inf(grad_p(p0, RealVector(6), uniform_real(6, rng, 3.0))), 0.0);

  const MagPhaseProblem p = small_denoise_problem(4, 4, 15);
  const RealVector m = uniform_real(16, rng);
  const RealVector ph = uniform_real(16, rng, 3.0);
  const RealVector g = grad_p(p, m, ph);
  for (std::size_t n = 0; n < ph.size(); ++n) {
    RealVector shifted = ph;
    shifted[n] += 2.0 * std::numbers::pi;
    EXPECT_LT(norm_inf(grad_p(p, m, shifted) - g), 1e-12) << n;
  }
}

TEST(Problem, BoundCExamples) {
  MagPhaseProblem plain(make_identity(8), ComplexVector(8), NoRegularizer{}, NoRegularizer{});
  EXPECT_NEAR(plain.bound_c(), 1.01, 1e-9);
  EXPECT_EQ(plain.bound_c(), plain.bound_c());

  // lambda / xi = 4 on the identity transform.
  MagPhaseProblem huber(make_identity(8), ComplexVector(8),
                        HuberStackReg(0.2, 0.05, {make_identity(8)}), NoRegularizer{});
  EXPECT_NEAR(huber.bound_c() - plain.bound_c(), 4.0, 1e-8);

  // l1 is the nonsmooth F term and contributes nothing.
  MagPhaseProblem l1(make_identity(8), ComplexVector(8),
                     L1UnitaryReg(0.5, make_identity(8)), NoRegularizer{});
  EXPECT_EQ(l1.bound_c(), plain.bound_c());
}

TEST(Problem, BoundCAtPhasePoint) {
  MagPhaseProblem p(make_identity(3), ComplexVector(3), NoRegularizer{}, NoRegularizer{});
  SplitMix64 rng(16);
  EXPECT_EQ(p.bound_c(random_phase(3, rng)), p.bound_c());
  const ComplexVector v{{0.0, 2.0}, {0.5, 0.0}, {1.0, 0.0}};
  EXPECT_NEAR(p.bound_c(v), 4.0 * 1.01, 1e-9);
}

TEST(Problem, BoundDExamples) {
  // ||C||^2 = 3 for the diagonal C = diag(sqrt3, 1), lambda = 1.
  TikhonovReg tik(1.0, make_diagonal(ComplexVector{{std::sqrt(3.0), 0.0}, {1.0, 0.0}}));
  MagPhaseProblem p(make_identity(2), ComplexVector(2), NoRegularizer{}, tik);
  EXPECT_NEAR(p.bound_d_scalar(RealVector(2)), 3.0, 1e-8);
  const RealVector d0 = p.bound_d_vector(RealVector(2));
  EXPECT_NEAR(d0[0], 3.0, 1e-8);
  EXPECT_EQ(d0[0], d0[1]);

  MagPhaseProblem plain(make_identity(2), ComplexVector(2), NoRegularizer{}, NoRegularizer{});
  EXPECT_NEAR(plain.bound_d_scalar(RealVector{2.0, -1.0}), 4.0 * 1.01, 1e-9);
  const RealVector d = plain.bound_d_vector(RealVector{1.0, 3.0});
  EXPECT_NEAR(d[0], 1.01, 1e-9);
  EXPECT_NEAR(d[1], 9.09, 1e-9);
}

TEST(Problem, ScalarBoundDominatesVectorBound) {
  SplitMix64 rng(17);
  const MagPhaseProblem p = sense_huber(18);
  for (int t = 0; t < 100; ++t) {
    const RealVector m = uniform_real(p.magnitude_size(), rng, 2.0);
    const double s = p.bound_d_scalar(m);
    EXPECT_LE(norm_inf(p.bound_d_vector(m)), s);
  }
}

TEST(Problem, PhaseBlockMajorantWithVectorBound) {
  SplitMix64 rng(19);
  const MagPhaseProblem p = sense_huber(20);
  const RealVector m = uniform_real(p.magnitude_size(), rng, 1.5);
  const RealVector d = p.bound_d_vector(m);
  auto q_value = [&](const ComplexVector &q) { return p.smooth_value(m, q); };
  for (int t = 0; t < 1000; ++t) {
    const bool free = t % 2 == 1;
    const ComplexVector qh = free ? random_complex(p.phase_size(), rng)
                                  : random_phase(p.phase_size(), rng);
    const ComplexVector q = free ? random_complex(p.phase_size(), rng)
                                 : random_phase(p.phase_size(), rng);
    const ComplexVector diff = q - qh;
    double quad = 0.0;
    for (std::size_t n = 0; n < d.size(); ++n) {
      quad += d[n] * std::norm(diff[n]);
    }
    const double majorant = q_value(qh) + inner(diff, p.grad_q(m, qh)) + 0.5 * quad;
    ASSERT_LE(q_value(q), majorant + 1e-9) << t;
  }
}

TEST(Problem, MagnitudeBlockMajorantWithScalarBound) {
  SplitMix64 rng(21);
  const MagPhaseProblem p = sense_huber(22);
  const double c = p.bound_c();
  for (int t = 0; t < 1000; ++t) {
    const ComplexVector q = random_phase(p.phase_size(), rng);
    const RealVector mh = uniform_real(p.magnitude_size(), rng, 2.0);
    const RealVector m = uniform_real(p.magnitude_size(), rng, 2.0);
    const RealVector diff = m - mh;
    const double majorant =
        p.smooth_value(mh, q) + inner(diff, p.grad_m(mh, q)) + 0.5 * c * norm_sq(diff);
    ASSERT_LE(p.smooth_value(m, q), majorant + 1e-9) << t;
  }
}

TEST(Problem, MagnitudeMajorantOffTheUnitCircle) {
  SplitMix64 rng(23);
  const MagPhaseProblem p = sense_huber(24);
  for (int t = 0; t < 200; ++t) {
    const ComplexVector v = 2.5 * random_complex(p.phase_size(), rng);
    const double c = p.bound_c(v);
    const RealVector mh = uniform_real(p.magnitude_size(), rng, 2.0);
    const RealVector m = uniform_real(p.magnitude_size(), rng, 2.0);
    const RealVector diff = m - mh;
    const double majorant =
        p.smooth_value(mh, v) + inner(diff, p.grad_m(mh, v)) + 0.5 * c * norm_sq(diff);
    ASSERT_LE(p.smooth_value(m, v), majorant + 1e-9) << t;
  }
}

TEST(Problem, CoordinatewiseCurvatureBound) {
  SplitMix64 rng(25);
  auto a = make_sense(8, 8, make_sensitivities(8, 8, 3, 26),
                      palmnut::testing::random_mask(64, 0.4, rng));
  MagPhaseProblem p(a, random_complex(a->codomain_dim(), rng), NoRegularizer{},
                    NoRegularizer{});
  for (int t = 0; t < 500; ++t) {
    const RealVector m = uniform_real(64, rng, 2.0);
    const ComplexVector q1 = random_complex(64, rng);
    const ComplexVector q2 = random_complex(64, rng);
    const ComplexVector dq = q1 - q2;
    const double lhs = inner(p.grad_q(m, q1) - p.grad_q(m, q2), dq);
    double rhs = 0.0;
    for (std::size_t n = 0; n < 64; ++n) {
      rhs += p.a_norm_sq() * m[n] * m[n] * std::norm(dq[n]);
    }
    ASSERT_LE(lhs, rhs + 1e-9) << t;
  }
}

TEST(Problem, ObjectiveDecomposition) {
  SplitMix64 rng(27);
  const MagPhaseProblem p = sense_l1(28);
  const RealVector m = uniform_real(64, rng);
  const ComplexVector q = random_phase(64, rng);
  const double expected = p.data_fidelity(m, q) + regularizer_value(p.r1(), to_complex(m)) +
                          regularizer_value(p.r2(), q);
  EXPECT_LT(rel_error(p.objective(m, q), expected), 1e-12);
  EXPECT_LT(rel_error(p.objective(m, q), p.smooth_value(m, q) + p.magnitude_penalty(m)),
            1e-12);
}

TEST(Problem, ObjectiveWithZeroDataIsPhasePenalty) {
  SplitMix64 rng(29);
  TikhonovReg r2(0.3, make_finite_difference(4, 4));
  MagPhaseProblem p(make_identity(16), ComplexVector(16), NoRegularizer{}, r2);
  const ComplexVector q = random_phase(16, rng);
  EXPECT_LT(rel_error(p.objective(RealVector(16), q), tikhonov_value(q, r2)), 1e-14);
}

TEST(Problem, ObjectiveRejectsModulusViolation) {
  MagPhaseProblem p(make_identity(2), ComplexVector(2), NoRegularizer{}, NoRegularizer{});
  const RealVector m{1.0, 1.0};
  EXPECT_THROW((void)p.objective(m, ComplexVector{{1.0 + 1e-5, 0.0}, {1.0, 0.0}}),
               NumericError);
  EXPECT_NO_THROW((void)p.objective(m, ComplexVector{{1.0 + 1e-8, 0.0}, {1.0, 0.0}}));
}

TEST(Problem, TermAssociation) {
  const MagPhaseProblem smooth = sense_huber(30);
  EXPECT_TRUE(smooth.association().r1_in_smooth_part);
  EXPECT_EQ(smooth.magnitude_subproblem(), MagnitudeSubproblem::smooth);
  const MagPhaseProblem l1 = sense_l1(31);
  EXPECT_FALSE(l1.association().r1_in_smooth_part);
  EXPECT_EQ(l1.magnitude_subproblem(), MagnitudeSubproblem::nonsmooth);
  EXPECT_TRUE(l1.association().r2_in_smooth_part);
}

TEST(Problem, NonsmoothPhaseRegularizerRejected) {
  EXPECT_THROW(MagPhaseProblem(make_identity(8), ComplexVector(8), NoRegularizer{},
                               L1UnitaryReg(0.1, make_identity(8))),
               ConfigError);
  EXPECT_THROW(MultiRepProblem({ComplexVector(8)}, NoRegularizer{},
                               L1UnitaryReg(0.1, make_identity(8))),
               ConfigError);
}

TEST(MultiRep, SingleRepetitionCollapse) {
  SplitMix64 rng(32);
  const std::size_t w = 4, h = 4;
  const ComplexVector b = random_complex(w * h, rng);
  HuberStackReg r1(0.05, 0.1, {make_finite_difference(w, h)});
  TikhonovReg r2(0.2, make_finite_difference(w, h));
  MultiRepProblem multi({b}, r1, r2);
  MagPhaseProblem single(make_identity(w * h), b, r1, r2);
  const RealVector m = uniform_real(w * h, rng);
  const ComplexVector q = random_phase(w * h, rng);
  EXPECT_LT(rel_error(multirep_objective(multi, m, q), single.objective(m, q)), 1e-12);
  EXPECT_LT(norm_inf(multirep_grad_m(multi, m, q) - single.grad_m(m, q)), 1e-12);
  EXPECT_LT(norm_inf(abs(multirep_grad_qj(multi, m, q, 0) - single.grad_q(m, q))), 1e-12);
  EXPECT_EQ(multi.bound_c(), single.bound_c());
}

TEST(MultiRep, GradientsFiniteDifferences) {
  SplitMix64 rng(33);
  const std::size_t w = 4, h = 4, n = w * h, j = 3;
  std::vector<ComplexVector> bs;
  for (std::size_t r = 0; r < j; ++r) {
    bs.push_back(random_complex(n, rng));
  }
  MultiRepProblem p(bs, HuberStackReg(0.05, 0.1, {make_finite_difference(w, h)}),
                    TikhonovReg(0.2, make_finite_difference(w, h)));
  for (int t = 0; t < 20; ++t) {
    const RealVector m = uniform_real(n, rng);
    const ComplexVector q = random_complex(n * j, rng);
    auto fm = [&](const RealVector &x) { return p.smooth_value(x, q); };
    EXPECT_LT(rel_error(p.grad_m(m, q), fd_gradient(fm, m)), 1e-6);
    auto fq = [&](const ComplexVector &z) { return p.smooth_value(m, z); };
    EXPECT_LT(rel_error(p.grad_q(m, q), fd_gradient(fq, q)), 1e-6);
  }
}

TEST(MultiRep, NoiselessDataGivesZeroGradient) {
  SplitMix64 rng(34);
  const ComplexVector b = random_complex(16, rng);
  MultiRepProblem p({b, b, b}, NoRegularizer{}, NoRegularizer{});
  const RealVector m = abs(b);
  ComplexVector q1(16);
  for (std::size_t n = 0; n < 16; ++n) {
    q1.set(n, b[n] / std::abs(b[n]));
  }
  const ComplexVector q = concat({q1, q1, q1});
  EXPECT_LT(norm_inf(p.grad_m(m, q)), 1e-14);
  EXPECT_LT(norm_inf(abs(p.grad_q(m, q))), 1e-14);
  EXPECT_LT(p.objective(m, q), 1e-28);
}

TEST(MultiRep, BoundsScaleWithRepetitions) {
  MultiRepProblem p({ComplexVector(4), ComplexVector(4)}, NoRegularizer{}, NoRegularizer{});
  EXPECT_NEAR(p.bound_c(), 2.0 * 1.01, 1e-9);
  const RealVector d = p.bound_d_vector(RealVector{1.0, 2.0, 0.0, 3.0});
  ASSERT_EQ(d.size(), 8u);
  EXPECT_NEAR(d[1], 4.04, 1e-9);
  EXPECT_EQ(d[1], d[5]);
  EXPECT_THROW(MultiRepProblem({}, NoRegularizer{}, NoRegularizer{}), ConfigError);
}
