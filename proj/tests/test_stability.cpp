#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "adaconv/error.hpp"
#include "adaconv/stability.hpp"
#include "oracles.hpp"

using namespace adaconv;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

HyperParams adam_hp(double alpha = 0.01, double eps = 0.01, double b1 = 0.9,
                    double b2 = 0.99) {
  HyperParams hp;
  hp.alpha = alpha;
  hp.epsilon = eps;
  hp.beta1 = b1;
  hp.beta2 = b2;
  return hp;
}

OptimizerSpec spec_of(Family f, HyperParams hp) {
  OptimizerSpec s;
  s.family = f;
  s.hyper = hp;
  return s;
}

// Closed form through the oracle quadratic for comparison.
EigenvalueList oracle_adam(const HyperParams& hp, const std::vector<double>& mus) {
  EigenvalueList out(mus.size(), Complex(hp.beta2, 0));
  for (double mu : mus) {
    const double phi = (hp.alpha * mu / hp.epsilon) * (1 - hp.beta1);
    for (auto r : oracle::adam_mode_roots(phi, hp.beta1)) out.push_back(r);
  }
  return out;
}

}  // namespace

TEST(Stability, AdamClosedFormExample) {
  const HyperParams hp = adam_hp();
  const auto eigs = adam_closed_form_eigs(hp, spectrum_from_eigenvalues({1.0}));
  ASSERT_EQ(eigs.size(), 3u);
  EXPECT_LT(multiset_distance(eigs, oracle_adam(hp, {1.0})), 1e-14);
  EigenvalueList expect = {{0.99, 0}, {0.9, 0.3}, {0.9, -0.3}};
  EXPECT_LT(multiset_distance(eigs, expect), 1e-14);
  EXPECT_NEAR(std::abs(eigs[1]), std::sqrt(0.9), 1e-12);
  EXPECT_NEAR(std::abs(eigs[1]), 0.948683, 1e-6);
}

TEST(Stability, AdamClosedFormZeroAlpha) {
  HyperParams hp = adam_hp(0.0, 0.01, 0.6, 0.5);
  const auto eigs = adam_closed_form_eigs(hp, spectrum_from_eigenvalues({1.0}));
  EXPECT_LT(multiset_distance(eigs, {{0.5, 0}, {1.0, 0}, {0.6, 0}}), 1e-15);
}

TEST(Stability, AdamClosedFormBoundaryMinusOne) {
  // phi = 2 beta1 + 2 places a root at -1
  HyperParams hp = adam_hp(0.01, 0.01, 0.5, 0.5);
  const double mu = (2 * hp.beta1 + 2) * hp.epsilon / (hp.alpha * (1 - hp.beta1));
  const auto eigs = adam_closed_form_eigs(hp, spectrum_from_eigenvalues({mu}));
  double closest = 1e9;
  for (const Complex& l : eigs) closest = std::min(closest, std::abs(l - Complex(-1, 0)));
  EXPECT_LT(closest, 1e-12);
  EXPECT_FALSE(bound_check(spec_of(Family::kAdam, hp), spectrum_from_eigenvalues({mu})).satisfied);
}

TEST(Stability, AdamComplexBranchModulus) {
  std::mt19937_64 rng(1);
  int complex_seen = 0;
  for (int i = 0; i < 2000; ++i) {
    HyperParams hp = draws::random_hyper(rng);
    const double mu = draws::log_uniform(rng, 1e-2, 10);
    const double phi = (hp.alpha * mu / hp.epsilon) * (1 - hp.beta1);
    const double b = hp.beta1 + 1 - phi;
    if (b * b >= 4 * hp.beta1) continue;
    ++complex_seen;
    const auto eigs = adam_closed_form_eigs(hp, spectrum_from_eigenvalues({mu}));
    EXPECT_NEAR(std::abs(eigs[1]), std::sqrt(hp.beta1), 1e-12);
    EXPECT_NEAR(std::abs(eigs[2]), std::sqrt(hp.beta1), 1e-12);
  }
  EXPECT_GT(complex_seen, 50);
}

TEST(Stability, OtherFamiliesClosedForm) {
  HyperParams hp;
  hp.alpha = 0.01;
  hp.epsilon = 0.01;
  hp.beta = 0.1;
  auto rms = closed_form_eigs(spec_of(Family::kRmsProp, hp), spectrum_from_eigenvalues({2.0}));
  EXPECT_LT(multiset_distance(rms.eigenvalues, {{0.1, 0}, {-1.0, 0}}), 1e-15);
  EXPECT_TRUE(rms.bound_applicable);

  hp.alpha = 1.0;
  hp.beta = 0.95;
  auto ad = closed_form_eigs(spec_of(Family::kAdaDelta, hp), spectrum_from_eigenvalues({1.9}));
  EXPECT_LT(multiset_distance(ad.eigenvalues, {{0.95, 0}, {0.95, 0}, {-0.9, 0}}), 1e-15);
  EXPECT_NEAR(spectral_radius(ad.eigenvalues), 0.95, 1e-15);

  auto ag = closed_form_eigs(spec_of(Family::kAdaGrad, hp), spectrum_from_eigenvalues({1.0}));
  EXPECT_FALSE(ag.bound_applicable);
  EXPECT_EQ(ag.eigenvalues[0], Complex(1.0, 0.0));
  EXPECT_FALSE(bound_check(spec_of(Family::kAdaGrad, hp), spectrum_from_eigenvalues({1.0})).applicable);

  hp.alpha = 0.1;
  auto sgd = closed_form_eigs(spec_of(Family::kSgd, hp), spectrum_from_eigenvalues({0.2, 2.0}));
  EXPECT_LT(multiset_distance(sgd.eigenvalues, {{0.98, 0}, {0.8, 0}}), 1e-15);
}

TEST(Stability, NumericalJacobianAdamAtFixedPoint) {
  const OptimizerSpec spec = spec_of(Family::kAdam, adam_hp());
  const State star = fixed_point(spec, quad1d(), v1(0.0));
  const Matrix jac = numerical_jacobian(spec, quad1d(), star);
  const auto closed = adam_closed_form_eigs(spec.hyper, spectrum_from_eigenvalues({1.0}));
  EXPECT_LT(multiset_distance(eigenvalues(jac), closed), 1e-8);
}

TEST(Stability, NumericalJacobianRmsPropBlocks) {
  HyperParams hp;
  hp.alpha = 0.01;
  hp.epsilon = 0.05;
  hp.beta = 0.3;
  const OptimizerSpec spec = spec_of(Family::kRmsProp, hp);
  const Objective obj = twodim();
  const State star = fixed_point(spec, obj, *obj.minimum());
  const Matrix jac = numerical_jacobian(spec, obj, star);
  Matrix expect = Matrix::Zero(4, 4);
  expect.topLeftCorner(2, 2) = 0.3 * Matrix::Identity(2, 2);
  expect.bottomRightCorner(2, 2) =
      Matrix::Identity(2, 2) - (hp.alpha / hp.epsilon) * obj.hessian(*obj.minimum());
  EXPECT_LT((jac - expect).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Stability, NumericalJacobianAdaDeltaDiagonal) {
  HyperParams hp;
  hp.alpha = 0.5;
  hp.epsilon = 0.1;
  hp.beta = 0.7;
  const OptimizerSpec spec = spec_of(Family::kAdaDelta, hp);
  const Objective obj = quartic();
  const State star = fixed_point(spec, obj, v1(-0.75));
  const Matrix jac = numerical_jacobian(spec, obj, star);
  Matrix expect = Matrix::Zero(3, 3);
  expect(0, 0) = 0.7;
  expect(1, 1) = 0.7;
  expect(2, 2) = 1 - 0.5 * 2.25;
  EXPECT_LT((jac - expect).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Stability, ClosedFormMatchesNumericalRandomDraws) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 200; ++i) {
    OptimizerSpec spec = spec_of(draws::random_family(rng), draws::random_hyper(rng));
    const Objective obj = draws::random_objective(rng);
    const State star = fixed_point(spec, obj, *obj.minimum());
    const auto closed = closed_form_eigs(spec, hessian_spectrum(obj, *obj.minimum()));
    const auto numeric = eigenvalues(numerical_jacobian(spec, obj, star));
    ASSERT_LT(multiset_distance(closed.eigenvalues, numeric), 1e-7)
        << to_string(spec.family) << " " << obj.id() << " alpha=" << spec.hyper.alpha
        << " eps=" << spec.hyper.epsilon;
  }
}

TEST(Stability, SpectralRadius) {
  EXPECT_DOUBLE_EQ(spectral_radius({{0.99, 0}, {0.9, 0.3}, {0.9, -0.3}}), 0.99);
  EXPECT_EQ(spectral_radius({{1, 0}}), 1.0);
  EXPECT_THROW(spectral_radius({}), UsageError);
}

TEST(Stability, MultisetDistance) {
  EXPECT_EQ(multiset_distance({{1, 0}, {2, 0}}, {{2, 0}, {1, 0}}), 0.0);
  EXPECT_NEAR(multiset_distance({{1, 1}, {1, -1}}, {{1, -1.1}, {1, 1}}), 0.1, 1e-15);
  EXPECT_THROW(multiset_distance({{1, 0}}, {}), UsageError);
}

TEST(Stability, BoundCheckExamples) {
  auto v = bound_check(spec_of(Family::kAdam, adam_hp()), spectrum_from_eigenvalues({1.0}));
  EXPECT_NEAR(v.lhs, 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(v.rhs, 3.8);
  EXPECT_TRUE(v.satisfied);
  EXPECT_NEAR(v.margin, 3.7, 1e-15);

  HyperParams hp;
  hp.alpha = 1.0;
  v = bound_check(spec_of(Family::kAdaDelta, hp), spectrum_from_eigenvalues({2.1}));
  EXPECT_EQ(v.lhs, 2.1);
  EXPECT_EQ(v.rhs, 2.0);
  EXPECT_FALSE(v.satisfied);

  hp.alpha = 0.01;
  hp.epsilon = 0.01;
  v = bound_check(spec_of(Family::kRmsProp, hp), spectrum_from_eigenvalues({2.0}));
  EXPECT_EQ(v.lhs, 2.0);
  EXPECT_EQ(v.rhs, 2.0);
  EXPECT_FALSE(v.satisfied);
  EXPECT_EQ(v.satisfied, v.lhs < v.rhs);

  v = bound_check(spec_of(Family::kSgd, hp), spectrum_from_eigenvalues({-1.0, 3.0}));
  EXPECT_TRUE(v.non_positive_definite);
  ASSERT_EQ(v.mode_margins.size(), 2u);
  EXPECT_DOUBLE_EQ(v.mode_margins[0], 201.0);
}

TEST(Stability, ClassicalBoundExamples) {
  auto c = classical_bounds(adam_hp(0.01, 0.01, 0.9, 0.99));
  EXPECT_NEAR(c.kingma.lhs, 0.81, 1e-15);
  EXPECT_NEAR(c.kingma.rhs, 0.994987, 1e-6);
  EXPECT_TRUE(c.kingma.satisfied);
  EXPECT_TRUE(c.reddi.satisfied);
  c = classical_bounds(adam_hp(0.01, 0.01, 0.99, 0.5));
  EXPECT_NEAR(c.reddi.rhs, 0.7071, 1e-4);
  EXPECT_FALSE(c.reddi.satisfied);
  c = classical_bounds(adam_hp(0.01, 0.01, 0.9, 0.1));
  EXPECT_NEAR(c.kingma.rhs, 0.3162, 1e-4);
  EXPECT_FALSE(c.kingma.satisfied);
}

TEST(Stability, EpsilonBoundaryExamples) {
  EXPECT_NEAR(epsilon_boundary(adam_hp(0.01, 0.01, 0.9), 1.0), 2.6315789e-4, 1e-11);
  EXPECT_NEAR(epsilon_boundary(adam_hp(0.01, 0.01, 0.9), 1.0) / (0.01 * 0.1 / 3.8), 1.0, 1e-15);
  EXPECT_EQ(epsilon_boundary(adam_hp(0.0, 0.01, 0.9), 1.0), 0.0);
  EXPECT_NEAR(epsilon_boundary(adam_hp(0.001, 0.01, 0.9), 2.0), 5.263e-5, 1e-8);
  EXPECT_THROW(epsilon_boundary(adam_hp(-1.0), 1.0), DomainError);
}

TEST(Stability, BoundImpliesStableRandomDraws) {
  std::mt19937_64 rng(77);
  int satisfied = 0;
  for (int i = 0; i < 1000; ++i) {
    const HyperParams hp = draws::random_hyper(rng);
    const auto spectrum = spectrum_from_eigenvalues({draws::log_uniform(rng, 1e-2, 10)});
    for (Family f : {Family::kAdam, Family::kRmsProp, Family::kAdaDelta, Family::kSgd}) {
      const OptimizerSpec spec = spec_of(f, hp);
      if (!bound_check(spec, spectrum).satisfied) continue;
      ++satisfied;
      ASSERT_LT(spectral_radius(closed_form_eigs(spec, spectrum).eigenvalues), 1.0);
    }
  }
  EXPECT_GT(satisfied, 500);
}

TEST(Stability, EpsilonMarginMonotone) {
  // rho < 1 for every eps above the boundary, >= 1 just below it
  for (double mu : {1.0, 2.25}) {
    HyperParams hp = adam_hp(0.01, 0.01, 0.9, 0.99);
    const auto spectrum = spectrum_from_eigenvalues({mu});
    const double eps_star = epsilon_boundary(hp, mu);
    for (int k = 0; k <= 200; ++k) {
      hp.epsilon = eps_star * std::pow(10.0, 4.0 * k / 200.0) * (1 + 1e-9);
      EXPECT_LT(spectral_radius(adam_closed_form_eigs(hp, spectrum)), 1.0) << hp.epsilon;
    }
    for (double delta : {1e-6, 1e-3, 0.1}) {
      hp.epsilon = eps_star * (1 - delta);
      EXPECT_GE(spectral_radius(adam_closed_form_eigs(hp, spectrum)), 1.0) << delta;
    }
  }
}

TEST(Stability, AnalyzeReport) {
  const OptimizerSpec spec = spec_of(Family::kAdam, adam_hp());
  const StabilityReport r = analyze(spec, quad1d(), v1(0.0));
  EXPECT_NEAR(r.spectral_radius, 0.99, 1e-12);
  EXPECT_EQ(r.our_bound_satisfied(), std::optional<bool>(true));
  EXPECT_EQ(r.kingma_bound_satisfied(), std::optional<bool>(true));
  ASSERT_TRUE(r.epsilon_boundary.has_value());
  EXPECT_NEAR(*r.epsilon_boundary, 2.631578947368421e-4, 1e-15);
  double max_mod = 0;
  for (const Complex& l : r.eigenvalues) max_mod = std::max(max_mod, std::abs(l));
  EXPECT_NEAR(r.spectral_radius, max_mod, 1e-12);

  const StabilityReport g = analyze(spec_of(Family::kAdaGrad, adam_hp()), quad1d(), v1(0.0));
  EXPECT_FALSE(g.our_bound_satisfied().has_value());
  EXPECT_FALSE(g.kingma_bound_satisfied().has_value());
  EXPECT_THROW(analyze(spec, quartic(), v1(0.5)), NotCriticalPointError);
}
