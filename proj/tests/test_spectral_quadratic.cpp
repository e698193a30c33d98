#include <gtest/gtest.h>

#include <cmath>

#include "bbpde/bb_solver.hpp"
#include "bbpde/spectral_quadratic.hpp"

using namespace bbpde;
using namespace bbpde::spectral;

namespace {

BBTrace solve(const PocoInstance& inst, StepRule rule, double eps = 1e-13, bool from_mass = true) {
  BBConfig c;
  c.rule = rule;
  c.eps = eps;
  c.record_gradients = true;
  c.record_iterates = true;
  if (from_mass) c.init = inst.start_from_mass();
  return run(inst.problem, c);
}

}  // namespace

TEST(MakePoco, GeometricSpectrum) {
  auto inst = make_poco(1.0, Decay::geometric(0.5), 3);
  ASSERT_EQ(inst.op.eigenvalues.size(), 4u);
  EXPECT_DOUBLE_EQ(inst.op.eigenvalues[0], 1.0);
  EXPECT_DOUBLE_EQ(inst.op.eigenvalues[1], 2.0);
  EXPECT_DOUBLE_EQ(inst.op.eigenvalues[2], 1.5);
  EXPECT_DOUBLE_EQ(inst.op.eigenvalues[3], 1.25);
  EXPECT_DOUBLE_EQ(rate_constants(inst.op).kappa, 2.0);
  EXPECT_DOUBLE_EQ(rate_constants(make_poco(1.0, Decay::algebraic(2), 10).op).kappa, 2.0);
}

TEST(MakePoco, QLinearRegimeConstants) {
  auto rc = rate_constants(make_poco(2.0, Decay::geometric(0.3), 20).op);
  EXPECT_DOUBLE_EQ(rc.kappa, 1.5);
  EXPECT_DOUBLE_EQ(rc.gamma_A, 0.5);
}

TEST(MakePoco, InvalidArguments) {
  EXPECT_THROW(make_poco(0.0, Decay::geometric(0.5), 5), InvalidArgument);
  EXPECT_THROW(make_poco(1.0, Decay::geometric(1.5), 5), InvalidArgument);
  EXPECT_THROW(make_poco(1.0, Decay::algebraic(-1), 5), InvalidArgument);
  EXPECT_THROW(Decay::parse("cubic:2"), InvalidArgument);
  EXPECT_EQ(Decay::parse("algebraic:2").kind, Decay::Kind::algebraic);
}

TEST(RateConstants, Definitions) {
  auto a = rate_constants(1.0, 1.5);
  EXPECT_DOUBLE_EQ(a.kappa, 1.5);
  EXPECT_DOUBLE_EQ(a.gamma_A, 0.5);
  EXPECT_DOUBLE_EQ(a.rho_A, 1.0 / 3.0);
  auto b = rate_constants(2.0, 2.0);
  EXPECT_EQ(b.kappa, 1.0);
  EXPECT_EQ(b.gamma_A, 0.0);
  EXPECT_EQ(b.rho_A, 0.0);
  auto c = rate_constants(1.0, 4.0);
  EXPECT_DOUBLE_EQ(c.kappa, 4.0);
  EXPECT_DOUBLE_EQ(c.gamma_A, 3.0);
  EXPECT_DOUBLE_EQ(c.rho_A, 0.75);
}

TEST(ComponentTrace, HandRecurrence) {
  auto op = SpectralOperator::from_eigenvalues({1.0, 2.0});
  BBTrace t;
  t.gradients.push_back(make_vector({1, 1}));
  t.records.push_back({1, std::sqrt(2.0), 1.5, {}});
  t.records.push_back({2, 0.0, {}, {}});
  auto ct = component_trace(op, t);
  ASSERT_EQ(ct.components.size(), 2u);
  EXPECT_NEAR(std::abs(ct.components[1][0]), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(std::abs(ct.components[1][1]), 1.0 / 3.0, 1e-15);
}

TEST(ComponentTrace, StepAtEigenvalueAnnihilatesComponent) {
  auto op = SpectralOperator::from_eigenvalues({1.0, 3.0, 5.0});
  BBTrace t;
  t.gradients.push_back(make_vector({1, 1, 1}));
  t.records.push_back({1, std::sqrt(3.0), 3.0, {}});
  t.records.push_back({2, 0.0, {}, {}});
  EXPECT_EQ(component_trace(op, t).components[1][1], 0.0);
}

TEST(ComponentTrace, SingleEigenvalueOneStep) {
  // dyadic data keep every operation exact
  SpectralOperator op = SpectralOperator::from_eigenvalues({0.5}, 0.5);
  SpectralQuadratic q(op, make_vector({0.5}));
  BBConfig c;
  c.init = InitIterateAndStep{make_vector({3.0}), 0.5};
  c.eps = 1e-15;
  c.record_gradients = true;
  BBTrace t = run(q, c);
  ASSERT_EQ(t.records.size(), 2u);
  EXPECT_EQ(t.records[1].grad_norm, 0.0);
  auto ct = component_trace(op, t);
  EXPECT_EQ(ct.components[1][0], 0.0);
}

TEST(ComponentTrace, MatchesDirectCoordinatesAndNorm) {
  auto inst = make_poco(0.1, Decay::algebraic(1.5), 60, 3);
  for (StepRule rule : {StepRule::BB1, StepRule::BB2, StepRule::ABB}) {
    BBTrace t = solve(inst, rule, 1e-10);
    auto ct = component_trace(inst.op, t);
    for (std::size_t k = 0; k < t.records.size(); ++k) {
      const double n2 = t.records[k].grad_norm * t.records[k].grad_norm;
      EXPECT_NEAR(ct.squared_norm(k), n2, 1e-12 * n2 + 1e-300);
      EXPECT_LE((ct.components[k] - t.gradients[k]).norm(), 1e-10 * t.gradients.front().norm());
    }
  }
}

TEST(ComponentTrace, Mismatch) {
  auto inst = make_poco(1.0, Decay::geometric(0.5), 5);
  BBTrace empty;
  EXPECT_THROW(component_trace(inst.op, empty), InvalidArgument);
  BBTrace wrong;
  wrong.gradients.push_back(DenseVector::Ones(3));
  wrong.records.push_back({1, 1.0, {}, {}});
  EXPECT_THROW(component_trace(inst.op, wrong), InvalidArgument);
}

TEST(Spectral, QLinearRateAndTailDecay) {
  auto inst = make_poco(1.5, Decay::geometric(0.6), 40, 9);  // kappa = 5/3 < 2
  const auto rc = rate_constants(inst.op);
  ASSERT_LT(rc.kappa, 2.0);
  const DenseVector lam = inst.op.diagonal();
  const DenseVector ustar = inst.problem.solution();
  for (StepRule rule : {StepRule::BB1, StepRule::BB2, StepRule::ABB}) {
    BBTrace t = solve(inst, rule);
    auto ct = component_trace(inst.op, t);
    for (std::size_t k = 0; k + 1 < t.records.size(); ++k) {
      EXPECT_LE(t.records[k + 1].grad_norm, rc.gamma_A * t.records[k].grad_norm * (1 + 1e-12));
      EXPECT_LE((t.iterates[k + 1] - ustar).norm(), rc.gamma_A * (t.iterates[k] - ustar).norm() * (1 + 1e-12));
      for (Index i = 0; i < lam.size(); ++i)
        if (lam[i] - inst.op.delta_inf <= rc.rho_A * inst.op.delta_inf) {
          EXPECT_LE(std::abs(ct.components[k + 1][i]), rc.rho_A * std::abs(ct.components[k][i]) * (1 + 1e-12) + 1e-300);
        }
    }
  }
}

TEST(Spectral, HalfLifeWithinBound) {
  auto inst = make_poco(1.5, Decay::geometric(0.5), 40, 2);
  auto bound = half_life_bound(inst.op);
  ASSERT_TRUE(bound.has_value());
  for (StepRule rule : {StepRule::BB1, StepRule::BB2, StepRule::ABB}) {
    BBTrace t = solve(inst, rule, 1e-14);
    int m = empirical_half_life(inst.op, t);
    EXPECT_GE(m, 1);
    EXPECT_LE(m, *bound);
  }
}

TEST(Spectral, HalfLifeRegressionAndErrors) {
  // beta = 1, geometric 0.5, n = 50, BB1 from the seeded masses.
  auto inst = make_poco(1.0, Decay::geometric(0.5), 50, 1);
  BBTrace t = solve(inst, StepRule::BB1, 1e-14);
  int m = empirical_half_life(inst.op, t);
  EXPECT_GE(m, 1);
  EXPECT_EQ(m, empirical_half_life(inst.op, solve(inst, StepRule::BB1, 1e-14)));
  BBTrace short_trace = solve(inst, StepRule::BB1, 1e-3);
  EXPECT_THROW(empirical_half_life(inst.op, short_trace), InsufficientData);
  EXPECT_FALSE(half_life_bound(inst.op).has_value());  // kappa = 2
}

TEST(Spectral, RLinearEnvelope) {
  auto inst = make_poco(0.05, Decay::geometric(0.7), 80, 5);
  const DenseVector ustar = inst.problem.solution();
  BBTrace t = solve(inst, StepRule::BB1, 1e-12);
  // feasibility: some theta < 1 with e_k <= c theta^k e_1 for all k, c from the data
  std::vector<double> e;
  for (const auto& u : t.iterates) e.push_back((u - ustar).norm() / (t.iterates.front() - ustar).norm());
  const double K = static_cast<double>(e.size() - 1);
  const double theta = std::pow(e.back() / 1.0, 1.0 / K) * 1.05;
  ASSERT_LT(theta, 1.0);
  double c = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) c = std::max(c, e[k] / std::pow(theta, static_cast<double>(k)));
  EXPECT_TRUE(std::isfinite(c));
  EXPECT_LT(c, 1e6);
}

TEST(Spectral, NonmonotoneWitnessForLargeKappa) {
  auto inst = make_poco(0.05, Decay::geometric(0.8), 100, 11);  // kappa = 21
  ASSERT_GE(rate_constants(inst.op).kappa, 20.0);
  BBTrace t = solve(inst, StepRule::BB1, 1e-10);
  bool increase = false;
  for (std::size_t k = 1; k < t.records.size(); ++k) increase |= t.records[k].grad_norm > t.records[k - 1].grad_norm;
  EXPECT_TRUE(increase);
}
