#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bbpde/linalg.hpp"
#include "bbpde/mesh.hpp"

using namespace bbpde;

namespace {

DenseVector random_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  DenseVector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

// Random sparse SPD matrix: B^T B + shift I with B banded.
SparseMatrix random_spd(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TripletBuilder b(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = std::max<Index>(0, i - 2); j <= std::min(n - 1, i + 2); ++j) b.add(i, j, u(rng));
  SparseMatrix B = b.finalize(false);
  SparseMatrix::Storage a = B.storage().transpose() * B.storage();
  SparseMatrix::Storage id(n, n);
  id.setIdentity();
  a += 0.5 * id;
  return SparseMatrix(a, true);
}

}  // namespace

TEST(Wdot, IdentityGram) {
  auto w = WeightedSpace::euclidean(2);
  EXPECT_DOUBLE_EQ(wdot(w, make_vector({1, 2}), make_vector({3, 4})), 11.0);
}

TEST(Wdot, DiagonalGram) {
  WeightedSpace w(SparseMatrix::diagonal(make_vector({2, 3})));
  EXPECT_DOUBLE_EQ(wdot(w, make_vector({1, 1}), make_vector({1, 1})), 5.0);
}

TEST(Wdot, IntervalMassIntegratesOne) {
  // two elements, all three nodes: full 1D mass on [0,1]
  TripletBuilder m(3, 3);
  for (Index e = 0; e < 2; ++e) {
    m.add(e, e, 1.0 / 6);
    m.add(e + 1, e + 1, 1.0 / 6);
    m.add(e, e + 1, 1.0 / 12);
    m.add(e + 1, e, 1.0 / 12);
  }
  WeightedSpace w(m.finalize(true));
  EXPECT_NEAR(wdot(w, DenseVector::Ones(3), DenseVector::Ones(3)), 1.0, 1e-15);
}

TEST(Wdot, DimensionMismatchThrows) {
  auto w = WeightedSpace::euclidean(3);
  EXPECT_THROW(wdot(w, DenseVector::Ones(2), DenseVector::Ones(3)), InvalidArgument);
  EXPECT_THROW(wnorm(w, DenseVector::Ones(4)), InvalidArgument);
}

TEST(Wnorm, Examples) {
  EXPECT_DOUBLE_EQ(wnorm(WeightedSpace::euclidean(2), make_vector({3, 4})), 5.0);
  WeightedSpace w(SparseMatrix::diagonal(DenseVector::Constant(10, 4.0)));
  EXPECT_DOUBLE_EQ(wnorm(w, DenseVector::Zero(10)), 0.0);
  EXPECT_NEAR(wnorm(w, DenseVector::Ones(10)), std::sqrt(40.0), 1e-14);
}

TEST(Wdot, BilinearSymmetricCauchySchwarz) {
  std::mt19937_64 rng(7);
  fem::UnitSquareMesh mesh(3);
  WeightedSpace w(fem::assemble_p1(mesh).mass);
  const Index n = w.dimension();
  for (int trial = 0; trial < 20; ++trial) {
    DenseVector u = random_vector(n, rng), v = random_vector(n, rng), z = random_vector(n, rng);
    const double a = 1.7, b = -0.3;
    double lhs = wdot(w, a * u + b * v, z);
    double rhs = a * wdot(w, u, z) + b * wdot(w, v, z);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * (std::abs(a * wdot(w, u, z)) + std::abs(b * wdot(w, v, z))));
    EXPECT_LE(std::abs(wdot(w, u, v) - wdot(w, v, u)), 1e-14 * wnorm(w, u) * wnorm(w, v));
    EXPECT_LE(std::pow(wdot(w, u, v), 2), wdot(w, u, u) * wdot(w, v, v) * (1 + 1e-12));
    EXPECT_GT(wdot(w, u, u), 0.0);
  }
}

TEST(TripletBuilder, SumsDuplicatesAndSymmetrizes) {
  TripletBuilder t(2, 2);
  t.add(0, 0, 1.0);
  t.add(0, 0, 2.0);
  t.add(0, 1, 1.0);
  t.add(1, 0, 1.0 + 1e-17);
  t.add(1, 1, 4.0);
  SparseMatrix a = t.finalize(true);
  EXPECT_DOUBLE_EQ(a.coeff(0, 0), 3.0);
  EXPECT_EQ(a.coeff(0, 1), a.coeff(1, 0));
  EXPECT_TRUE(a.symmetric());
  EXPECT_THROW(t.add(2, 0, 1.0), InvalidArgument);
}

TEST(SolveSpd, SmallExamples) {
  DenseVector x = solve_spd(SparseMatrix::diagonal(make_vector({2, 4})), make_vector({2, 4}));
  EXPECT_NEAR(x[0], 1.0, 1e-14);
  EXPECT_NEAR(x[1], 1.0, 1e-14);
  x = solve_spd(SparseMatrix::from_rows({{2, 1}, {1, 2}}), make_vector({3, 3}));
  EXPECT_NEAR(x[0], 1.0, 1e-14);
  EXPECT_NEAR(x[1], 1.0, 1e-14);
}

TEST(SolveSpd, OneDimensionalLaplacianIsNodallyExact) {
  // -y'' = 1 on (0,1), y(0)=y(1)=0; P1 with h = 1/4 is nodally exact.
  fem::IntervalMesh mesh(2);
  auto p1 = fem::assemble_p1_interval(mesh);
  // interior rows of the full mass times the all-ones vector: int phi_i = h
  DenseVector b = DenseVector::Constant(3, mesh.h());
  DenseVector y = solve_spd(p1.stiffness, b);
  for (Index i = 0; i < 3; ++i) {
    double x = mesh.x(i + 1);
    EXPECT_NEAR(y[i], x * (1 - x) / 2, 1e-12);
  }
}

TEST(SolveSpd, ResidualBoundOnRandomSpd) {
  std::mt19937_64 rng(11);
  for (Index n : {5, 40, 300}) {
    SparseMatrix a = random_spd(n, rng);
    DenseVector b = random_vector(n, rng);
    DenseVector x = solve_spd(a, b, 1e-12);
    EXPECT_LE((a * x - b).norm(), 1e-12 * b.norm());
  }
}

TEST(SolveSpd, IterativePathAgreesWithDirect) {
  std::mt19937_64 rng(3);
  SparseMatrix a = random_spd(400, rng);
  DenseVector b = random_vector(400, rng);
  SolveOptions it;
  it.direct_threshold = 10;  // force PCG
  DenseVector x1 = SpdSolver(a, it).solve(b);
  DenseVector x2 = SpdSolver(a).solve(b);
  EXPECT_LE((a * x1 - b).norm(), 1e-12 * b.norm());
  EXPECT_LE((x1 - x2).norm(), 1e-9 * x2.norm());
}

TEST(SolveSpd, IndefiniteIsRejected) {
  SparseMatrix a = SparseMatrix::from_rows({{1, 0}, {0, -1}});
  EXPECT_THROW(solve_spd(a, make_vector({1, 1})), MatrixNotSpd);
  SolveOptions it;
  it.direct_threshold = 1;
  SparseMatrix c = SparseMatrix::from_rows({{1, 2}, {2, 1}});
  EXPECT_THROW(SpdSolver(c, it).solve(make_vector({1, -1})), MatrixNotSpd);
}

TEST(SolveGeneral, Examples) {
  DenseVector x = solve_general(SparseMatrix::from_rows({{1, 1}, {0, 1}}), make_vector({2, 1}));
  EXPECT_NEAR(x[0], 1.0, 1e-14);
  EXPECT_NEAR(x[1], 1.0, 1e-14);
  DenseVector b = make_vector({0.3, -2.0, 7.5});
  EXPECT_EQ(solve_general(SparseMatrix::identity(3), b), b);
  EXPECT_THROW(solve_general(SparseMatrix::from_rows({{1, 1}, {1, 1}}), make_vector({1, 2})), SolverFailure);
}

TEST(SolveGeneral, BurgersJacobianAtZeroMatchesSpd) {
  // At y = 0 the convection Jacobian vanishes and M/dt + nu K is SPD.
  fem::IntervalMesh mesh(6);
  auto p1 = fem::assemble_p1_interval(mesh);
  SparseMatrix j = p1.mass.scaled(16.0) + p1.stiffness.scaled(0.01);
  std::mt19937_64 rng(5);
  DenseVector b = random_vector(j.rows(), rng);
  DenseVector xg = solve_general(SparseMatrix(j.storage(), false), b);
  DenseVector xs = solve_spd(j, b);
  EXPECT_LE((xg - xs).norm(), 1e-10 * xs.norm());
}

TEST(SparseMatrix, SubmatrixAndBlockDiagonal) {
  SparseMatrix a = SparseMatrix::from_rows({{4, 1, 0}, {1, 5, 2}, {0, 2, 6}});
  std::vector<Index> idx{0, 2};
  SparseMatrix s = a.submatrix(idx, idx);
  EXPECT_EQ(s.rows(), 2);
  EXPECT_DOUBLE_EQ(s.coeff(1, 1), 6.0);
  EXPECT_DOUBLE_EQ(s.coeff(0, 1), 0.0);
  SparseMatrix bd = s.block_diagonal(3, 0.5);
  EXPECT_EQ(bd.rows(), 6);
  EXPECT_DOUBLE_EQ(bd.coeff(5, 5), 3.0);
  EXPECT_DOUBLE_EQ(bd.coeff(1, 2), 0.0);
  EXPECT_THROW(a * DenseVector::Ones(2), InvalidArgument);
}
