#pragma once

// Dirichlet boundary control of -Lap y = f on the unit square with P1
// elements:
//
//   min 1/2 |y - y_d|^2_{L2(Omega)} + beta/2 |u|^2_{L2(Gamma)},  y = u on Gamma.
//
// The control lives on the boundary nodes (trace space of V^h) and the
// reduced gradient is taken in the boundary mass inner product.

#include <cmath>
#include <numbers>
#include <vector>

#include "bbpde/errors.hpp"
#include "bbpde/linalg.hpp"
#include "bbpde/mesh.hpp"

namespace bbpde::fem {

struct PoissonConfig {
  double beta = 0.2;
  int level = 5;
  ScalarField f = [](double, double) { return 0.0; };
  ScalarField y_d = [](double, double) { return 0.0; };

  /// f = 10 sin(pi (x1 + x2)), y_d = (x1^2 + x2^2)^(1/3).
  static PoissonConfig example(double beta, int level) {
    PoissonConfig c;
    c.beta = beta;
    c.level = level;
    c.f = [](double x, double y) { return 10.0 * std::sin(std::numbers::pi * (x + y)); };
    c.y_d = [](double x, double y) { return std::cbrt(x * x + y * y); };
    return c;
  }
};

struct PoissonAssembly {
  UnitSquareMesh mesh;
  SparseMatrix K;        // full stiffness
  SparseMatrix M;        // full mass
  SparseMatrix M_gamma;  // boundary mass, indexed by boundary position
  std::vector<Index> interior;
  std::vector<Index> boundary;
  DenseVector f_h;
  DenseVector yd_h;
  SparseMatrix K_II;
  SparseMatrix K_IB;
  SparseMatrix M_I;  // interior rows of M, all columns
};

inline PoissonAssembly assemble(const PoissonConfig& config) {
  if (config.level < 2) throw InvalidArgument("Poisson mesh level must be >= 2");
  UnitSquareMesh mesh(config.level);
  P1Matrices p1 = assemble_p1(mesh);
  const auto& bnd = mesh.boundary();
  std::vector<std::array<Index, 2>> segs;
  for (std::size_t k = 0; k < bnd.size(); ++k) segs.push_back({bnd[k], bnd[(k + 1) % bnd.size()]});
  SparseMatrix mg_full = assemble_edge_mass(mesh, segs);

  std::vector<Index> all(static_cast<std::size_t>(mesh.num_nodes()));
  for (Index i = 0; i < mesh.num_nodes(); ++i) all[static_cast<std::size_t>(i)] = i;

  PoissonAssembly a{mesh,
                    p1.stiffness,
                    p1.mass,
                    mg_full.submatrix(bnd, bnd),
                    mesh.interior(),
                    bnd,
                    mesh.interpolate(config.f),
                    mesh.interpolate(config.y_d),
                    {},
                    {},
                    {}};
  a.K_II = a.K.submatrix(a.interior, a.interior);
  a.K_IB = a.K.submatrix(a.interior, a.boundary);
  a.M_I = a.M.submatrix(a.interior, all);
  return a;
}

/// Reduced Poisson boundary-control problem; a GradientProblem over
/// (boundary nodes, M_gamma).
class PoissonProblem {
 public:
  explicit PoissonProblem(const PoissonConfig& config)
      : beta_(config.beta), asm_(assemble(config)), space_(asm_.M_gamma) {
    if (!(beta_ > 0.0)) throw InvalidArgument("beta must be positive");
    kii_ = SpdSolver(asm_.K_II);
    mg_ = SpdSolver(asm_.M_gamma);
    mf_I_ = asm_.M_I * asm_.f_h;
  }

  const PoissonAssembly& assembly() const { return asm_; }
  const WeightedSpace& space() const { return space_; }
  Index dimension() const { return static_cast<Index>(asm_.boundary.size()); }
  double beta() const { return beta_; }

  /// Full nodal state: y_B = u, K_II y_I = (M f)_I - K_IB u.
  DenseVector solve_state(const DenseVector& u) const {
    check(u);
    DenseVector yi = kii_.solve(mf_I_ - asm_.K_IB * u);
    return scatter(yi, u);
  }

  /// Full nodal adjoint in V_0^h: K_II p_I = (M (y - y_d))_I.
  DenseVector solve_adjoint(const DenseVector& y) const {
    DenseVector pi = kii_.solve(asm_.M_I * (y - asm_.yd_h));
    return scatter(pi, DenseVector::Zero(dimension()));
  }

  /// K p - M (y - y_d), all nodes. Vanishes on interior rows when p is the adjoint.
  DenseVector green_residual(const DenseVector& p, const DenseVector& y) const {
    return asm_.K * p - asm_.M * (y - asm_.yd_h);
  }

  /// d with (d, phi)_Gamma = (grad p, grad phi) - (y - y_d, phi) for all phi in V^h.
  DenseVector discrete_normal_derivative(const DenseVector& p, const DenseVector& y) const {
    DenseVector r = green_residual(p, y);
    DenseVector rb(dimension());
    for (Index k = 0; k < dimension(); ++k) rb[k] = r[asm_.boundary[static_cast<std::size_t>(k)]];
    return mg_.solve(rb);
  }

  /// G(u) = beta u - d_h(p(u)): M_gamma-Riesz representative of F'(u).
  DenseVector gradient(const DenseVector& u) const {
    DenseVector y = solve_state(u);
    DenseVector p = solve_adjoint(y);
    return beta_ * u - discrete_normal_derivative(p, y);
  }

  double objective(const DenseVector& u) const {
    DenseVector e = solve_state(u) - asm_.yd_h;
    return 0.5 * e.dot(asm_.M * e) + 0.5 * beta_ * u.dot(asm_.M_gamma * u);
  }

 private:
  void check(const DenseVector& u) const {
    if (u.size() != dimension()) throw InvalidArgument("boundary control has wrong dimension");
  }
  DenseVector scatter(const DenseVector& inner, const DenseVector& bnd) const {
    DenseVector full(asm_.mesh.num_nodes());
    for (std::size_t k = 0; k < asm_.interior.size(); ++k) full[asm_.interior[k]] = inner[static_cast<Index>(k)];
    for (std::size_t k = 0; k < asm_.boundary.size(); ++k) full[asm_.boundary[k]] = bnd[static_cast<Index>(k)];
    return full;
  }

  double beta_;
  PoissonAssembly asm_;
  WeightedSpace space_;
  SpdSolver kii_;
  SpdSolver mg_;
  DenseVector mf_I_;
};

}  // namespace bbpde::fem
