#pragma once

// Distributed control of viscous Burgers on (0,1),
//
//   y_t - nu y_xx + y y_x = B u + f,  y(t,0) = y(t,1) = 0,
//
// with u supported in (0.1, 0.4). P1 in space, implicit Euler in time,
// Newton per step. Gradients are the exact transpose of the converged scheme.

#include <cmath>
#include <functional>
#include <vector>

#include "bbpde/errors.hpp"
#include "bbpde/linalg.hpp"
#include "bbpde/mesh.hpp"

namespace bbpde::fem {

using LineField = std::function<double(double x)>;
using LineTimeField = std::function<double(double t, double x)>;

struct BurgersConfig {
  double nu = 0.01;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double beta = 0.5;
  int level = 5;
  double dt = 1.0 / 16.0;
  double T = 1.0;
  double control_lo = 0.1;
  double control_hi = 0.4;
  LineField y0 = [](double) { return 0.0; };
  LineTimeField f = [](double, double) { return 0.0; };
  LineTimeField y_d = [](double, double) { return 0.0; };
  LineField z_d = [](double) { return 0.0; };
  double newton_tol = 1e-13;
  int newton_max = 30;

  /// nu = 0.01, y0 = 5 exp(-20 (x - 0.5)^2), y_d = z_d = f = 0.
  static BurgersConfig example(double beta, int level, double dt) {
    BurgersConfig c;
    c.beta = beta;
    c.level = level;
    c.dt = dt;
    c.y0 = [](double x) { return 5.0 * std::exp(-20.0 * (x - 0.5) * (x - 0.5)); };
    return c;
  }
};

/// c(y)_j = int y y_x phi_j and its Jacobian, over the interior nodes of an
/// interval mesh (boundary values zero).
struct Convection {
  DenseVector c;
  SparseMatrix C;
};

inline Convection assemble_nonlinear(const IntervalMesh& mesh, const DenseVector& y) {
  const Index ni = mesh.num_elements() - 1;
  if (y.size() != ni) throw InvalidArgument("nodal vector does not match the interval mesh");
  DenseVector c = DenseVector::Zero(ni);
  TripletBuilder jac(ni, ni);
  jac.reserve(static_cast<std::size_t>(mesh.num_elements()) * 4);
  auto val = [&](Index g) { return (g < 0 || g >= ni) ? 0.0 : y[g]; };
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    const Index ga = e - 1, gb = e;
    const double ya = val(ga), yb = val(gb);
    // y_x is constant on the element, so int y phi_a = h (2 ya + yb) / 6 times (yb - ya)/h.
    const double ca = (yb - ya) * (2.0 * ya + yb) / 6.0;
    const double cb = (yb - ya) * (ya + 2.0 * yb) / 6.0;
    // partial derivatives of ca, cb with respect to ya, yb
    const double dca_a = (-(2.0 * ya + yb) + 2.0 * (yb - ya)) / 6.0;
    const double dca_b = ((2.0 * ya + yb) + (yb - ya)) / 6.0;
    const double dcb_a = (-(ya + 2.0 * yb) + (yb - ya)) / 6.0;
    const double dcb_b = ((ya + 2.0 * yb) + 2.0 * (yb - ya)) / 6.0;
    const bool ia = ga >= 0, ib = gb < ni;
    if (ia) c[ga] += ca;
    if (ib) c[gb] += cb;
    if (ia) jac.add(ga, ga, dca_a);
    if (ia && ib) jac.add(ga, gb, dca_b);
    if (ib && ia) jac.add(gb, ga, dcb_a);
    if (ib) jac.add(gb, gb, dcb_b);
  }
  return {std::move(c), jac.finalize(false)};
}

/// Residual norms of the Newton solve at one time step.
struct NewtonLog {
  int step = 0;
  std::vector<double> residuals;
};

class BurgersProblem {
 public:
  explicit BurgersProblem(const BurgersConfig& config) : cfg_(config), mesh_(config.level) {
    if (!(cfg_.nu > 0.0 && cfg_.alpha1 > 0.0 && cfg_.alpha2 > 0.0 && cfg_.beta > 0.0))
      throw InvalidArgument("nu, alpha1, alpha2 and beta must be positive");
    if (!(cfg_.dt > 0.0 && cfg_.T > 0.0)) throw InvalidArgument("time step and horizon must be positive");
    if (!(cfg_.newton_tol > 0.0 && cfg_.newton_max > 0)) throw InvalidArgument("bad Newton settings");
    steps_ = static_cast<int>(std::ceil(cfg_.T / cfg_.dt - 1e-9));
    dt_ = cfg_.T / steps_;

    const Index ni = mesh_.num_elements() - 1;
    P1Matrices p1 = assemble_p1_interval(mesh_);
    M_ = p1.mass;
    K_ = p1.stiffness;
    for (Index j = 0; j < ni; ++j) {
      const double x = mesh_.x(j + 1);
      if (x > cfg_.control_lo && x < cfg_.control_hi) control_.push_back(j);
    }
    if (control_.empty()) throw InvalidArgument("control support contains no mesh node");
    std::vector<Index> all(static_cast<std::size_t>(ni));
    for (Index j = 0; j < ni; ++j) all[static_cast<std::size_t>(j)] = j;
    M_hat_ = M_.submatrix(control_, control_);
    M_ic_ = M_.submatrix(all, control_);
    lin_ = M_.scaled(1.0 / dt_) + K_.scaled(cfg_.nu);
    mhat_solver_ = SpdSolver(M_hat_);
    space_ = WeightedSpace(M_hat_.block_diagonal(steps_, dt_));

    y_init_ = nodal([&](double x) { return cfg_.y0(x); });
    zd_ = nodal([&](double x) { return cfg_.z_d(x); });
    for (int n = 1; n <= steps_; ++n) {
      const double t = n * dt_;
      mf_.push_back(M_ * nodal([&](double x) { return cfg_.f(t, x); }));
      yd_.push_back(nodal([&](double x) { return cfg_.y_d(t, x); }));
    }
  }

  const BurgersConfig& config() const { return cfg_; }
  const IntervalMesh& mesh() const { return mesh_; }
  int steps() const { return steps_; }
  double dt() const { return dt_; }
  Index num_control_nodes() const { return static_cast<Index>(control_.size()); }
  const std::vector<Index>& control_nodes() const { return control_; }
  const SparseMatrix& mass() const { return M_; }
  const SparseMatrix& stiffness() const { return K_; }
  const SparseMatrix& control_mass() const { return M_hat_; }

  const WeightedSpace& space() const { return space_; }
  Index dimension() const { return steps_ * num_control_nodes(); }
  double beta() const { return cfg_.beta; }

  DenseVector control_at(const DenseVector& u, int n) const {
    return u.segment(static_cast<Index>(n - 1) * num_control_nodes(), num_control_nodes());
  }

  /// y[0] = y0 (interior nodes), y[n] for n = 1..N. Newton residual logs are
  /// appended to `log` when given.
  std::vector<DenseVector> solve_state(const DenseVector& u, std::vector<NewtonLog>* log = nullptr) const {
    check(u);
    std::vector<DenseVector> y;
    y.reserve(static_cast<std::size_t>(steps_) + 1);
    y.push_back(y_init_);
    for (int n = 1; n <= steps_; ++n) {
      const DenseVector& yp = y.back();
      DenseVector rhs = M_ * yp / dt_ + M_ic_ * control_at(u, n) + mf_[static_cast<std::size_t>(n - 1)];
      DenseVector yn = yp;
      NewtonLog nl;
      nl.step = n;
      bool done = false;
      double rnorm = 0.0;
      for (int it = 0; it <= cfg_.newton_max; ++it) {
        Convection cv = assemble_nonlinear(mesh_, yn);
        DenseVector r = lin_ * yn + cv.c - rhs;
        rnorm = r.norm();
        nl.residuals.push_back(rnorm);
        if (!std::isfinite(rnorm)) break;
        if (rnorm < cfg_.newton_tol) {
          done = true;
          break;
        }
        if (it == cfg_.newton_max) break;
        yn -= solve_general(lin_ + cv.C, r);
      }
      if (log) log->push_back(nl);
      if (!done) throw NonlinearSolverFailure("Newton did not converge", n, rnorm);
      y.push_back(std::move(yn));
    }
    return y;
  }

  /// Discrete adjoint lambda[n-1] for step n = 1..N:
  /// J_n^T lambda^n = dJ/dy^n + M lambda^{n+1} / dt, J_n = M/dt + nu K + C(y^n).
  /// The returned p^n = -lambda^n gives G^n = beta u^n - Mhat^{-1} (M p^n)_c / dt.
  std::vector<DenseVector> solve_adjoint(const std::vector<DenseVector>& y) const {
    if (static_cast<int>(y.size()) != steps_ + 1) throw InvalidArgument("state has wrong number of time levels");
    std::vector<DenseVector> p(static_cast<std::size_t>(steps_));
    DenseVector next = DenseVector::Zero(M_.rows());
    for (int n = steps_; n >= 1; --n) {
      const DenseVector& yn = y[static_cast<std::size_t>(n)];
      DenseVector rhs = cfg_.alpha1 * dt_ * (M_ * (yn - yd_[static_cast<std::size_t>(n - 1)])) + M_ * next / dt_;
      if (n == steps_) rhs += cfg_.alpha2 * (M_ * (yn - zd_));
      Convection cv = assemble_nonlinear(mesh_, yn);
      SparseMatrix jt = (lin_ + cv.C).transpose();
      next = solve_general(jt, rhs);
      p[static_cast<std::size_t>(n - 1)] = -next;
    }
    return p;
  }

  /// B^* p^n: Riesz representative in (Mhat) of the control-row functional.
  DenseVector adjoint_to_control(const std::vector<DenseVector>& p) const {
    const Index nc = num_control_nodes();
    DenseVector out(dimension());
    for (int n = 1; n <= steps_; ++n) {
      DenseVector m = M_ic_.transpose() * p[static_cast<std::size_t>(n - 1)];
      out.segment(static_cast<Index>(n - 1) * nc, nc) = mhat_solver_.solve(m) / dt_;
    }
    return out;
  }

  DenseVector gradient(const DenseVector& u) const {
    auto y = solve_state(u);
    return cfg_.beta * u - adjoint_to_control(solve_adjoint(y));
  }

  /// Right-endpoint rectangle rule in time.
  double objective(const DenseVector& u) const {
    auto y = solve_state(u);
    double track = 0.0;
    for (int n = 1; n <= steps_; ++n) {
      DenseVector e = y[static_cast<std::size_t>(n)] - yd_[static_cast<std::size_t>(n - 1)];
      track += dt_ * e.dot(M_ * e);
    }
    DenseVector e = y.back() - zd_;
    return 0.5 * cfg_.alpha1 * track + 0.5 * cfg_.alpha2 * e.dot(M_ * e) + 0.5 * cfg_.beta * wdot(space_, u, u);
  }

  /// Tangent state q for a control direction du, linearized about y:
  /// J_n q^n = M q^{n-1} / dt + M_ic du^n, q^0 = 0.
  std::vector<DenseVector> solve_tangent(const std::vector<DenseVector>& y, const DenseVector& du) const {
    check(du);
    std::vector<DenseVector> q;
    q.push_back(DenseVector::Zero(M_.rows()));
    for (int n = 1; n <= steps_; ++n) {
      Convection cv = assemble_nonlinear(mesh_, y[static_cast<std::size_t>(n)]);
      DenseVector rhs = M_ * q.back() / dt_ + M_ic_ * control_at(du, n);
      q.push_back(solve_general(lin_ + cv.C, rhs));
    }
    return q;
  }

  /// Derivative of the tracking terms along a state direction q.
  double tracking_derivative(const std::vector<DenseVector>& y, const std::vector<DenseVector>& q) const {
    double s = 0.0;
    for (int n = 1; n <= steps_; ++n)
      s += cfg_.alpha1 * dt_ *
           (y[static_cast<std::size_t>(n)] - yd_[static_cast<std::size_t>(n - 1)]).dot(M_ * q[static_cast<std::size_t>(n)]);
    s += cfg_.alpha2 * (y.back() - zd_).dot(M_ * q.back());
    return s;
  }

 private:
  void check(const DenseVector& u) const {
    if (u.size() != dimension()) throw InvalidArgument("Burgers control has wrong dimension");
  }
  DenseVector nodal(const std::function<double(double)>& g) const {
    const Index ni = mesh_.num_elements() - 1;
    DenseVector v(ni);
    for (Index j = 0; j < ni; ++j) v[j] = g(mesh_.x(j + 1));
    return v;
  }

  BurgersConfig cfg_;
  IntervalMesh mesh_;
  int steps_ = 0;
  double dt_ = 0.0;
  std::vector<Index> control_;
  SparseMatrix M_, K_, M_hat_, M_ic_, lin_;
  SpdSolver mhat_solver_;
  WeightedSpace space_;
  DenseVector y_init_, zd_;
  std::vector<DenseVector> mf_;
  std::vector<DenseVector> yd_;
};

}  // namespace bbpde::fem
