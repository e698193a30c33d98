#pragma once

// Neumann boundary control of the wave equation on the unit square,
//
//   y_tt - Lap y = f,  d_nu y = u on Gamma_c,  y = 0 on Gamma_0,
//
// with Gamma_c = {x1 = 1} U {x2 = 1}. P1 in space, Crank-Nicolson on the
// first-order system (y, v = y_t) in time, controls piecewise constant in
// time and P1 along Gamma_c. Gradients come from the exact transpose of the
// time-stepping scheme.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "bbpde/errors.hpp"
#include "bbpde/linalg.hpp"
#include "bbpde/mesh.hpp"

namespace bbpde::fem {

using SpaceTimeField = std::function<double(double t, double x, double y)>;

struct WaveConfig {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double beta = 0.5;
  int level = 4;
  double dt = 0.01;
  double T = 1.0;
  ScalarField y0 = [](double, double) { return 0.0; };
  ScalarField v0 = [](double, double) { return 0.0; };
  SpaceTimeField f = [](double, double, double) { return 0.0; };
  SpaceTimeField y_d = [](double, double, double) { return 0.0; };
  ScalarField z_d = [](double, double) { return 0.0; };
  /// Dirichlet on the whole boundary (no control); used for scheme checks.
  bool all_dirichlet = false;

  /// y0 = sin(pi x1) sin(pi x2), v0 = 0, f = pi^2 sin(pi x1 t) sin(pi x2 t),
  /// z_d = 0, y_d = -x1 for x1 < 0.5 and x1 otherwise.
  static WaveConfig example(double beta, int level, double dt) {
    using std::numbers::pi;
    WaveConfig c;
    c.beta = beta;
    c.level = level;
    c.dt = dt;
    c.y0 = [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); };
    c.f = [](double t, double x, double y) { return pi * pi * std::sin(pi * x * t) * std::sin(pi * y * t); };
    c.y_d = [](double, double x, double) { return x < 0.5 ? -x : x; };
    return c;
  }
};

/// Nodal space-time state on the free (non-Dirichlet) nodes, n = 0..N.
struct WaveState {
  std::vector<DenseVector> y;
  std::vector<DenseVector> v;
};

class WaveProblem {
 public:
  explicit WaveProblem(const WaveConfig& config) : cfg_(config), mesh_(config.level) {
    if (!(cfg_.alpha1 > 0.0 && cfg_.alpha2 > 0.0 && cfg_.beta > 0.0))
      throw InvalidArgument("alpha1, alpha2 and beta must be positive");
    if (!(cfg_.dt > 0.0 && cfg_.T > 0.0)) throw InvalidArgument("time step and horizon must be positive");
    // Smallest N with N dt >= T; the step is then shrunk so that N dt = T.
    steps_ = static_cast<int>(std::ceil(cfg_.T / cfg_.dt - 1e-9));
    dt_ = cfg_.T / steps_;

    const Index n = mesh_.cells_per_side();
    const auto& pts = mesh_.nodes();
    std::vector<char> dirichlet(static_cast<std::size_t>(mesh_.num_nodes()), 0);
    for (Index i = 0; i < mesh_.num_nodes(); ++i) {
      const Point& p = pts[static_cast<std::size_t>(i)];
      bool on_gamma0 = p.x == 0.0 || p.y == 0.0;
      bool on_gammac = p.x == 1.0 || p.y == 1.0;
      if (on_gamma0 || (cfg_.all_dirichlet && on_gammac)) dirichlet[static_cast<std::size_t>(i)] = 1;
    }
    for (Index i = 0; i < mesh_.num_nodes(); ++i) {
      if (dirichlet[static_cast<std::size_t>(i)]) continue;
      const Point& p = pts[static_cast<std::size_t>(i)];
      if (p.x == 1.0 || p.y == 1.0) {
        control_pos_.push_back(static_cast<Index>(free_.size()));
        control_nodes_.push_back(i);
      }
      free_.push_back(i);
    }

    P1Matrices p1 = assemble_p1(mesh_);
    M_ = p1.mass;
    std::vector<Index> all(static_cast<std::size_t>(mesh_.num_nodes()));
    for (Index i = 0; i < mesh_.num_nodes(); ++i) all[static_cast<std::size_t>(i)] = i;
    M_FF_ = M_.submatrix(free_, free_);
    K_FF_ = p1.stiffness.submatrix(free_, free_);
    M_F_ = M_.submatrix(free_, all);

    std::vector<std::array<Index, 2>> segs;
    for (Index j = 0; j < n; ++j) segs.push_back({mesh_.node(n, j), mesh_.node(n, j + 1)});
    for (Index i = 0; i < n; ++i) segs.push_back({mesh_.node(i, n), mesh_.node(i + 1, n)});
    M_c_ = assemble_edge_mass(mesh_, segs).submatrix(control_nodes_, control_nodes_);

    const double c = 2.0 / (dt_ * dt_);
    S_ = M_FF_.scaled(c) + K_FF_.scaled(0.5);
    R_ = M_FF_.scaled(c) + K_FF_.scaled(-0.5);
    s_solver_ = SpdSolver(S_);
    if (!control_nodes_.empty()) space_ = WeightedSpace(M_c_.block_diagonal(steps_, dt_));

    // data
    y_init_ = restrict(mesh_.interpolate(cfg_.y0));
    v_init_ = restrict(mesh_.interpolate(cfg_.v0));
    std::vector<DenseVector> mf(static_cast<std::size_t>(steps_) + 1);
    for (int k = 0; k <= steps_; ++k) mf[static_cast<std::size_t>(k)] = M_F_ * interpolate_at(cfg_.f, k * dt_);
    load_.resize(static_cast<std::size_t>(steps_));
    yd_mid_.resize(static_cast<std::size_t>(steps_));
    for (int k = 1; k <= steps_; ++k) {
      load_[static_cast<std::size_t>(k - 1)] = 0.5 * (mf[static_cast<std::size_t>(k - 1)] + mf[static_cast<std::size_t>(k)]);
      yd_mid_[static_cast<std::size_t>(k - 1)] = interpolate_at(cfg_.y_d, (k - 0.5) * dt_);
    }
    zd_ = mesh_.interpolate(cfg_.z_d);
  }

  const WaveConfig& config() const { return cfg_; }
  const UnitSquareMesh& mesh() const { return mesh_; }
  int steps() const { return steps_; }
  double dt() const { return dt_; }
  Index num_control_nodes() const { return static_cast<Index>(control_nodes_.size()); }
  Index num_free_nodes() const { return static_cast<Index>(free_.size()); }
  const std::vector<Index>& free_nodes() const { return free_; }
  const std::vector<Index>& control_nodes() const { return control_nodes_; }
  const SparseMatrix& control_mass() const { return M_c_; }
  const SparseMatrix& mass_free() const { return M_FF_; }
  const SparseMatrix& stiffness_free() const { return K_FF_; }

  const WeightedSpace& space() const { return space_; }
  Index dimension() const { return steps_ * num_control_nodes(); }
  double beta() const { return cfg_.beta; }

  /// Control block of time interval n (1-based) inside a flattened control.
  DenseVector control_at(const DenseVector& u, int n) const {
    return u.segment(static_cast<Index>(n - 1) * num_control_nodes(), num_control_nodes());
  }

  /// Free-node vector -> full nodal vector (Dirichlet nodes zero).
  DenseVector extend(const DenseVector& yf) const {
    DenseVector full = DenseVector::Zero(mesh_.num_nodes());
    for (std::size_t k = 0; k < free_.size(); ++k) full[free_[k]] = yf[static_cast<Index>(k)];
    return full;
  }

  WaveState solve_state(const DenseVector& u) const { return propagate(u, true); }

  /// Same recursion with zero initial data and zero load: the linear part of
  /// the control-to-state map.
  WaveState solve_state_homogeneous(const DenseVector& u) const { return propagate(u, false); }

  /// Discrete adjoint: p[n-1] holds p^n on the free nodes for n = 1..N, the
  /// Lagrange multiplier of step n scaled by -1/dt, so that
  /// G(u)^n = beta u^n - p^n restricted to Gamma_c.
  std::vector<DenseVector> solve_adjoint(const WaveState& st) const {
    const int N = steps_;
    const double a1 = cfg_.alpha1, a2 = cfg_.alpha2;
    std::vector<DenseVector> ybar(static_cast<std::size_t>(N) + 1, DenseVector::Zero(num_free_nodes()));
    for (int m = 1; m <= N; ++m) {
      DenseVector r = extend(0.5 * (st.y[static_cast<std::size_t>(m - 1)] + st.y[static_cast<std::size_t>(m)])) -
                      yd_mid_[static_cast<std::size_t>(m - 1)];
      DenseVector g = (0.5 * a1 * dt_) * (M_F_ * r);
      ybar[static_cast<std::size_t>(m - 1)] += g;
      ybar[static_cast<std::size_t>(m)] += g;
    }
    ybar[static_cast<std::size_t>(N)] += a2 * (M_F_ * (extend(st.y[static_cast<std::size_t>(N)]) - zd_));

    std::vector<DenseVector> p(static_cast<std::size_t>(N));
    DenseVector vbar = DenseVector::Zero(num_free_nodes());
    for (int n = N; n >= 1; --n) {
      auto& yb_n = ybar[static_cast<std::size_t>(n)];
      auto& yb_prev = ybar[static_cast<std::size_t>(n - 1)];
      // v^n = 2 (y^n - y^{n-1}) / dt - v^{n-1}
      yb_n += (2.0 / dt_) * vbar;
      yb_prev -= (2.0 / dt_) * vbar;
      vbar = -vbar;
      // S y^n = R y^{n-1} + (2/dt) M v^{n-1} + load + B u^n
      DenseVector w = s_solver_.solve(yb_n);
      yb_prev += R_ * w;
      vbar += (2.0 / dt_) * (M_FF_ * w);
      p[static_cast<std::size_t>(n - 1)] = (-1.0 / dt_) * w;
    }
    return p;
  }

  DenseVector gradient(const DenseVector& u) const {
    check(u);
    auto p = solve_adjoint(solve_state(u));
    DenseVector g = cfg_.beta * u;
    const Index nc = num_control_nodes();
    for (int n = 1; n <= steps_; ++n)
      for (Index j = 0; j < nc; ++j)
        g[(n - 1) * nc + j] -= p[static_cast<std::size_t>(n - 1)][control_pos_[static_cast<std::size_t>(j)]];
    return g;
  }

  /// alpha1/2 sum_n dt |y^{n-1/2} - y_d|_M^2 + alpha2/2 |y^N - z_d|_M^2 + beta/2 |u|^2.
  double objective(const DenseVector& u) const {
    check(u);
    WaveState st = solve_state(u);
    double track = 0.0;
    for (int m = 1; m <= steps_; ++m) {
      DenseVector r = extend(0.5 * (st.y[static_cast<std::size_t>(m - 1)] + st.y[static_cast<std::size_t>(m)])) -
                      yd_mid_[static_cast<std::size_t>(m - 1)];
      track += dt_ * r.dot(M_ * r);
    }
    DenseVector e = extend(st.y.back()) - zd_;
    return 0.5 * cfg_.alpha1 * track + 0.5 * cfg_.alpha2 * e.dot(M_ * e) + 0.5 * cfg_.beta * wdot(space_, u, u);
  }

  /// 1/2 (v^T M v + y^T K y) on the free nodes.
  double energy(const DenseVector& y, const DenseVector& v) const {
    return 0.5 * (v.dot(M_FF_ * v) + y.dot(K_FF_ * y));
  }

 private:
  void check(const DenseVector& u) const {
    if (u.size() != dimension()) throw InvalidArgument("wave control has wrong dimension");
  }

  DenseVector restrict(const DenseVector& full) const {
    DenseVector out(num_free_nodes());
    for (std::size_t k = 0; k < free_.size(); ++k) out[static_cast<Index>(k)] = full[free_[k]];
    return out;
  }

  DenseVector interpolate_at(const SpaceTimeField& f, double t) const {
    return mesh_.interpolate([&](double x, double y) { return f(t, x, y); });
  }

  WaveState propagate(const DenseVector& u, bool with_data) const {
    if (u.size() != dimension()) throw InvalidArgument("wave control has wrong dimension");
    const Index nf = num_free_nodes();
    const Index nc = num_control_nodes();
    WaveState st;
    st.y.reserve(static_cast<std::size_t>(steps_) + 1);
    st.v.reserve(static_cast<std::size_t>(steps_) + 1);
    st.y.push_back(with_data ? y_init_ : DenseVector::Zero(nf));
    st.v.push_back(with_data ? v_init_ : DenseVector::Zero(nf));
    for (int n = 1; n <= steps_; ++n) {
      const DenseVector& yp = st.y.back();
      const DenseVector& vp = st.v.back();
      DenseVector rhs = R_ * yp + (2.0 / dt_) * (M_FF_ * vp);
      if (with_data) rhs += load_[static_cast<std::size_t>(n - 1)];
      if (nc > 0) {
        DenseVector bu = M_c_ * control_at(u, n);
        for (Index j = 0; j < nc; ++j) rhs[control_pos_[static_cast<std::size_t>(j)]] += bu[j];
      }
      DenseVector yn = s_solver_.solve(rhs);
      DenseVector vn = (2.0 / dt_) * (yn - yp) - vp;
      st.y.push_back(std::move(yn));
      st.v.push_back(std::move(vn));
    }
    return st;
  }

  WaveConfig cfg_;
  UnitSquareMesh mesh_;
  int steps_ = 0;
  double dt_ = 0.0;
  std::vector<Index> free_;
  std::vector<Index> control_nodes_;
  std::vector<Index> control_pos_;
  SparseMatrix M_, M_FF_, K_FF_, M_F_, M_c_, S_, R_;
  SpdSolver s_solver_;
  WeightedSpace space_;
  DenseVector y_init_, v_init_, zd_;
  std::vector<DenseVector> load_;
  std::vector<DenseVector> yd_mid_;
};

}  // namespace bbpde::fem
