#pragma once

// Uniform triangulations of the unit square and interval, plus P1 assembly.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "bbpde/errors.hpp"
#include "bbpde/linalg.hpp"

namespace bbpde::fem {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using ScalarField = std::function<double(double, double)>;

/// Level-L mesh of (0,1)^2: 2^L squares per side, each cut by the
/// lower-left to upper-right diagonal. h = 2^-L sqrt(2).
class UnitSquareMesh {
 public:
  explicit UnitSquareMesh(int level) : level_(level) {
    if (level < 1 || level > 12) throw InvalidArgument("mesh level out of range");
    n_ = 1 << level;
    const Index np = n_ + 1;
    nodes_.reserve(static_cast<std::size_t>(np * np));
    for (Index j = 0; j <= n_; ++j)
      for (Index i = 0; i <= n_; ++i)
        nodes_.push_back({static_cast<double>(i) / static_cast<double>(n_),
                          static_cast<double>(j) / static_cast<double>(n_)});
    for (Index j = 0; j < n_; ++j) {
      for (Index i = 0; i < n_; ++i) {
        Index a = node(i, j), b = node(i + 1, j), c = node(i + 1, j + 1), d = node(i, j + 1);
        triangles_.push_back({a, b, c});
        triangles_.push_back({a, c, d});
      }
    }
    // Counterclockwise from the origin: bottom, right, top, left.
    for (Index i = 0; i < n_; ++i) boundary_.push_back(node(i, 0));
    for (Index j = 0; j < n_; ++j) boundary_.push_back(node(n_, j));
    for (Index i = n_; i > 0; --i) boundary_.push_back(node(i, n_));
    for (Index j = n_; j > 0; --j) boundary_.push_back(node(0, j));
    for (Index j = 1; j < n_; ++j)
      for (Index i = 1; i < n_; ++i) interior_.push_back(node(i, j));
  }

  int level() const noexcept { return level_; }
  Index cells_per_side() const noexcept { return n_; }
  double spacing() const noexcept { return 1.0 / static_cast<double>(n_); }
  /// Longest triangle edge.
  double h() const noexcept { return std::sqrt(2.0) * spacing(); }

  Index node(Index i, Index j) const noexcept { return j * (n_ + 1) + i; }
  Index num_nodes() const noexcept { return static_cast<Index>(nodes_.size()); }
  const std::vector<Point>& nodes() const noexcept { return nodes_; }
  const std::vector<std::array<Index, 3>>& triangles() const noexcept { return triangles_; }
  /// Boundary nodes in cyclic counterclockwise order starting at (0,0).
  const std::vector<Index>& boundary() const noexcept { return boundary_; }
  const std::vector<Index>& interior() const noexcept { return interior_; }

  double signed_area(const std::array<Index, 3>& t) const {
    const Point &p0 = nodes_[static_cast<std::size_t>(t[0])], &p1 = nodes_[static_cast<std::size_t>(t[1])],
                &p2 = nodes_[static_cast<std::size_t>(t[2])];
    return 0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
  }

  DenseVector interpolate(const ScalarField& f) const {
    DenseVector v(num_nodes());
    for (Index i = 0; i < num_nodes(); ++i) v[i] = f(nodes_[static_cast<std::size_t>(i)].x, nodes_[static_cast<std::size_t>(i)].y);
    return v;
  }

 private:
  int level_;
  Index n_ = 0;
  std::vector<Point> nodes_;
  std::vector<std::array<Index, 3>> triangles_;
  std::vector<Index> boundary_;
  std::vector<Index> interior_;
};

struct P1Matrices {
  SparseMatrix stiffness;
  SparseMatrix mass;
};

/// Consistent P1 stiffness and mass on all nodes.
inline P1Matrices assemble_p1(const UnitSquareMesh& mesh) {
  const Index n = mesh.num_nodes();
  TripletBuilder k(n, n), m(n, n);
  k.reserve(mesh.triangles().size() * 9);
  m.reserve(mesh.triangles().size() * 9);
  const auto& pts = mesh.nodes();
  for (const auto& t : mesh.triangles()) {
    const double area = mesh.signed_area(t);
    if (!(area > 0.0)) throw InvalidArgument("triangle with non-positive orientation");
    std::array<double, 3> bx, by;
    for (int a = 0; a < 3; ++a) {
      const Point& p1 = pts[static_cast<std::size_t>(t[(a + 1) % 3])];
      const Point& p2 = pts[static_cast<std::size_t>(t[(a + 2) % 3])];
      bx[a] = p1.y - p2.y;
      by[a] = p2.x - p1.x;
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        k.add(t[a], t[b], (bx[a] * bx[b] + by[a] * by[b]) / (4.0 * area));
        m.add(t[a], t[b], area / 12.0 * (a == b ? 2.0 : 1.0));
      }
    }
  }
  return {k.finalize(true), m.finalize(true)};
}

/// 1D P1 mass along a polyline of nodes given as segments (global indices),
/// assembled into an n x n matrix.
inline SparseMatrix assemble_edge_mass(const UnitSquareMesh& mesh,
                                       const std::vector<std::array<Index, 2>>& segments) {
  const Index n = mesh.num_nodes();
  TripletBuilder m(n, n);
  const auto& pts = mesh.nodes();
  for (const auto& s : segments) {
    const Point& a = pts[static_cast<std::size_t>(s[0])];
    const Point& b = pts[static_cast<std::size_t>(s[1])];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    m.add(s[0], s[0], len / 3.0);
    m.add(s[1], s[1], len / 3.0);
    m.add(s[0], s[1], len / 6.0);
    m.add(s[1], s[0], len / 6.0);
  }
  return m.finalize(true);
}

/// Uniform mesh of (0,1) with 2^L elements.
class IntervalMesh {
 public:
  explicit IntervalMesh(int level) : level_(level) {
    if (level < 1 || level > 20) throw InvalidArgument("mesh level out of range");
    elements_ = Index{1} << level;
  }
  int level() const noexcept { return level_; }
  Index num_elements() const noexcept { return elements_; }
  Index num_nodes() const noexcept { return elements_ + 1; }
  double h() const noexcept { return 1.0 / static_cast<double>(elements_); }
  double x(Index i) const noexcept { return static_cast<double>(i) * h(); }

 private:
  int level_;
  Index elements_;
};

/// P1 stiffness and mass on the interior nodes 1..M-1 of an interval mesh
/// (homogeneous Dirichlet at both ends).
inline P1Matrices assemble_p1_interval(const IntervalMesh& mesh) {
  const Index ni = mesh.num_elements() - 1;
  const double h = mesh.h();
  TripletBuilder k(ni, ni), m(ni, ni);
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    // element nodes e, e+1 -> interior indices e-1, e
    const std::array<Index, 2> g{e - 1, e};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        if (g[a] < 0 || g[a] >= ni || g[b] < 0 || g[b] >= ni) continue;
        k.add(g[a], g[b], (a == b ? 1.0 : -1.0) / h);
        m.add(g[a], g[b], h / 6.0 * (a == b ? 2.0 : 1.0));
      }
    }
  }
  return {k.finalize(true), m.finalize(true)};
}

}  // namespace bbpde::fem
