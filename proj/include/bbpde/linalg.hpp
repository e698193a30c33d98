#pragma once

// Dense vectors, sparse matrices, weighted inner products and the SPD /
// general sparse solvers every discretization in the library is built on.
// Storage and factorizations are delegated to Eigen.

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bbpde/errors.hpp"

namespace bbpde {

using Index = Eigen::Index;
using DenseVector = Eigen::VectorXd;

inline DenseVector make_vector(std::initializer_list<double> values) {
  DenseVector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline bool all_finite(const DenseVector& v) { return v.allFinite(); }

/// Immutable compressed sparse matrix with an explicit symmetry flag.
class SparseMatrix {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::ColMajor, Index>;

  SparseMatrix() = default;
  SparseMatrix(Storage m, bool symmetric) : m_(std::move(m)), symmetric_(symmetric) {
    m_.makeCompressed();
  }

  static SparseMatrix identity(Index n) {
    Storage m(n, n);
    m.setIdentity();
    return {std::move(m), true};
  }

  static SparseMatrix diagonal(const DenseVector& d) {
    Storage m(d.size(), d.size());
    m.reserve(Eigen::VectorXi::Constant(d.size(), 1));
    for (Index i = 0; i < d.size(); ++i) m.insert(i, i) = d[i];
    return {std::move(m), true};
  }

  /// Row-major nested initializer, mostly for tests and small examples.
  static SparseMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const Index r = static_cast<Index>(rows.size());
    const Index c = r == 0 ? 0 : static_cast<Index>(rows.front().size());
    std::vector<Eigen::Triplet<double, Index>> t;
    for (Index i = 0; i < r; ++i) {
      if (static_cast<Index>(rows[i].size()) != c) throw InvalidArgument("ragged matrix rows");
      for (Index j = 0; j < c; ++j)
        if (rows[i][j] != 0.0) t.emplace_back(i, j, rows[i][j]);
    }
    Storage m(r, c);
    m.setFromTriplets(t.begin(), t.end());
    bool sym = r == c && m.isApprox(Storage(m.transpose()), 0.0);
    return {std::move(m), sym};
  }

  Index rows() const noexcept { return m_.rows(); }
  Index cols() const noexcept { return m_.cols(); }
  Index nonzeros() const noexcept { return m_.nonZeros(); }
  bool symmetric() const noexcept { return symmetric_; }
  const Storage& storage() const noexcept { return m_; }

  double coeff(Index i, Index j) const { return m_.coeff(i, j); }

  DenseVector operator*(const DenseVector& x) const {
    if (x.size() != cols()) throw InvalidArgument("matrix-vector dimension mismatch");
    return m_ * x;
  }

  SparseMatrix transpose() const { return {Storage(m_.transpose()), symmetric_}; }

  SparseMatrix scaled(double s) const { return {Storage(s * m_), symmetric_}; }

  /// Extracts A(rows, cols). Symmetry is kept only for principal submatrices.
  SparseMatrix submatrix(std::span<const Index> row_idx, std::span<const Index> col_idx) const {
    std::vector<Index> row_map(static_cast<std::size_t>(rows()), -1);
    for (std::size_t i = 0; i < row_idx.size(); ++i) row_map[static_cast<std::size_t>(row_idx[i])] = static_cast<Index>(i);
    std::vector<Eigen::Triplet<double, Index>> t;
    for (std::size_t jj = 0; jj < col_idx.size(); ++jj) {
      for (Storage::InnerIterator it(m_, col_idx[jj]); it; ++it) {
        Index ii = row_map[static_cast<std::size_t>(it.row())];
        if (ii >= 0) t.emplace_back(ii, static_cast<Index>(jj), it.value());
      }
    }
    Storage s(static_cast<Index>(row_idx.size()), static_cast<Index>(col_idx.size()));
    s.setFromTriplets(t.begin(), t.end());
    bool principal = symmetric_ && row_idx.size() == col_idx.size() &&
                     std::equal(row_idx.begin(), row_idx.end(), col_idx.begin());
    return {std::move(s), principal};
  }

  /// Block-diagonal matrix with `copies` scaled copies of this matrix.
  SparseMatrix block_diagonal(Index copies, double scale = 1.0) const {
    std::vector<Eigen::Triplet<double, Index>> t;
    t.reserve(static_cast<std::size_t>(nonzeros() * copies));
    for (Index b = 0; b < copies; ++b)
      for (Index k = 0; k < m_.outerSize(); ++k)
        for (Storage::InnerIterator it(m_, k); it; ++it)
          t.emplace_back(b * rows() + it.row(), b * cols() + it.col(), scale * it.value());
    Storage s(rows() * copies, cols() * copies);
    s.setFromTriplets(t.begin(), t.end());
    return {std::move(s), symmetric_};
  }

  double frobenius_norm() const { return m_.norm(); }

 private:
  Storage m_;
  bool symmetric_ = false;
};

inline SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("matrix sum dimension mismatch");
  return {SparseMatrix::Storage(a.storage() + b.storage()), a.symmetric() && b.symmetric()};
}

/// Triplet assembly buffer. Duplicates are summed on finalize.
class TripletBuilder {
 public:
  TripletBuilder(Index rows, Index cols) : rows_(rows), cols_(cols) {}

  void reserve(std::size_t n) { t_.reserve(n); }

  void add(Index i, Index j, double v) {
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_) {
      throw InvalidArgument("triplet (" + std::to_string(i) + "," + std::to_string(j) +
                            ") out of bounds");
    }
    t_.emplace_back(i, j, v);
  }

  /// With `symmetric` set the result is (A + A^T)/2, which makes a_ij == a_ji bitwise.
  SparseMatrix finalize(bool symmetric) const {
    SparseMatrix::Storage m(rows_, cols_);
    m.setFromTriplets(t_.begin(), t_.end());
    if (symmetric) {
      if (rows_ != cols_) throw InvalidArgument("symmetric assembly requires a square matrix");
      SparseMatrix::Storage mt = m.transpose();
      m = 0.5 * (m + mt);
    }
    return {std::move(m), symmetric};
  }

 private:
  Index rows_;
  Index cols_;
  std::vector<Eigen::Triplet<double, Index>> t_;
};

/// Discrete inner-product space (u, v)_W = u^T W v for an SPD Gram matrix W.
class WeightedSpace {
 public:
  WeightedSpace() = default;
  explicit WeightedSpace(SparseMatrix gram) : gram_(std::move(gram)) {
    if (gram_.rows() != gram_.cols()) throw InvalidArgument("Gram matrix must be square");
    if (!gram_.symmetric()) throw InvalidArgument("Gram matrix must be flagged symmetric");
  }

  static WeightedSpace euclidean(Index n) { return WeightedSpace(SparseMatrix::identity(n)); }

  Index dimension() const noexcept { return gram_.rows(); }
  const SparseMatrix& gram() const noexcept { return gram_; }

  /// W u, the coefficient vector of the Riesz functional of u.
  DenseVector apply(const DenseVector& u) const {
    check(u);
    return gram_.storage() * u;
  }

 private:
  friend double wdot(const WeightedSpace&, const DenseVector&, const DenseVector&);
  void check(const DenseVector& u) const {
    if (u.size() != dimension()) {
      throw InvalidArgument("vector of dimension " + std::to_string(u.size()) +
                            " does not match Gram dimension " + std::to_string(dimension()));
    }
  }
  SparseMatrix gram_;
};

inline double wdot(const WeightedSpace& space, const DenseVector& u, const DenseVector& v) {
  space.check(u);
  space.check(v);
  return u.dot(space.gram_.storage() * v);
}

inline double wnorm(const WeightedSpace& space, const DenseVector& u) {
  double s = wdot(space, u, u);
  return std::sqrt(std::max(s, 0.0));
}

// ---------------------------------------------------------------------------
// Linear solvers

struct SolveOptions {
  double tol = 1e-12;
  /// Systems with at least this many unknowns use PCG instead of Cholesky.
  Index direct_threshold = 200000;
  /// 0 selects 10 * n.
  Index max_iter = 0;
};

namespace detail {

/// A solve is accepted when the residual meets tol * |b|, or when it already
/// sits at the rounding floor of the product A x (no method can do better).
inline bool residual_ok(double res, double bnorm, double anorm, double xnorm, double tol) {
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * (anorm * xnorm + bnorm);
  return res <= tol * bnorm || res <= floor;
}

inline DenseVector pcg(const SparseMatrix::Storage& a, const DenseVector& b, double tol,
                       Index max_iter) {
  const Index n = a.rows();
  DenseVector diag = a.diagonal();
  for (Index i = 0; i < n; ++i)
    if (!(diag[i] > 0.0)) throw MatrixNotSpd("non-positive diagonal entry in SPD solve");
  DenseVector inv_diag = diag.cwiseInverse();
  DenseVector x = DenseVector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) return x;
  const double anorm = a.norm();
  DenseVector r = b;
  DenseVector z = inv_diag.cwiseProduct(r);
  DenseVector p = z;
  double rz = r.dot(z);
  for (Index it = 0; it < max_iter; ++it) {
    DenseVector ap = a * p;
    double curv = p.dot(ap);
    if (!(curv > 0.0)) throw MatrixNotSpd("negative curvature encountered in conjugate gradients");
    double step = rz / curv;
    x += step * p;
    r -= step * ap;
    if (r.norm() <= tol * bnorm) {
      // confirm against the true residual
      double res = (b - a * x).norm();
      if (residual_ok(res, bnorm, anorm, x.norm(), tol)) return x;
      r = b - a * x;
    }
    z = inv_diag.cwiseProduct(r);
    double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw SolverFailure("conjugate gradients did not converge", (b - a * x).norm() / bnorm);
}

}  // namespace detail

/// Factor-once SPD solver: sparse Cholesky below the size threshold,
/// Jacobi-preconditioned CG above it.
class SpdSolver {
 public:
  SpdSolver() = default;
  explicit SpdSolver(const SparseMatrix& a, SolveOptions opts = {}) : opts_(opts) {
    if (a.rows() != a.cols()) throw InvalidArgument("SPD solve needs a square matrix");
    a_ = std::make_shared<SparseMatrix::Storage>(a.storage());
    anorm_ = a_->norm();
    if (a.rows() < opts_.direct_threshold) {
      llt_ = std::make_shared<Eigen::SimplicialLLT<SparseMatrix::Storage>>();
      llt_->compute(*a_);
      if (llt_->info() != Eigen::Success) throw MatrixNotSpd("Cholesky factorization failed: matrix is not SPD");
    }
  }

  Index size() const noexcept { return a_ ? a_->rows() : 0; }

  DenseVector solve(const DenseVector& b) const {
    if (b.size() != size()) throw InvalidArgument("right-hand side dimension mismatch");
    const double bnorm = b.norm();
    if (bnorm == 0.0) return DenseVector::Zero(b.size());
    if (!llt_) {
      Index cap = opts_.max_iter > 0 ? opts_.max_iter : 10 * size() + 100;
      return detail::pcg(*a_, b, opts_.tol, cap);
    }
    DenseVector x = llt_->solve(b);
    DenseVector r = b - (*a_) * x;
    for (int refine = 0; refine < 3; ++refine) {
      if (r.norm() <= opts_.tol * bnorm) break;
      x += llt_->solve(r);
      r = b - (*a_) * x;
    }
    double res = r.norm();
    if (!x.allFinite() || !detail::residual_ok(res, bnorm, anorm_, x.norm(), opts_.tol))
      throw SolverFailure("SPD direct solve inaccurate", res / bnorm);
    return x;
  }

 private:
  SolveOptions opts_;
  std::shared_ptr<const SparseMatrix::Storage> a_;
  std::shared_ptr<Eigen::SimplicialLLT<SparseMatrix::Storage>> llt_;
  double anorm_ = 0.0;
};

inline DenseVector solve_spd(const SparseMatrix& a, const DenseVector& b, double tol = 1e-12) {
  SolveOptions opts;
  opts.tol = tol;
  return SpdSolver(a, opts).solve(b);
}

/// Sparse LU for square nonsingular systems.
class GeneralSolver {
 public:
  GeneralSolver() = default;
  explicit GeneralSolver(const SparseMatrix& a, double tol = 1e-12) : tol_(tol) {
    if (a.rows() != a.cols()) throw InvalidArgument("general solve needs a square matrix");
    a_ = std::make_shared<SparseMatrix::Storage>(a.storage());
    anorm_ = a_->norm();
    lu_ = std::make_shared<Eigen::SparseLU<SparseMatrix::Storage, Eigen::COLAMDOrdering<Index>>>();
    lu_->analyzePattern(*a_);
    lu_->factorize(*a_);
    if (lu_->info() != Eigen::Success) throw SolverFailure("sparse LU breakdown: " + lu_->lastErrorMessage(), 1.0);
  }

  DenseVector solve(const DenseVector& b) const {
    if (b.size() != a_->rows()) throw InvalidArgument("right-hand side dimension mismatch");
    const double bnorm = b.norm();
    if (bnorm == 0.0) return DenseVector::Zero(b.size());
    DenseVector x = lu_->solve(b);
    DenseVector r = b - (*a_) * x;
    for (int refine = 0; refine < 3; ++refine) {
      if (r.norm() <= tol_ * bnorm) break;
      x += lu_->solve(r);
      r = b - (*a_) * x;
    }
    double res = r.norm();
    if (!x.allFinite() || !detail::residual_ok(res, bnorm, anorm_, x.norm(), tol_))
      throw SolverFailure("sparse LU solve inaccurate", res / bnorm);
    return x;
  }

 private:
  double tol_ = 1e-12;
  double anorm_ = 0.0;
  std::shared_ptr<const SparseMatrix::Storage> a_;
  std::shared_ptr<Eigen::SparseLU<SparseMatrix::Storage, Eigen::COLAMDOrdering<Index>>> lu_;
};

inline DenseVector solve_general(const SparseMatrix& a, const DenseVector& b, double tol = 1e-12) {
  return GeneralSolver(a, tol).solve(b);
}

}  // namespace bbpde
