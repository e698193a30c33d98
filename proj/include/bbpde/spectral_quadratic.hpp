#pragma once

// Quadratic test problems with an explicitly prescribed spectrum, written in
// the eigenbasis: F(u) = 1/2 u^T diag(lambda) u - b^T u under the Euclidean
// inner product. The compact-perturbation ("poco") family has eigenvalues
// beta + delta_i with delta_i -> 0, so the spectrum clusters at beta.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bbpde/bb_solver.hpp"
#include "bbpde/errors.hpp"
#include "bbpde/linalg.hpp"

namespace bbpde::spectral {

struct SpectralOperator {
  /// lambda_0 .. lambda_n, all strictly positive.
  std::vector<double> eigenvalues;
  double beta = 0.0;
  double delta_inf = 0.0;
  double delta_sup = 0.0;

  static SpectralOperator from_eigenvalues(std::vector<double> eig, double beta = 0.0) {
    if (eig.empty()) throw InvalidArgument("spectrum must be nonempty");
    SpectralOperator op;
    op.delta_inf = eig.front();
    op.delta_sup = eig.front();
    for (double l : eig) {
      if (!(l > 0.0) || !std::isfinite(l)) throw InvalidArgument("eigenvalues must be positive and finite");
      op.delta_inf = std::min(op.delta_inf, l);
      op.delta_sup = std::max(op.delta_sup, l);
    }
    op.eigenvalues = std::move(eig);
    op.beta = beta;
    return op;
  }

  Index size() const noexcept { return static_cast<Index>(eigenvalues.size()); }
  DenseVector diagonal() const {
    return Eigen::Map<const DenseVector>(eigenvalues.data(), size());
  }
};

/// G(u) = diag(lambda) u - b in the eigenbasis with identity Gram.
class SpectralQuadratic {
 public:
  SpectralQuadratic(const SpectralOperator& op, DenseVector b)
      : lambda_(op.diagonal()), b_(std::move(b)), space_(WeightedSpace::euclidean(op.size())) {
    if (b_.size() != lambda_.size()) throw InvalidArgument("right-hand side does not match spectrum");
  }

  const WeightedSpace& space() const { return space_; }
  Index dimension() const { return lambda_.size(); }
  DenseVector gradient(const DenseVector& u) const {
    if (u.size() != dimension()) throw InvalidArgument("iterate dimension mismatch");
    return lambda_.cwiseProduct(u) - b_;
  }
  double objective(const DenseVector& u) const {
    return 0.5 * u.dot(lambda_.cwiseProduct(u)) - b_.dot(u);
  }
  DenseVector solution() const { return b_.cwiseQuotient(lambda_); }
  const DenseVector& eigenvalues() const { return lambda_; }

 private:
  DenseVector lambda_;
  DenseVector b_;
  WeightedSpace space_;
};

struct Decay {
  enum class Kind { geometric, algebraic };
  Kind kind = Kind::geometric;
  /// ratio r in (0,1) for geometric, power p > 0 for algebraic.
  double parameter = 0.5;

  static Decay geometric(double r) { return {Kind::geometric, r}; }
  static Decay algebraic(double p) { return {Kind::algebraic, p}; }

  /// "geometric:0.5" or "algebraic:2".
  static Decay parse(const std::string& s) {
    auto colon = s.find(':');
    if (colon == std::string::npos) throw InvalidArgument("decay must look like kind:value, got '" + s + "'");
    std::string kind = s.substr(0, colon);
    double v = std::stod(s.substr(colon + 1));
    if (kind == "geometric") return geometric(v);
    if (kind == "algebraic") return algebraic(v);
    throw InvalidArgument("unknown decay kind '" + kind + "'");
  }
  std::string to_string() const {
    return (kind == Kind::geometric ? "geometric:" : "algebraic:") + std::to_string(parameter);
  }
};

struct PocoInstance {
  SpectralOperator op;
  SpectralQuadratic problem;
  /// g^1: spectral coordinates the first gradient should carry.
  DenseVector initial_mass;

  /// C2 start whose first gradient equals initial_mass; alpha_1 is the
  /// Rayleigh quotient of that gradient, so it lies inside the spectrum.
  InitIterateAndStep start_from_mass() const {
    const DenseVector& lam = problem.eigenvalues();
    DenseVector u1 = problem.solution() + initial_mass.cwiseQuotient(lam);
    double alpha1 = initial_mass.dot(lam.cwiseProduct(initial_mass)) / initial_mass.squaredNorm();
    return {std::move(u1), alpha1};
  }
};

/// Spectrum {beta} U {beta + delta_i : i = 1..n}, delta_1 = 1, with b chosen
/// so that u* is the all-ones vector. A seed draws random positive initial
/// masses in [0.5, 1.5); without one the masses are all ones.
inline PocoInstance make_poco(double beta, Decay decay, int n,
                              std::optional<std::uint64_t> seed = std::nullopt) {
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  if (n < 2) throw InvalidArgument("poco spectrum needs n >= 2");
  if (decay.kind == Decay::Kind::geometric && !(decay.parameter > 0.0 && decay.parameter < 1.0))
    throw InvalidArgument("geometric ratio must lie in (0,1)");
  if (decay.kind == Decay::Kind::algebraic && !(decay.parameter > 0.0))
    throw InvalidArgument("algebraic power must be positive");

  std::vector<double> eig;
  eig.reserve(static_cast<std::size_t>(n) + 1);
  eig.push_back(beta);
  for (int i = 1; i <= n; ++i) {
    double delta = decay.kind == Decay::Kind::geometric ? std::pow(decay.parameter, i - 1)
                                                        : 1.0 / std::pow(static_cast<double>(i), decay.parameter);
    eig.push_back(beta + delta);
  }
  SpectralOperator op = SpectralOperator::from_eigenvalues(std::move(eig), beta);
  DenseVector b = op.diagonal();  // Lambda * ones
  DenseVector mass = DenseVector::Ones(op.size());
  if (seed) {
    std::mt19937_64 rng(*seed);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    for (Index i = 0; i < mass.size(); ++i) mass[i] = dist(rng);
  }
  SpectralQuadratic problem(op, std::move(b));
  return PocoInstance{std::move(op), std::move(problem), std::move(mass)};
}

struct RateConstants {
  double kappa = 1.0;
  double gamma_A = 0.0;
  double rho_A = 0.0;
};

inline RateConstants rate_constants(double delta_inf, double delta_sup) {
  if (!(delta_inf > 0.0) || delta_sup < delta_inf) throw InvalidArgument("need 0 < delta_inf <= delta_sup");
  return {delta_sup / delta_inf, (delta_sup - delta_inf) / delta_inf, (delta_sup - delta_inf) / delta_sup};
}

inline RateConstants rate_constants(const SpectralOperator& op) {
  return rate_constants(op.delta_inf, op.delta_sup);
}

/// Per-iteration spectral components g_i^k (signed), k = 1..K.
struct ComponentTrace {
  std::vector<DenseVector> components;

  double squared_norm(std::size_t k_index) const { return components.at(k_index).squaredNorm(); }
};

/// Rebuilds g^k from g^1 with the scalar recurrence
/// g_i^{k+1} = (1 - lambda_i / alpha_k) g_i^k. The trace must have been
/// recorded with record_gradients on a problem built from `op`.
inline ComponentTrace component_trace(const SpectralOperator& op, const BBTrace& trace) {
  if (trace.gradients.empty()) throw InvalidArgument("trace carries no recorded gradients");
  if (trace.gradients.front().size() != op.size())
    throw InvalidArgument("trace dimension does not match the spectral operator");
  const DenseVector lam = op.diagonal();
  ComponentTrace out;
  out.components.reserve(trace.records.size());
  DenseVector g = trace.gradients.front();
  out.components.push_back(g);
  for (std::size_t i = 0; i + 1 < trace.records.size(); ++i) {
    const auto& alpha = trace.records[i].alpha;
    if (!alpha) throw InvalidArgument("trace record without step size before the last iteration");
    g = (DenseVector::Ones(lam.size()) - lam / *alpha).cwiseProduct(g);
    out.components.push_back(g);
  }
  return out;
}

/// Smallest m with |G_{k+m}| <= |G_k| / 2 for every k where both indices are
/// recorded. The trace must reach |G_K| < 1e-12 |G_1|.
inline int empirical_half_life(const SpectralOperator& op, const BBTrace& trace) {
  (void)op;
  const auto norms = trace.grad_norms();
  if (norms.size() < 2 || !(norms.back() < 1e-12 * norms.front()))
    throw InsufficientData("trace does not reach 1e-12 relative gradient reduction");
  const std::size_t K = norms.size();
  for (std::size_t m = 1; m < K; ++m) {
    bool ok = true;
    for (std::size_t k = 0; k + m < K && ok; ++k) ok = norms[k + m] <= 0.5 * norms[k];
    if (ok) return static_cast<int>(m);
  }
  return static_cast<int>(K - 1);
}

/// ceil(-log 2 / log gamma_A) when kappa < 2; 1 when the spectrum is a point.
inline std::optional<int> half_life_bound(const SpectralOperator& op) {
  RateConstants rc = rate_constants(op);
  if (rc.gamma_A == 0.0) return 1;
  if (!(rc.kappa < 2.0)) return std::nullopt;
  return static_cast<int>(std::ceil(-std::log(2.0) / std::log(rc.gamma_A)));
}

}  // namespace bbpde::spectral
