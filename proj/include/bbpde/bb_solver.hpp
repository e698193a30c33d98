#pragma once

// Barzilai-Borwein gradient iteration over a weighted inner-product space.
//
//   u_{k+1} = u_k - G_k / alpha_k,
//   alpha^BB1_k = (S,Y)_W / (S,S)_W,   alpha^BB2_k = (Y,Y)_W / (S,Y)_W,
//
// with S = u_k - u_{k-1} and Y = G_k - G_{k-1}. The iteration stops as soon
// as |G_k|_W < eps (or G_k == 0). No line search or globalization.

#include <concepts>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bbpde/errors.hpp"
#include "bbpde/linalg.hpp"

namespace bbpde {

/// A reduced objective exposing its gradient (Riesz representative in the
/// problem's weighted space).
template <typename P>
concept GradientProblem = requires(const P& p, const DenseVector& u) {
  { p.space() } -> std::convertible_to<const WeightedSpace&>;
  { p.gradient(u) } -> std::convertible_to<DenseVector>;
  { p.dimension() } -> std::convertible_to<Index>;
};

template <typename P>
concept HasObjective = requires(const P& p, const DenseVector& u) {
  { p.objective(u) } -> std::convertible_to<double>;
};

/// Type-erased problem assembled from callables.
class FunctionProblem {
 public:
  using Gradient = std::function<DenseVector(const DenseVector&)>;
  using Objective = std::function<double(const DenseVector&)>;

  FunctionProblem(WeightedSpace space, Gradient gradient, Objective objective = {})
      : space_(std::move(space)), gradient_(std::move(gradient)), objective_(std::move(objective)) {}

  /// Any GradientProblem, held by reference.
  template <GradientProblem P>
  static FunctionProblem wrap(const P& p) {
    Objective obj;
    if constexpr (HasObjective<P>) obj = [&p](const DenseVector& u) { return p.objective(u); };
    return FunctionProblem(p.space(), [&p](const DenseVector& u) { return p.gradient(u); }, obj);
  }

  const WeightedSpace& space() const { return space_; }
  Index dimension() const { return space_.dimension(); }
  DenseVector gradient(const DenseVector& u) const { return gradient_(u); }
  bool has_objective() const { return static_cast<bool>(objective_); }
  double objective(const DenseVector& u) const {
    if (!objective_) throw InvalidArgument("problem has no objective");
    return objective_(u);
  }

 private:
  WeightedSpace space_;
  Gradient gradient_;
  Objective objective_;
};

enum class StepRule { BB1, BB2, ABB };

/// Rule that is in force at iteration k. ABB: BB1 at odd k, BB2 at even k.
inline StepRule rule_at(StepRule rule, int k) {
  if (rule != StepRule::ABB) return rule;
  return (k % 2 == 1) ? StepRule::BB1 : StepRule::BB2;
}

inline std::string to_string(StepRule r) {
  switch (r) {
    case StepRule::BB1: return "BB1";
    case StepRule::BB2: return "BB2";
    case StepRule::ABB: return "ABB";
  }
  return "?";
}

inline StepRule parse_step_rule(const std::string& s) {
  if (s == "BB1" || s == "bb1") return StepRule::BB1;
  if (s == "BB2" || s == "bb2") return StepRule::BB2;
  if (s == "ABB" || s == "abb") return StepRule::ABB;
  throw InvalidArgument("unknown step rule '" + s + "'");
}

/// C1: two distinct starting iterates.
struct InitTwoIterates {
  DenseVector u0;
  DenseVector u1;
};

/// C2: one starting iterate plus the first step size.
struct InitIterateAndStep {
  DenseVector u1;
  double alpha1 = 1.0;
};

/// u0 = 0, alpha0 = 1, hence u1 = -G(0).
struct InitDefault {};

using InitScheme = std::variant<InitDefault, InitTwoIterates, InitIterateAndStep>;

struct Safeguard {
  double alpha_min = 1e-12;
  double alpha_max = 1e12;
};

struct BBConfig {
  StepRule rule = StepRule::BB1;
  double eps = 1e-6;
  int max_iter = 10000;
  InitScheme init = InitDefault{};
  std::optional<Safeguard> safeguard;
  bool record_objective = false;
  /// Keep G_k for every recorded k (needed for spectral diagnostics).
  bool record_gradients = false;
  bool record_iterates = false;
};

enum class Termination { converged, max_iter, step_breakdown };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iter: return "max_iter";
    case Termination::step_breakdown: return "step_breakdown";
  }
  return "?";
}

struct IterationRecord {
  int k = 0;
  double grad_norm = 0.0;
  /// Step used to leave u_k; absent on the terminating iteration.
  std::optional<double> alpha;
  std::optional<double> objective;
};

struct BBTrace {
  std::vector<IterationRecord> records;
  DenseVector final_iterate;
  Termination reason = Termination::max_iter;
  std::vector<DenseVector> gradients;  // G_k, k = 1.. (when recorded)
  std::vector<DenseVector> iterates;   // u_k, k = 1.. (when recorded)

  std::size_t size() const noexcept { return records.size(); }
  std::vector<double> grad_norms() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.grad_norm);
    return out;
  }
};

/// Raised by run() when a BB quotient cannot be formed; carries the
/// iteration index and the trace recorded so far.
class StepBreakdown : public Error {
 public:
  StepBreakdown(const std::string& what, int k, BBTrace partial, bool nonconvex)
      : Error(what + " at iteration k=" + std::to_string(k)),
        k_(k),
        partial_(std::move(partial)),
        nonconvex_(nonconvex) {}
  int k() const noexcept { return k_; }
  const BBTrace& partial_trace() const noexcept { return partial_; }
  bool nonconvex() const noexcept { return nonconvex_; }

 private:
  int k_;
  BBTrace partial_;
  bool nonconvex_;
};

/// BB quotient for the given rule (BB1 or BB2; ABB must be resolved first).
/// Throws DegenerateStep if (S,S)_W == 0 and Nonconvexity if (S,Y)_W <= 0
/// without a safeguard; with a safeguard the fallback is alpha_max and the
/// result is clamped into [alpha_min, alpha_max].
inline double bb_step(const DenseVector& s, const DenseVector& y, const WeightedSpace& space,
                      StepRule rule, const std::optional<Safeguard>& safeguard = std::nullopt) {
  if (rule == StepRule::ABB) throw InvalidArgument("bb_step needs a concrete rule (BB1 or BB2)");
  const double ss = wdot(space, s, s);
  if (!(ss > 0.0)) throw DegenerateStep("(S,S)_W vanished");
  const double sy = wdot(space, s, y);
  if (!(sy > 0.0)) {
    if (!safeguard) throw Nonconvexity("non-positive curvature (S,Y)_W = " + std::to_string(sy));
    return safeguard->alpha_max;
  }
  double alpha = rule == StepRule::BB1 ? sy / ss : wdot(space, y, y) / sy;
  if (safeguard) alpha = std::clamp(alpha, safeguard->alpha_min, safeguard->alpha_max);
  return alpha;
}

inline void validate(const BBConfig& c, Index dimension) {
  if (!(c.eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (c.max_iter < 1) throw InvalidArgument("max_iter must be positive");
  if (c.safeguard && !(c.safeguard->alpha_min < c.safeguard->alpha_max))
    throw InvalidArgument("safeguard requires alpha_min < alpha_max");
  if (const auto* c1 = std::get_if<InitTwoIterates>(&c.init)) {
    if (c1->u0.size() != dimension || c1->u1.size() != dimension)
      throw InvalidArgument("initial iterates do not match problem dimension");
    if (c1->u0 == c1->u1) throw InvalidArgument("C1 initialization requires u0 != u1");
  } else if (const auto* c2 = std::get_if<InitIterateAndStep>(&c.init)) {
    if (c2->u1.size() != dimension) throw InvalidArgument("initial iterate does not match problem dimension");
    if (!(c2->alpha1 > 0.0)) throw InvalidArgument("C2 initialization requires alpha1 > 0");
  }
}

/// Runs the BB gradient method. Trace index k matches the iterate u_k; the
/// terminating iterate is recorded too.
template <GradientProblem P>
BBTrace run(const P& problem, const BBConfig& config) {
  const Index n = problem.dimension();
  validate(config, n);
  const WeightedSpace& space = problem.space();

  BBTrace trace;
  DenseVector u_prev, g_prev, u;
  bool have_prev = true;
  std::optional<double> first_alpha;

  if (std::holds_alternative<InitDefault>(config.init)) {
    u_prev = DenseVector::Zero(n);
    g_prev = problem.gradient(u_prev);
    u = -g_prev;
  } else if (const auto* c1 = std::get_if<InitTwoIterates>(&config.init)) {
    u_prev = c1->u0;
    g_prev = problem.gradient(u_prev);
    u = c1->u1;
  } else {
    const auto& c2 = std::get<InitIterateAndStep>(config.init);
    u = c2.u1;
    have_prev = false;
    first_alpha = c2.alpha1;
  }

  for (int k = 1;; ++k) {
    DenseVector g = problem.gradient(u);
    IterationRecord rec;
    rec.k = k;
    rec.grad_norm = wnorm(space, g);
    if (config.record_objective) {
      if constexpr (HasObjective<P>) {
        rec.objective = problem.objective(u);
      } else if constexpr (std::same_as<P, FunctionProblem>) {
        if (problem.has_objective()) rec.objective = problem.objective(u);
      }
    }
    if (config.record_gradients) trace.gradients.push_back(g);
    if (config.record_iterates) trace.iterates.push_back(u);

    if (rec.grad_norm == 0.0 || rec.grad_norm < config.eps) {
      trace.records.push_back(rec);
      trace.reason = Termination::converged;
      trace.final_iterate = std::move(u);
      return trace;
    }
    if (k >= config.max_iter) {
      trace.records.push_back(rec);
      trace.reason = Termination::max_iter;
      trace.final_iterate = std::move(u);
      return trace;
    }

    double alpha = 0.0;
    if (k == 1 && !have_prev) {
      alpha = *first_alpha;
    } else {
      try {
        alpha = bb_step(u - u_prev, g - g_prev, space, rule_at(config.rule, k), config.safeguard);
      } catch (const Error& e) {
        trace.records.push_back(rec);
        trace.reason = Termination::step_breakdown;
        trace.final_iterate = u;
        bool nonconvex = dynamic_cast<const Nonconvexity*>(&e) != nullptr;
        throw StepBreakdown(e.what(), k, std::move(trace), nonconvex);
      }
    }
    rec.alpha = alpha;
    trace.records.push_back(rec);

    DenseVector u_next = u - g / alpha;
    u_prev = std::move(u);
    g_prev = std::move(g);
    u = std::move(u_next);
  }
}

/// Like run(), but a step breakdown ends the trace instead of throwing.
template <GradientProblem P>
BBTrace run_recording_breakdown(const P& problem, const BBConfig& config) {
  try {
    return run(problem, config);
  } catch (const StepBreakdown& e) {
    return e.partial_trace();
  }
}

/// k*(eps): smallest recorded k with |G_k| < eps.
inline std::optional<int> k_star(const BBTrace& trace, double eps) {
  for (const auto& r : trace.records)
    if (r.grad_norm < eps) return r.k;
  return std::nullopt;
}

}  // namespace bbpde
