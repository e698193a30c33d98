#pragma once

// Experiment engine: builds problems from a flat spec, runs Algorithm traces,
// assembles k*(eps) tables and their mesh-independence summaries.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bbpde/bb_solver.hpp"
#include "bbpde/errors.hpp"
#include "bbpde/fem_burgers.hpp"
#include "bbpde/fem_poisson.hpp"
#include "bbpde/fem_wave.hpp"
#include "bbpde/spectral_quadratic.hpp"

namespace bbpde::harness {

enum class ProblemKind { poisson, wave, burgers, spectral };

inline std::string to_string(ProblemKind p) {
  switch (p) {
    case ProblemKind::poisson: return "poisson";
    case ProblemKind::wave: return "wave";
    case ProblemKind::burgers: return "burgers";
    case ProblemKind::spectral: return "spectral";
  }
  return "?";
}

inline ProblemKind parse_problem(const std::string& s) {
  if (s == "poisson") return ProblemKind::poisson;
  if (s == "wave") return ProblemKind::wave;
  if (s == "burgers") return ProblemKind::burgers;
  if (s == "spectral") return ProblemKind::spectral;
  throw InvalidArgument("unknown problem '" + s + "'");
}

/// One column of a table. For the spectral problem `level` is the truncation
/// size n; dt is only meaningful for wave and burgers.
struct Discretization {
  int level = 0;
  double dt = 0.0;
  bool operator==(const Discretization&) const = default;
};

struct ExperimentSpec {
  ProblemKind problem = ProblemKind::poisson;
  std::vector<StepRule> rules{StepRule::BB1, StepRule::BB2, StepRule::ABB};
  std::vector<double> betas;
  std::vector<double> epsilons{1e-2, 1e-4, 1e-6, 1e-8};
  std::vector<Discretization> grid;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int max_iter = 1000;
  /// Time horizon for wave and burgers.
  double horizon = 1.0;
  /// Spectral family for the spectral problem.
  std::string decay = "geometric:0.5";
  int jobs = 1;
};

/// Desk-scale defaults for each problem.
inline ExperimentSpec default_spec(ProblemKind p) {
  ExperimentSpec s;
  s.problem = p;
  switch (p) {
    case ProblemKind::poisson:
      s.betas = {0.2, 0.05, 0.01};
      s.grid = {{5, 0.0}, {6, 0.0}, {7, 0.0}};
      break;
    case ProblemKind::wave:
      s.betas = {0.5, 0.05};
      s.grid = {{4, 0.01}, {5, 0.04}, {6, 0.016}};
      break;
    case ProblemKind::burgers:
      s.betas = {0.5, 0.05};
      s.grid = {{5, 1.0 / 16}, {6, 1.0 / 32}, {7, 1.0 / 64}};
      break;
    case ProblemKind::spectral:
      s.betas = {0.5};
      s.grid = {{50, 0.0}, {200, 0.0}, {1000, 0.0}};
      break;
  }
  return s;
}

inline void validate(const ExperimentSpec& s) {
  if (s.rules.empty() || s.betas.empty() || s.epsilons.empty() || s.grid.empty())
    throw InvalidArgument("experiment lists must be nonempty");
  for (std::size_t i = 1; i < s.epsilons.size(); ++i)
    if (!(s.epsilons[i] < s.epsilons[i - 1])) throw InvalidArgument("epsilons must be strictly decreasing");
  for (double e : s.epsilons)
    if (!(e > 0.0)) throw InvalidArgument("epsilons must be positive");
  for (double b : s.betas)
    if (!(b > 0.0)) throw InvalidArgument("betas must be positive");
  if (s.max_iter < 1) throw InvalidArgument("max_iter must be positive");
  if (s.jobs < 1) throw InvalidArgument("jobs must be positive");
  const bool timed = s.problem == ProblemKind::wave || s.problem == ProblemKind::burgers;
  for (const auto& d : s.grid) {
    if (d.level < 1) throw InvalidArgument("levels must be positive");
    if (timed && !(d.dt > 0.0)) throw InvalidArgument(to_string(s.problem) + " needs a time step per level (dt_pairs)");
  }
}

// ---- parsing helpers ----

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const std::string t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size()) throw InvalidArgument("not a number: '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s) {
  long long v = 0;
  const std::string t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size()) throw InvalidArgument("not an integer: '" + s + "'");
  return v;
}

inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& x : split(s, ',')) out.push_back(parse_double(x));
  return out;
}

inline std::vector<StepRule> parse_rule_list(const std::string& s) {
  std::vector<StepRule> out;
  for (const auto& x : split(s, ',')) out.push_back(parse_step_rule(x));
  return out;
}

/// "5,6,7" -> levels without a time step.
inline std::vector<Discretization> parse_levels(const std::string& s) {
  std::vector<Discretization> out;
  for (const auto& x : split(s, ',')) out.push_back({static_cast<int>(parse_int(x)), 0.0});
  return out;
}

/// "0.01:4,0.04:5" -> (dt, level) pairs.
inline std::vector<Discretization> parse_dt_pairs(const std::string& s) {
  std::vector<Discretization> out;
  for (const auto& x : split(s, ',')) {
    auto parts = split(x, ':');
    if (parts.size() != 2) throw InvalidArgument("dt pair must look like dt:level, got '" + x + "'");
    out.push_back({static_cast<int>(parse_int(parts[1])), parse_double(parts[0])});
  }
  return out;
}

/// Flat key = value file; '#' starts a comment.
inline std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

/// Applies keys onto `spec`. Setting `problem` first resets the defaults.
inline void apply_key_values(ExperimentSpec& spec, const std::map<std::string, std::string>& kv) {
  if (auto it = kv.find("problem"); it != kv.end()) spec = default_spec(parse_problem(it->second));
  for (const auto& [k, v] : kv) {
    if (k == "problem") continue;
    if (k == "rules") spec.rules = parse_rule_list(v);
    else if (k == "betas") spec.betas = parse_double_list(v);
    else if (k == "epsilons") spec.epsilons = parse_double_list(v);
    else if (k == "levels") spec.grid = parse_levels(v);
    else if (k == "dt_pairs") spec.grid = parse_dt_pairs(v);
    else if (k == "out_dir") spec.out_dir = v;
    else if (k == "seed") spec.seed = static_cast<std::uint64_t>(parse_int(v));
    else if (k == "max_iter") spec.max_iter = static_cast<int>(parse_int(v));
    else if (k == "horizon") spec.horizon = parse_double(v);
    else if (k == "decay") spec.decay = v;
    else if (k == "jobs") spec.jobs = static_cast<int>(parse_int(v));
    else throw InvalidArgument("unknown config key '" + k + "'");
  }
}

inline ExperimentSpec load_spec(const std::string& path) {
  ExperimentSpec spec;
  auto kv = read_key_values(path);
  if (!kv.count("problem")) throw InvalidArgument(path + ": missing 'problem'");
  apply_key_values(spec, kv);
  return spec;
}

// ---- formatting ----

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F&& f, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += f(xs[i]);
  }
  return out;
}

inline std::string manifest(const ExperimentSpec& s) {
  std::ostringstream o;
  o << "problem = " << to_string(s.problem) << "\n";
  o << "rules = " << join(s.rules, [](StepRule r) { return to_string(r); }) << "\n";
  o << "betas = " << join(s.betas, fmt) << "\n";
  o << "epsilons = " << join(s.epsilons, fmt) << "\n";
  if (s.problem == ProblemKind::wave || s.problem == ProblemKind::burgers)
    o << "dt_pairs = " << join(s.grid, [](const Discretization& d) { return fmt(d.dt) + ":" + std::to_string(d.level); })
      << "\n";
  else
    o << "levels = " << join(s.grid, [](const Discretization& d) { return std::to_string(d.level); }) << "\n";
  o << "out_dir = " << s.out_dir << "\n";
  o << "seed = " << s.seed << "\n";
  o << "max_iter = " << s.max_iter << "\n";
  if (s.problem == ProblemKind::wave || s.problem == ProblemKind::burgers) o << "horizon = " << fmt(s.horizon) << "\n";
  if (s.problem == ProblemKind::spectral) o << "decay = " << s.decay << "\n";
  o << "jobs = " << s.jobs << "\n";
  return o.str();
}

// ---- problem factory ----

/// A problem ready for run(): type-erased view plus its owner and start.
struct BuiltProblem {
  std::shared_ptr<const void> owner;
  std::optional<FunctionProblem> problem;
  InitScheme init = InitDefault{};
  double h = 0.0;
  double dt = 0.0;
};

template <typename P>
BuiltProblem hold(std::shared_ptr<const P> p) {
  BuiltProblem b;
  b.problem.emplace(FunctionProblem::wrap(*p));
  b.owner = std::move(p);
  return b;
}

inline BuiltProblem build_problem(const ExperimentSpec& spec, double beta, const Discretization& d) {
  switch (spec.problem) {
    case ProblemKind::poisson: {
      auto p = std::make_shared<const fem::PoissonProblem>(fem::PoissonConfig::example(beta, d.level));
      BuiltProblem b = hold(p);
      b.h = p->assembly().mesh.h();
      return b;
    }
    case ProblemKind::wave: {
      auto cfg = fem::WaveConfig::example(beta, d.level, d.dt);
      cfg.T = spec.horizon;
      auto p = std::make_shared<const fem::WaveProblem>(cfg);
      BuiltProblem b = hold(p);
      b.h = p->mesh().h();
      b.dt = d.dt;
      return b;
    }
    case ProblemKind::burgers: {
      auto cfg = fem::BurgersConfig::example(beta, d.level, d.dt);
      cfg.T = spec.horizon;
      auto p = std::make_shared<const fem::BurgersProblem>(cfg);
      BuiltProblem b = hold(p);
      b.h = p->mesh().h();
      b.dt = d.dt;
      return b;
    }
    case ProblemKind::spectral: {
      auto inst = std::make_shared<const spectral::PocoInstance>(
          spectral::make_poco(beta, spectral::Decay::parse(spec.decay), d.level, spec.seed));
      BuiltProblem b;
      b.problem.emplace(FunctionProblem::wrap(inst->problem));
      b.init = inst->start_from_mass();
      b.owner = std::move(inst);
      return b;
    }
  }
  throw InvalidArgument("unknown problem kind");
}

/// Outcome of a single solve; `failure` is set when the back-end threw.
struct RunResult {
  BBTrace trace;
  std::optional<std::string> failure;
};

inline BBConfig solver_config(const BuiltProblem& b, StepRule rule, double eps, int max_iter, bool objective) {
  BBConfig c;
  c.rule = rule;
  c.eps = eps;
  c.max_iter = max_iter;
  c.init = b.init;
  c.record_objective = objective;
  return c;
}

/// Runs one Algorithm trace. Step breakdowns end the trace; back-end errors
/// (linear or Newton solver failures) are reported in `failure`.
inline RunResult run_single(const BuiltProblem& b, StepRule rule, double eps, int max_iter, bool objective = true) {
  RunResult r;
  try {
    r.trace = run_recording_breakdown(*b.problem, solver_config(b, rule, eps, max_iter, objective));
  } catch (const Error& e) {
    r.failure = e.what();
  }
  return r;
}

inline void write_trace_csv(const std::string& path, const BBTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "k,grad_norm,alpha,objective\n";
  for (const auto& r : trace.records) {
    out << r.k << ',' << fmt(r.grad_norm) << ',' << (r.alpha ? fmt(*r.alpha) : "") << ','
        << (r.objective ? fmt(*r.objective) : "") << '\n';
  }
  if (!out) throw IoError("error while writing '" + path + "'");
}

// ---- k* tables ----

struct KStarRow {
  std::string problem;
  std::string rule;
  double beta = 0.0;
  double eps = 0.0;
  int level = 0;
  double h = 0.0;
  double dt = 0.0;
  std::optional<int> k_star;
  /// converged | max_iter | step_breakdown | solver_failure
  std::string reason;
};

using KStarTable = std::vector<KStarRow>;

/// Runs `n` independent jobs on at most `workers` threads; job i writes only
/// its own slot, so results do not depend on scheduling.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& job) {
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < w; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
  for (auto& th : pool) th.join();
}

/// One solve per (beta, rule, level) at the smallest eps; k* for the other
/// tolerances is read off the same trace. Rows are ordered beta, rule, eps,
/// level, following the spec's list order.
inline KStarTable build_table(const ExperimentSpec& spec) {
  validate(spec);
  struct Cell {
    double beta;
    StepRule rule;
    Discretization d;
    double h = 0.0;
    RunResult result;
  };
  std::vector<Cell> cells;
  for (double beta : spec.betas)
    for (StepRule rule : spec.rules)
      for (const auto& d : spec.grid) cells.push_back({beta, rule, d, 0.0, {}});

  const double eps_min = spec.epsilons.back();
  parallel_for(cells.size(), spec.jobs, [&](std::size_t i) {
    Cell& c = cells[i];
    try {
      BuiltProblem b = build_problem(spec, c.beta, c.d);
      c.h = b.h;
      c.result = run_single(b, c.rule, eps_min, spec.max_iter, false);
    } catch (const Error& e) {
      c.result.failure = e.what();
    }
  });

  KStarTable table;
  const std::size_t ng = spec.grid.size();
  for (std::size_t bi = 0; bi < spec.betas.size(); ++bi)
    for (std::size_t ri = 0; ri < spec.rules.size(); ++ri)
      for (double eps : spec.epsilons)
        for (std::size_t gi = 0; gi < ng; ++gi) {
          const Cell& c = cells[(bi * spec.rules.size() + ri) * ng + gi];
          KStarRow row;
          row.problem = to_string(spec.problem);
          row.rule = to_string(c.rule);
          row.beta = c.beta;
          row.eps = eps;
          row.level = c.d.level;
          row.h = c.h;
          row.dt = c.d.dt;
          if (c.result.failure) {
            row.reason = "solver_failure";
          } else {
            row.k_star = k_star(c.result.trace, eps);
            if (row.k_star)
              row.reason = "converged";
            else
              row.reason = to_string(c.result.trace.reason == Termination::converged ? Termination::max_iter
                                                                                     : c.result.trace.reason);
          }
          table.push_back(row);
        }
  return table;
}

inline void write_table_csv(const std::string& path, const KStarTable& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "problem,rule,beta,eps,level,h,dt,k_star,terminated_reason\n";
  for (const auto& r : t)
    out << r.problem << ',' << r.rule << ',' << fmt(r.beta) << ',' << fmt(r.eps) << ',' << r.level << ','
        << fmt(r.h) << ',' << fmt(r.dt) << ',' << (r.k_star ? std::to_string(*r.k_star) : "") << ',' << r.reason
        << '\n';
  if (!out) throw IoError("error while writing '" + path + "'");
}

inline KStarTable read_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open table '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "problem,rule,beta,eps,level,h,dt,k_star,terminated_reason")
    throw InvalidArgument(path + ": not a k* table");
  KStarTable t;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::string item;
    std::istringstream ls(line);
    while (std::getline(ls, item, ',')) f.push_back(trim(item));
    if (f.size() == 8) f.emplace_back();  // getline drops a trailing empty field
    if (f.size() != 9) throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected 9 fields");
    KStarRow r;
    r.problem = f[0];
    r.rule = f[1];
    r.beta = parse_double(f[2]);
    r.eps = parse_double(f[3]);
    r.level = static_cast<int>(parse_int(f[4]));
    r.h = parse_double(f[5]);
    r.dt = parse_double(f[6]);
    if (!f[7].empty()) r.k_star = static_cast<int>(parse_int(f[7]));
    r.reason = f[8];
    if (r.k_star.has_value() != (r.reason == "converged"))
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": k_star present iff converged");
    t.push_back(r);
  }
  return t;
}

// ---- spread and sandwich ----

inline int spread_of(const std::vector<int>& ks) {
  if (ks.empty()) throw InvalidArgument("spread of an empty set");
  auto [lo, hi] = std::minmax_element(ks.begin(), ks.end());
  return *hi - *lo;
}

struct SpreadRow {
  std::string problem;
  std::string rule;
  double beta = 0.0;
  double eps = 0.0;
  int levels = 0;
  /// Absent when some level of the group did not converge.
  std::optional<int> ell;
};

using SpreadReport = std::vector<SpreadRow>;

/// Groups by (problem, rule, beta, eps) in first-appearance order.
inline SpreadReport spread(const KStarTable& t) {
  SpreadReport out;
  std::vector<std::vector<int>> ks;
  std::vector<bool> failed;
  for (const auto& r : t) {
    std::size_t g = 0;
    for (; g < out.size(); ++g)
      if (out[g].problem == r.problem && out[g].rule == r.rule && out[g].beta == r.beta && out[g].eps == r.eps) break;
    if (g == out.size()) {
      out.push_back({r.problem, r.rule, r.beta, r.eps, 0, std::nullopt});
      ks.emplace_back();
      failed.push_back(false);
    }
    ++out[g].levels;
    if (r.k_star)
      ks[g].push_back(*r.k_star);
    else
      failed[g] = true;
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    if (out[g].levels < 2)
      throw InvalidArgument("spread needs at least two levels per group (" + out[g].rule + ", beta " +
                            fmt(out[g].beta) + ", eps " + fmt(out[g].eps) + ")");
    if (!failed[g]) out[g].ell = spread_of(ks[g]);
  }
  return out;
}

inline void write_spread_csv(const std::string& path, const SpreadReport& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "problem,rule,beta,eps,levels,ell\n";
  for (const auto& r : s)
    out << r.problem << ',' << r.rule << ',' << fmt(r.beta) << ',' << fmt(r.eps) << ',' << r.levels << ','
        << (r.ell ? std::to_string(*r.ell) : "unavailable") << '\n';
  if (!out) throw IoError("error while writing '" + path + "'");
}

struct SandwichViolation {
  std::string rule;
  double beta = 0.0;
  double eps = 0.0;
  int level = 0;
  int k_level = 0;
  int k_reference = 0;
  /// "above" (k_h > k_ref + slack) or "below" (k_h < k_ref - ell_bound).
  std::string side;
};

struct SandwichReport {
  int reference_level = 0;
  int checked = 0;
  /// Groups skipped because a k* was missing.
  int skipped = 0;
  std::vector<SandwichViolation> violations;
};

/// Compares every non-reference level against the reference level within each
/// (problem, rule, beta, eps) group.
inline SandwichReport sandwich_check(const KStarTable& t, int reference_level, int slack, int ell_bound) {
  SandwichReport rep;
  rep.reference_level = reference_level;
  for (const auto& ref : t) {
    if (ref.level != reference_level) continue;
    if (!ref.k_star) {
      ++rep.skipped;
      continue;
    }
    for (const auto& r : t) {
      if (r.level == reference_level || r.problem != ref.problem || r.rule != ref.rule || r.beta != ref.beta ||
          r.eps != ref.eps)
        continue;
      if (!r.k_star) {
        ++rep.skipped;
        continue;
      }
      ++rep.checked;
      if (*r.k_star > *ref.k_star + slack)
        rep.violations.push_back({r.rule, r.beta, r.eps, r.level, *r.k_star, *ref.k_star, "above"});
      else if (*r.k_star < *ref.k_star - ell_bound)
        rep.violations.push_back({r.rule, r.beta, r.eps, r.level, *r.k_star, *ref.k_star, "below"});
    }
  }
  return rep;
}

inline void write_sandwich_csv(const std::string& path, const SandwichReport& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "rule,beta,eps,level,k_star,reference_level,k_star_reference,side\n";
  for (const auto& v : s.violations)
    out << v.rule << ',' << fmt(v.beta) << ',' << fmt(v.eps) << ',' << v.level << ',' << v.k_level << ','
        << s.reference_level << ',' << v.k_reference << ',' << v.side << '\n';
  if (!out) throw IoError("error while writing '" + path + "'");
}

// ---- spectral sweep ----

struct SpectralSweepRow {
  double beta = 0.0;
  std::string decay;
  int n = 0;
  std::string rule;
  spectral::RateConstants rates;
  std::optional<int> half_life;
  std::optional<int> half_life_bound;
  double max_ratio = 0.0;  // max |G_{k+1}| / |G_k|
  bool monotone = true;
  std::optional<int> k_star;  // at the smallest eps
};

inline std::vector<SpectralSweepRow> spectral_sweep(const std::vector<double>& betas,
                                                    const std::vector<std::string>& decays,
                                                    const std::vector<int>& sizes, const std::vector<StepRule>& rules,
                                                    double eps, std::uint64_t seed, int max_iter = 10000) {
  std::vector<SpectralSweepRow> out;
  for (double beta : betas)
    for (const auto& dec : decays)
      for (int n : sizes) {
        auto inst = spectral::make_poco(beta, spectral::Decay::parse(dec), n, seed);
        for (StepRule rule : rules) {
          BBConfig c;
          c.rule = rule;
          c.eps = eps;
          c.max_iter = max_iter;
          c.init = inst.start_from_mass();
          BBTrace tr = run_recording_breakdown(inst.problem, c);
          SpectralSweepRow row;
          row.beta = beta;
          row.decay = dec;
          row.n = n;
          row.rule = to_string(rule);
          row.rates = spectral::rate_constants(inst.op);
          row.half_life_bound = spectral::half_life_bound(inst.op);
          try {
            row.half_life = spectral::empirical_half_life(inst.op, tr);
          } catch (const InsufficientData&) {
          }
          auto g = tr.grad_norms();
          for (std::size_t k = 1; k < g.size(); ++k) {
            if (g[k - 1] > 0.0) row.max_ratio = std::max(row.max_ratio, g[k] / g[k - 1]);
            if (g[k] > g[k - 1]) row.monotone = false;
          }
          row.k_star = k_star(tr, eps);
          out.push_back(row);
        }
      }
  return out;
}

inline void write_spectral_csv(const std::string& path, const std::vector<SpectralSweepRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "beta,decay,n,rule,kappa,gamma_A,rho_A,half_life,half_life_bound,max_ratio,monotone,k_star\n";
  auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const auto& r : rows)
    out << fmt(r.beta) << ',' << r.decay << ',' << r.n << ',' << r.rule << ',' << fmt(r.rates.kappa) << ','
        << fmt(r.rates.gamma_A) << ',' << fmt(r.rates.rho_A) << ',' << opt(r.half_life) << ','
        << opt(r.half_life_bound) << ',' << fmt(r.max_ratio) << ',' << (r.monotone ? 1 : 0) << ',' << opt(r.k_star)
        << '\n';
  if (!out) throw IoError("error while writing '" + path + "'");
}

}  // namespace bbpde::harness
