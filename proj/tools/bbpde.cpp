// bbpde: command-line front end for the BB experiments.
//
//   bbpde run      --problem poisson --rule BB1 --beta 0.01 --level 5 --eps 1e-8 --out out/
//   bbpde table    --config configs/poisson.cfg
//   bbpde spread   --table out/table.csv
//   bbpde sandwich --table out/table.csv --reference-level 7
//   bbpde spectral-sweep --beta 0.5,0.2 --decay geometric:0.5 --level 50,200
//
// Exit status: 0 on success, 1 on usage/I/O errors, 2 on solver failures.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bbpde/harness.hpp"

namespace fs = std::filesystem;
using namespace bbpde;
using namespace bbpde::harness;

namespace {

struct Overrides {
  std::string config;
  std::string problem;
  std::string rules;
  std::string betas;
  std::string epsilons;
  std::string levels;
  std::string dts;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_iter;
  std::optional<int> jobs;
  std::optional<double> horizon;
  std::string decay;
};

void add_experiment_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "key = value experiment file");
  app->add_option("--problem", o.problem, "poisson | wave | burgers | spectral");
  app->add_option("--rule", o.rules, "BB1,BB2,ABB (comma list)");
  app->add_option("--beta", o.betas, "comma list of control costs");
  app->add_option("--eps", o.epsilons, "comma list of tolerances, decreasing");
  app->add_option("--level", o.levels, "comma list of mesh levels (truncation size for spectral)");
  app->add_option("--dt", o.dts, "comma list of time steps, paired with --level");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--seed", o.seed, "random seed (spectral masses)");
  app->add_option("--max-iter", o.max_iter, "iteration cap per run");
  app->add_option("--jobs", o.jobs, "worker threads for table cells");
  app->add_option("--horizon", o.horizon, "final time T for wave and burgers");
  app->add_option("--decay", o.decay, "spectral family, e.g. geometric:0.5 or algebraic:2");
}

ExperimentSpec resolve(const Overrides& o) {
  ExperimentSpec spec;
  if (!o.config.empty()) {
    spec = load_spec(o.config);
    if (!o.problem.empty() && parse_problem(o.problem) != spec.problem)
      throw InvalidArgument("--problem disagrees with the config file");
  } else {
    if (o.problem.empty()) throw InvalidArgument("--problem or --config is required");
    spec = default_spec(parse_problem(o.problem));
  }
  if (!o.rules.empty()) spec.rules = parse_rule_list(o.rules);
  if (!o.betas.empty()) spec.betas = parse_double_list(o.betas);
  if (!o.epsilons.empty()) spec.epsilons = parse_double_list(o.epsilons);
  if (!o.levels.empty()) {
    auto levels = parse_levels(o.levels);
    if (!o.dts.empty()) {
      auto dts = parse_double_list(o.dts);
      if (dts.size() != levels.size()) throw InvalidArgument("--dt and --level must have the same length");
      for (std::size_t i = 0; i < levels.size(); ++i) levels[i].dt = dts[i];
    } else if (spec.problem == ProblemKind::wave || spec.problem == ProblemKind::burgers) {
      // keep the default step of a matching level if there is one
      for (auto& l : levels)
        for (const auto& d : spec.grid)
          if (d.level == l.level) l.dt = d.dt;
    }
    spec.grid = levels;
  } else if (!o.dts.empty()) {
    auto dts = parse_double_list(o.dts);
    if (dts.size() != spec.grid.size()) throw InvalidArgument("--dt needs one value per level");
    for (std::size_t i = 0; i < dts.size(); ++i) spec.grid[i].dt = dts[i];
  }
  if (!o.out.empty()) spec.out_dir = o.out;
  if (o.seed) spec.seed = *o.seed;
  if (o.max_iter) spec.max_iter = *o.max_iter;
  if (o.jobs) spec.jobs = *o.jobs;
  if (o.horizon) spec.horizon = *o.horizon;
  if (!o.decay.empty()) spec.decay = o.decay;
  validate(spec);
  return spec;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

int cmd_run(const Overrides& o) {
  ExperimentSpec spec = resolve(o);
  if (spec.rules.size() != 1 || spec.betas.size() != 1 || spec.grid.size() != 1)
    throw InvalidArgument("run takes exactly one rule, beta and level");
  BuiltProblem b = build_problem(spec, spec.betas.front(), spec.grid.front());
  RunResult r = run_single(b, spec.rules.front(), spec.epsilons.back(), spec.max_iter, true);
  fs::path out = prepare_out(spec.out_dir);
  write_text(out / "manifest.txt", "command = run\n" + manifest(spec));
  if (r.failure) {
    std::cerr << "solver failure: " << *r.failure << "\n";
    return 2;
  }
  write_trace_csv((out / "trace.csv").string(), r.trace);
  std::cout << "iterations: " << r.trace.records.size() << "  reason: " << to_string(r.trace.reason)
            << "  final |G|: " << fmt(r.trace.records.back().grad_norm) << "\n";
  for (double e : spec.epsilons) {
    auto k = k_star(r.trace, e);
    std::cout << "k*(" << fmt(e) << ") = " << (k ? std::to_string(*k) : "-") << "\n";
  }
  std::cout << "wrote " << (out / "trace.csv").string() << "\n";
  return r.trace.reason == Termination::step_breakdown ? 2 : 0;
}

int cmd_table(const Overrides& o) {
  ExperimentSpec spec = resolve(o);
  KStarTable t = build_table(spec);
  fs::path out = prepare_out(spec.out_dir);
  write_table_csv((out / "table.csv").string(), t);
  write_text(out / "manifest.txt", "command = table\n" + manifest(spec));
  int failures = 0;
  for (const auto& r : t) {
    if (r.reason == "solver_failure" || r.reason == "step_breakdown") ++failures;
  }
  std::cout << "wrote " << (out / "table.csv").string() << " (" << t.size() << " rows)\n";
  if (failures) {
    std::cerr << failures << " rows ended in a solver failure\n";
    return 2;
  }
  return 0;
}

int cmd_spread(const std::string& table, const std::string& out_dir) {
  SpreadReport s = spread(read_table_csv(table));
  fs::path out = prepare_out(out_dir);
  write_spread_csv((out / "spread.csv").string(), s);
  for (const auto& r : s)
    std::cout << r.rule << " beta=" << fmt(r.beta) << " eps=" << fmt(r.eps) << " ell="
              << (r.ell ? std::to_string(*r.ell) : "unavailable") << "\n";
  return 0;
}

int cmd_sandwich(const std::string& table, int ref, int slack, int ell_bound, const std::string& out_dir) {
  SandwichReport s = sandwich_check(read_table_csv(table), ref, slack, ell_bound);
  fs::path out = prepare_out(out_dir);
  write_sandwich_csv((out / "sandwich.csv").string(), s);
  std::cout << "checked " << s.checked << " cells against level " << ref << ", skipped " << s.skipped << ", "
            << s.violations.size() << " violations\n";
  for (const auto& v : s.violations)
    std::cout << "  " << v.rule << " beta=" << fmt(v.beta) << " eps=" << fmt(v.eps) << " level=" << v.level
              << " k*=" << v.k_level << " ref=" << v.k_reference << " (" << v.side << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Barzilai-Borwein experiments for PDE-constrained optimal control"};
  app.require_subcommand(1);

  Overrides run_o, table_o;
  auto* run = app.add_subcommand("run", "single solve, writes trace.csv");
  add_experiment_flags(run, run_o);
  auto* table = app.add_subcommand("table", "k*(eps) table over rules, betas and levels");
  add_experiment_flags(table, table_o);

  std::string spread_table, spread_out = "out";
  auto* spread_cmd = app.add_subcommand("spread", "mesh-independence spread from a table CSV");
  spread_cmd->add_option("--table", spread_table, "table.csv from `table`")->required();
  spread_cmd->add_option("--out", spread_out, "output directory");

  std::string sw_table, sw_out = "out";
  int sw_ref = 0, sw_slack = 1, sw_ell = 3;
  auto* sandwich = app.add_subcommand("sandwich", "compare coarse levels against a reference level");
  sandwich->add_option("--table", sw_table, "table.csv from `table`")->required();
  sandwich->add_option("--reference-level", sw_ref, "finest level, proxy for the continuous count")->required();
  sandwich->add_option("--slack", sw_slack, "allowed excess over the reference");
  sandwich->add_option("--ell-bound", sw_ell, "allowed shortfall below the reference");
  sandwich->add_option("--out", sw_out, "output directory");

  std::string sp_beta = "0.5,0.2", sp_decay = "geometric:0.5,algebraic:2", sp_level = "50,200",
              sp_rule = "BB1,BB2,ABB", sp_out = "out";
  double sp_eps = 1e-12;
  std::uint64_t sp_seed = 1;
  auto* sweep = app.add_subcommand("spectral-sweep", "rate constants and half-lives on poco spectra");
  sweep->add_option("--beta", sp_beta, "comma list");
  sweep->add_option("--decay", sp_decay, "comma list of kind:value");
  sweep->add_option("--level", sp_level, "comma list of truncation sizes");
  sweep->add_option("--rule", sp_rule, "comma list");
  sweep->add_option("--eps", sp_eps, "tolerance");
  sweep->add_option("--seed", sp_seed, "seed for spectral masses");
  sweep->add_option("--out", sp_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_o);
    if (*table) return cmd_table(table_o);
    if (*spread_cmd) return cmd_spread(spread_table, spread_out);
    if (*sandwich) return cmd_sandwich(sw_table, sw_ref, sw_slack, sw_ell, sw_out);
    if (*sweep) {
      std::vector<int> sizes;
      for (const auto& d : parse_levels(sp_level)) sizes.push_back(d.level);
      auto rows = spectral_sweep(parse_double_list(sp_beta), split(sp_decay, ','), sizes, parse_rule_list(sp_rule),
                                 sp_eps, sp_seed);
      fs::path out = prepare_out(sp_out);
      write_spectral_csv((out / "spectral.csv").string(), rows);
      std::cout << "wrote " << (out / "spectral.csv").string() << " (" << rows.size() << " rows)\n";
      return 0;
    }
  } catch (const NonlinearSolverFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SolverFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const MatrixNotSpd& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
