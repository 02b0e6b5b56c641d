#include "riskstop_cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "riskstop/continuous.hpp"
#include "riskstop/discrete.hpp"
#include "riskstop/markov.hpp"
#include "riskstop/model_io.hpp"
#include "riskstop/simulation.hpp"

namespace riskstop::cli {

namespace {

// Tolerances for the solver runs that back oracle-check, --region auto and
// integrability.
constexpr double kDiscreteTol = 1e-10;
constexpr double kDiscreteOracleGap = 1e-8;
constexpr double kContinuousTol = 1e-4;
constexpr double kContinuousOracleGap = 5e-4;

struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, std::string message) { throw Failure{code, std::move(message)}; }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

struct Solved {
  SolveReport report;
  std::string summary;
};

Solved solve_model(const MarkovModel& model, std::optional<double> tol = std::nullopt,
                   std::optional<int> m_max = std::nullopt) {
  if (model.time == TimeMode::Discrete) {
    FixedPointOptions opt;
    opt.tol = tol.value_or(kDiscreteTol);
    auto report = solve_fixed_point(model, opt);
    return {report, "discrete solve: " + std::to_string(report.iterations) + " iterations, gap " +
                        fmt(report.sandwich_gap)};
  }
  InfiniteOptions opt;
  opt.tol = tol.value_or(kContinuousTol);
  if (m_max) opt.m_max = *m_max;
  auto inf = solve_infinite(model.kernel, model.costs, opt);
  return {inf.report, "continuous solve: level " + std::to_string(inf.level) + ", horizon " +
                          fmt(inf.horizon) + ", horizon gap " + fmt(inf.horizon_gap) +
                          ", grid gap " + fmt(inf.grid_gap)};
}

Solved solve_or_fail(const MarkovModel& model, std::ostream& err) {
  auto solved = solve_model(model);
  err << solved.summary << "\n";
  if (!solved.report.converged) fail(kExitBudget, "solver did not converge within its budget");
  return solved;
}

RegionValue exact_region_value(const MarkovModel& model, const StoppingRegion& region) {
  return model.time == TimeMode::Discrete ? region_value(model, region)
                                          : ctmc_region_value(model.kernel, model.costs, region);
}

StoppingRegion parse_region(const MarkovModel& model, const std::vector<std::string>& labels) {
  StoppingRegion region(model.size());
  for (const auto& label : labels) {
    auto i = model.states.index_of(label);
    if (!i) fail(kExitUsage, "--region: unknown state '" + label + "'");
    region.insert(*i);
  }
  if (region.empty()) fail(kExitUsage, "--region: empty region");
  return region;
}

McOptions mc_options(std::size_t paths, std::uint64_t seed, std::optional<double> trunc) {
  if (paths == 0) fail(kExitUsage, "--paths must be >= 1");
  McOptions opt;
  opt.n_paths = paths;
  opt.seed = seed;
  opt.truncation = trunc;
  return opt;
}

struct Invocation {
  std::string model_path;
  // solve-discrete / solve-continuous / refine-dyadic
  std::optional<double> tol;
  std::optional<std::size_t> max_iter;
  std::optional<double> seed_value;
  std::optional<int> m_max;
  std::optional<double> c0;
  // sweep-horizon
  std::vector<double> horizons;
  int level = 0;
  // simulate / integrability
  std::vector<std::string> region{"auto"};
  std::size_t paths = 0;
  std::uint64_t seed = 0;
  std::optional<double> trunc;
};

int cmd_validate(const Invocation& inv, std::ostream& out) {
  auto model = load_model(inv.model_path);
  Table t;
  t.columns = {"name", "time", "states", "c"};
  t.add_row({model.name, std::string(to_string(model.time)),
             static_cast<long long>(model.size()), model.costs.c});
  out << to_csv(t);
  return kExitOk;
}

int cmd_solve_discrete(const Invocation& inv, std::ostream& out, std::ostream& err) {
  auto model = load_model(inv.model_path);
  if (model.time != TimeMode::Discrete)
    fail(kExitInvalid, "solve-discrete needs a discrete-time model; use solve-continuous");
  FixedPointOptions opt;
  if (inv.tol) opt.tol = *inv.tol;
  if (inv.max_iter) opt.max_iter = *inv.max_iter;
  if (inv.seed_value) {
    // A constant seed is projected onto the admissible box [1, e^G].
    Vector seed = model.costs.exp_G().cwiseMin(*inv.seed_value).cwiseMax(1.0);
    opt.seed = ValueFunction(seed);
  }
  auto report = solve_fixed_point(model, opt);
  err << "discrete solve: " << report.iterations << " iterations, gap "
      << fmt(report.sandwich_gap) << ", residual " << fmt(report.residual) << "\n";
  if (!report.converged) {
    err << "budget of " << opt.max_iter << " iterations exhausted\n";
    return kExitBudget;
  }
  out << write_report(report, model.states, ReportFormat::Csv);
  return kExitOk;
}

int cmd_solve_continuous(const Invocation& inv, std::ostream& out, std::ostream& err) {
  auto model = load_model(inv.model_path);
  if (model.time != TimeMode::Continuous)
    fail(kExitInvalid, "solve-continuous needs a continuous-time model; use solve-discrete");
  InfiniteOptions opt;
  if (inv.tol) opt.tol = *inv.tol;
  if (inv.m_max) opt.m_max = *inv.m_max;
  auto inf = solve_infinite(model.kernel, model.costs, opt);
  err << "continuous solve: level " << inf.level << ", horizon " << fmt(inf.horizon)
      << ", horizon gap " << fmt(inf.horizon_gap) << ", grid gap " << fmt(inf.grid_gap) << "\n";
  if (!inf.report.converged) {
    err << "budget exhausted at level " << inf.level << "\n";
    return kExitBudget;
  }
  out << write_report(inf.report, model.states, ReportFormat::Csv);
  return kExitOk;
}

int cmd_sweep_horizon(const Invocation& inv, std::ostream& out) {
  auto model = load_model(inv.model_path);
  if (model.time != TimeMode::Continuous)
    fail(kExitInvalid, "sweep-horizon needs a continuous-time model");
  auto sweep = horizon_sweep(model.kernel, model.costs, inv.horizons, inv.level);
  out << to_csv(sweep_table(sweep, model.states));
  return kExitOk;
}

int cmd_refine_dyadic(const Invocation& inv, std::ostream& out, std::ostream& err) {
  auto model = load_model(inv.model_path);
  if (model.time != TimeMode::Continuous)
    fail(kExitInvalid, "refine-dyadic needs a continuous-time model");
  const int m_max = *inv.m_max;
  LadderOptions opt;
  if (inv.tol) opt.tol = *inv.tol;
  auto ladder = default_ladder(model.costs, inv.c0.value_or(model.costs.c), m_max);
  auto table = approximation_ladder(model.kernel, model.costs, ladder, m_max, opt);
  out << to_csv(ladder_table(table));
  if (!table.complete) {
    err << "a level's fixed-point solve ran out of iterations\n";
    return kExitBudget;
  }
  if (!table.final_within_tol) {
    err << "final sup_gap " << fmt(table.rows.back().sup_gap) << " exceeds tol " << fmt(opt.tol)
        << "; raise --m-max\n";
    return kExitBudget;
  }
  return kExitOk;
}

int cmd_oracle_check(const Invocation& inv, std::ostream& out, std::ostream& err,
                     const RunHooks& hooks) {
  auto model = load_model(inv.model_path);
  auto solved = solve_or_fail(model, err);
  ValueFunction w = solved.report.value;
  if (hooks.perturb_solution) hooks.perturb_solution(w);

  const bool discrete = model.time == TimeMode::Discrete;
  const OracleResult oracle =
      discrete ? oracle_enumerate(model) : ctmc_oracle(model.kernel, model.costs);
  const double allowed = discrete ? kDiscreteOracleGap : kContinuousOracleGap;
  const double tol = discrete ? kDiscreteTol : kContinuousTol;

  // The region is re-extracted from the (possibly perturbed) value and its
  // exact hitting value compared against the oracle as well.
  std::optional<ValueFunction> induced;
  try {
    auto region = extract_region(w, model.costs, tol);
    induced = exact_region_value(model, region).value;
  } catch (const std::runtime_error&) {
  }

  Table t;
  t.columns = {"state", "solver", "oracle", "gap", "region_gap", "ok"};
  bool all_ok = true;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const double gap = std::abs(w[i] - oracle.value[i]);
    const double region_gap = induced ? std::abs((*induced)[i] - oracle.value[i])
                                      : std::numeric_limits<double>::infinity();
    const bool ok = gap <= allowed && region_gap <= allowed;
    all_ok = all_ok && ok;
    Table::Cell rg = std::isfinite(region_gap) ? Table::Cell{region_gap} : Table::Cell{"inf"};
    t.add_row({model.states.label(i), w[i], oracle.value[i], gap, rg, ok});
  }
  out << to_csv(t);
  err << "oracle: " << oracle.finite_regions << " regions with finite value; tolerance "
      << fmt(allowed) << "\n";
  if (!all_ok) {
    err << "oracle-check failed\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

int cmd_simulate(const Invocation& inv, std::ostream& out, std::ostream& err) {
  auto model = load_model(inv.model_path);
  const bool automatic = inv.region.size() == 1 && inv.region.front() == "auto";
  std::optional<ValueFunction> solver_value;
  StoppingRegion region;
  if (automatic) {
    auto solved = solve_or_fail(model, err);
    region = solved.report.region;
    solver_value = solved.report.value;
  } else {
    region = parse_region(model, inv.region);
  }
  const auto exact = exact_region_value(model, region);
  const auto opt = mc_options(inv.paths, inv.seed, inv.trunc);

  Table t;
  t.columns = {"state", "in_region", "mean", "std_error", "truncated_fraction", "exact"};
  for (std::size_t i = 0; i < model.size(); ++i) {
    auto est = evaluate_region_policy(model, region, i, opt);
    if (est.truncation_warning())
      err << "warning: " << fmt(100.0 * est.truncated_fraction) << "% of paths from "
          << model.states.label(i) << " reached the truncation horizon\n";
    Table::Cell ex = exact.finite() ? Table::Cell{(*exact.value)[i]} : Table::Cell{"inf"};
    t.add_row({model.states.label(i), region.contains(i), est.mean, est.std_error,
               est.truncated_fraction, ex});
  }
  out << to_csv(t);
  return kExitOk;
}

int cmd_integrability(const Invocation& inv, std::ostream& out, std::ostream& err) {
  auto model = load_model(inv.model_path);
  auto solved = solve_or_fail(model, err);
  const auto opt = mc_options(inv.paths, inv.seed, std::nullopt);

  Table t;
  t.columns = {"state", "mean", "std_error", "bound", "violated"};
  bool any = false;
  for (std::size_t i = 0; i < model.size(); ++i) {
    auto r = integrability_check(model, solved.report.region, i, opt);
    any = any || r.violated;
    t.add_row({model.states.label(i), r.estimate.mean, r.estimate.std_error, r.bound, r.violated});
  }
  out << to_csv(t);
  if (any) {
    err << "integrability bound violated\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const RunHooks& hooks) {
  CLI::App app{"Risk-sensitive optimal stopping of finite Markov chains.", "riskstop"};
  app.require_subcommand(1);
  Invocation inv;

  auto model_arg = [&](CLI::App* sub) {
    sub->add_option("model", inv.model_path, "Model JSON file")->required()->check(CLI::ExistingFile);
  };

  auto* validate = app.add_subcommand("validate", "Check a model file against every invariant");
  model_arg(validate);

  auto* solve_d = app.add_subcommand("solve-discrete", "Value function of a discrete-time model");
  model_arg(solve_d);
  solve_d->add_option("--tol", inv.tol, "Sandwich gap tolerance (default 1e-10)");
  solve_d->add_option("--max-iter", inv.max_iter, "Iteration budget");
  solve_d->add_option("--seed-value", inv.seed_value, "Constant start for an extra iterate");

  auto* solve_c = app.add_subcommand("solve-continuous", "Value function of a continuous-time model");
  model_arg(solve_c);
  solve_c->add_option("--tol", inv.tol, "Horizon and grid gap tolerance (default 1e-6)");
  solve_c->add_option("--m-max", inv.m_max, "Finest dyadic level (default 20)");

  auto* sweep = app.add_subcommand("sweep-horizon", "Finite-horizon lower and upper values");
  model_arg(sweep);
  sweep->add_option("--horizons", inv.horizons, "Ascending horizons, multiples of 2^-level")
      ->required()
      ->delimiter(',');
  sweep->add_option("--level", inv.level, "Dyadic level m")->required();

  auto* refine = app.add_subcommand("refine-dyadic", "Dyadic approximation ladder against the limit");
  model_arg(refine);
  refine->add_option("--m-max", inv.m_max, "Finest level")->required();
  refine->add_option("--tol", inv.tol, "Required final sup_gap (default 1e-3)");
  refine->add_option("--c0", inv.c0, "Ladder floor, 0 < c0 <= min g (default c)");

  auto* oracle = app.add_subcommand("oracle-check", "Compare the solver with exhaustive enumeration");
  model_arg(oracle);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo value of a hitting-time policy");
  model_arg(simulate);
  simulate->add_option("--region", inv.region, "'auto' or a comma-separated list of states")
      ->delimiter(',');
  simulate->add_option("--paths", inv.paths, "Number of paths")->required();
  simulate->add_option("--seed", inv.seed, "Random seed")->required();
  simulate->add_option("--trunc", inv.trunc, "Truncation horizon");

  auto* integ = app.add_subcommand("integrability", "Monte Carlo check of E[e^{c tau}] <= e^G");
  model_arg(integ);
  integ->add_option("--paths", inv.paths, "Number of paths")->required();
  integ->add_option("--seed", inv.seed, "Random seed")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "riskstop: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(inv, out);
    if (solve_d->parsed()) return cmd_solve_discrete(inv, out, err);
    if (solve_c->parsed()) return cmd_solve_continuous(inv, out, err);
    if (sweep->parsed()) return cmd_sweep_horizon(inv, out);
    if (refine->parsed()) return cmd_refine_dyadic(inv, out, err);
    if (oracle->parsed()) return cmd_oracle_check(inv, out, err, hooks);
    if (simulate->parsed()) return cmd_simulate(inv, out, err);
    if (integ->parsed()) return cmd_integrability(inv, out, err);
  } catch (const Failure& f) {
    err << "riskstop: " << f.message << "\n";
    if (f.code == kExitUsage) err << "\n" << app.help();
    return f.code;
  } catch (const ModelError& e) {
    err << "riskstop: " << inv.model_path << " is not a valid model\n";
    for (const auto& v : e.violations()) err << "  " << v.summary << "\n";
    return kExitInvalid;
  } catch (const Unrepresentable& e) {
    err << "riskstop: " << e.what() << "\n";
    return kExitBudget;
  } catch (const std::invalid_argument& e) {
    err << "riskstop: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "riskstop: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitUsage;
}

}  // namespace riskstop::cli
