// h2d command-line driver: rank studies, operator builds, matvec benchmarks,
// GMRES solves and load-balancing schedules.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "h2d/config.hpp"
#include "h2d/experiments.hpp"
#include "h2d/hierarchical.hpp"
#include "h2d/kernels.hpp"
#include "h2d/report_io.hpp"
#include "h2d/schedule.hpp"

namespace {

using namespace h2d;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flag name -> config key.
struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

const FlagSpec kFlags[] = {
    {"--kernel", "kernel", "log_r|one_over_r|hankel0|bessel_y0|thin_plate|rbf_phi1|rbf_phi2|ie"},
    {"--a", "a", "rbf cutoff radius"},
    {"--beta", "beta", "rbf diagonal (default N)"},
    {"--wavenumber", "wavenumber", "Hankel / integral-equation wavenumber"},
    {"--N", "N", "problem size (perfect square for Chebyshev grids)"},
    {"--sizes", "sizes", "comma-separated sizes"},
    {"--pair", "pair", "edge|vertex|far"},
    {"--layout", "layout", "half|level2"},
    {"--format", "format", "hodlr2d|hodlr|hmatrix|all"},
    {"--n-max", "n_max", "leaf capacity"},
    {"--epsilon", "epsilon", "compression tolerance"},
    {"--tol", "tol", "GMRES relative residual target"},
    {"--restart", "restart", "GMRES restart length"},
    {"--max-iters", "max_iters", "GMRES iteration cap"},
    {"--workers", "workers", "worker count"},
    {"--seed", "seed", "random seed"},
    {"--points", "points", "two-column point CSV"},
    {"--out", "out", "output path (stdout when omitted)"},
    {"--depth-rule", "depth_rule", "max|mean leaf occupancy"},
    {"--trials", "trials", "random trials"},
    {"--p-max", "p_max", "largest expansion order"},
    {"--repeats", "repeats", "timed repetitions"},
    {"--grid", "grid", "grid points per side"},
};

struct Command {
  std::string name;
  std::string help;
  std::vector<std::string> keys;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;  // key -> raw flag text
  std::string config_path;
  bool json = false;
};

const FlagSpec& flag_for(const std::string& key) {
  for (const auto& f : kFlags)
    if (key == f.key) return f;
  throw std::logic_error("no flag for key " + key);
}

struct Resolved {
  RunConfig cfg;
  std::set<std::string> assigned;
  bool has(const std::string& key) const { return assigned.count(key) != 0; }
};

Resolved resolve(Command& cmd) {
  Resolved r;
  r.cfg.subcommand = cmd.name;
  std::vector<std::string> seen;
  if (!cmd.config_path.empty()) load_config(r.cfg, cmd.config_path, &seen);
  apply_environment(r.cfg, &seen);
  for (const auto& [key, value] : cmd.values) {
    set_value(r.cfg, key, value);
    seen.push_back(key);
  }
  if (cmd.json) r.cfg.json = true;
  r.assigned.insert(seen.begin(), seen.end());
  return r;
}

void emit(Artifact a, const RunConfig& cfg, const std::string& summary) {
  a.config = describe(cfg);
  a.config.insert(a.config.begin(), {"command", cfg.subcommand});
  write_artifact(a, cfg.out, cfg.json);
  (cfg.out.empty() ? std::cerr : std::cout) << summary << std::endl;
}

void write_side(Artifact a, const RunConfig& cfg, const std::string& path) {
  a.config = describe(cfg);
  a.config.insert(a.config.begin(), {"command", cfg.subcommand});
  write_artifact(a, path, false);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void default_kernel(Resolved& r, KernelName k) {
  if (!r.has("kernel")) r.cfg.kernel = k;
}

void reject_ie(const RunConfig& cfg) {
  if (cfg.kernel == KernelName::IeLippmann)
    throw UsageError("--kernel ie is only valid with solve-ie");
}

std::vector<Point2D> problem_points(const RunConfig& cfg) {
  if (!cfg.points.empty()) return load_points_csv(cfg.points);
  return chebyshev_points(cfg.n);
}

BenchOptions bench_options(const RunConfig& cfg, Index n) {
  BenchOptions o;
  o.kernel = kernel_spec(cfg, n);
  o.formats = formats(cfg);
  o.n_max = cfg.n_max;
  o.epsilon = cfg.epsilon;
  o.repeats = cfg.repeats;
  o.workers = cfg.workers;
  o.seed = cfg.seed;
  o.depth_rule = cfg.depth_rule;
  return o;
}

SolveOptions solve_options(const RunConfig& cfg) {
  SolveOptions o;
  o.n_max = cfg.n_max;
  o.epsilon = cfg.epsilon;
  o.gmres = {cfg.tol, cfg.restart, cfg.max_iters};
  o.workers = cfg.workers;
  o.seed = cfg.seed;
  o.depth_rule = cfg.depth_rule;
  return o;
}

void run_rank_study(Resolved& r) {
  auto& cfg = r.cfg;
  reject_ie(cfg);
  const auto layout = layout_for(cfg);
  if (layout == Layout::Half && cfg.pair != Pair::Edge) throw UsageError("--layout half only has an edge pair");
  if (cfg.sizes.empty()) cfg.sizes = {400, 1600, 4096};
  const double eps = r.has("epsilon") ? cfg.epsilon : 1e-14;
  if (!r.has("epsilon")) cfg.epsilon = eps;
  const auto study = rank_study(kernel_spec(cfg, cfg.sizes.front()), cfg.pair, layout, cfg.sizes, eps);
  std::string summary = "rank-study " + std::string(to_string(cfg.pair)) + ":";
  for (const auto& row : study.rows) summary += " " + std::to_string(row.n_rows) + "->" + std::to_string(row.rank);
  if (study.fit) summary += fmt(" alpha=%.3f", study.fit->alpha) + fmt(" c=%.3g", study.fit->c);
  emit(rank_artifact(study), cfg, summary);
}

void run_sv_decay(Resolved& r) {
  auto& cfg = r.cfg;
  reject_ie(cfg);
  const auto layout = layout_for(cfg);
  if (layout == Layout::Half && cfg.pair != Pair::Edge) throw UsageError("--layout half only has an edge pair");
  if (!r.has("N")) cfg.n = 1600;
  const auto ratios = sv_decay(kernel_spec(cfg, cfg.n), cfg.pair, layout, cfg.n);
  const double tail = ratios.empty() ? 0.0 : ratios.back();
  emit(sigma_artifact(ratios), cfg,
       "sv-decay " + std::string(to_string(cfg.pair)) + " n=" + std::to_string(cfg.n) + fmt(" sigma_n/sigma_1=%.3g", tail));
}

void run_bound_check(Resolved& r) {
  auto& cfg = r.cfg;
  const auto check = multipole_bound_check(cfg.trials, cfg.p_max, cfg.seed);
  emit(bound_artifact(check), cfg,
       "bound-check trials=" + std::to_string(check.trials) + " checks=" + std::to_string(check.checks) +
           " violations=" + std::to_string(check.violations) + fmt(" max_ratio=%.3g", check.max_ratio));
  if (check.violations != 0) throw std::runtime_error("multipole bound violated");
}

void run_build(Resolved& r) {
  auto& cfg = r.cfg;
  default_kernel(r, KernelName::OneOverR);
  reject_ie(cfg);
  const auto points = problem_points(cfg);
  const auto n = static_cast<Index>(points.size());
  const auto spec = kernel_spec(cfg, n);
  std::vector<std::pair<Format, StorageReport>> reports;
  std::vector<int> depths;
  std::string summary = "build N=" + std::to_string(n);
  auto one = [&](auto tag, Format f) {
    using T = decltype(tag);
    const auto op = build_operator<T>(f, points, kernel_entries<T>(spec, points), cfg.n_max,
                                      {cfg.epsilon, 0, cfg.workers}, cfg.depth_rule);
    const auto rep = storage_report(op);
    reports.emplace_back(f, rep);
    depths.push_back(op.depth);
    summary += " " + std::string(to_string(f)) + ":r_m=" + std::to_string(rep.r_m) + fmt(",cr=%.4f", rep.compression_ratio);
    if (!cfg.out.empty())
      write_side(operator_metadata(f, n, op.depth, cfg.epsilon, rep), cfg, cfg.out + "." + std::string(to_string(f)) + ".meta.csv");
  };
  for (Format f : formats(cfg)) {
    if (spec.scalar_kind() == ScalarKind::Complex)
      one(Complex{}, f);
    else
      one(double{}, f);
  }
  emit(storage_artifact(n, reports, depths), cfg, summary);
}

void run_matvec_bench(Resolved& r) {
  auto& cfg = r.cfg;
  default_kernel(r, KernelName::OneOverR);
  reject_ie(cfg);
  if (!cfg.points.empty() && !cfg.sizes.empty()) throw UsageError("--points and --sizes are mutually exclusive");
  std::vector<BenchRow> rows;
  if (!cfg.points.empty()) {
    const auto pts = load_points_csv(cfg.points);
    rows = matvec_bench_points(pts, bench_options(cfg, static_cast<Index>(pts.size())));
  } else {
    const std::vector<Index> sizes = cfg.sizes.empty() ? std::vector<Index>{cfg.n} : cfg.sizes;
    for (Index n : sizes) {
      const Index one[] = {n};
      auto part = matvec_bench(one, bench_options(cfg, n));
      rows.insert(rows.end(), part.begin(), part.end());
    }
  }
  std::string summary = "matvec-bench";
  for (const auto& row : rows) {
    summary += " " + std::string(to_string(row.format)) + "@" + std::to_string(row.n) + fmt(":%.4gs", row.matvec_seconds);
    if (row.eps_r) summary += fmt(",eps_r=%.2g", *row.eps_r);
  }
  emit(bench_artifact(rows), cfg, summary);
}

void write_residuals(const RunConfig& cfg, const std::vector<SolveRow>& rows) {
  if (cfg.out.empty()) return;
  for (const auto& row : rows)
    write_side(residual_artifact(row.residual_history), cfg, cfg.out + "." + std::string(row.method) + ".residuals.csv");
}

std::string solve_summary(const char* what, const std::vector<SolveRow>& rows) {
  std::string s = what;
  for (const auto& row : rows) {
    s += " " + std::string(row.method) + ":it=" + std::to_string(row.iterations) + fmt(",res=%.2g", row.residual);
    if (row.error) s += fmt(",err=%.2g", *row.error);
    if (!row.converged) s += ",NOT-CONVERGED";
  }
  return s;
}

bool all_converged(const std::vector<SolveRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const SolveRow& r) { return r.converged; });
}

void run_solve_rbf(Resolved& r) {
  auto& cfg = r.cfg;
  default_kernel(r, KernelName::RbfPhi1);
  if (cfg.kernel != KernelName::RbfPhi1 && cfg.kernel != KernelName::RbfPhi2)
    throw UsageError("solve-rbf needs --kernel rbf_phi1 or rbf_phi2");
  if (!cfg.points.empty()) throw UsageError("solve-rbf runs on the Chebyshev grid; --points is not accepted");
  const auto fs = formats(cfg);
  const auto rows = rbf_solve(kernel_spec(cfg, cfg.n), cfg.n, fs, solve_options(cfg));
  write_residuals(cfg, rows);
  emit(solve_artifact(rows), cfg, solve_summary("solve-rbf", rows));
  if (!all_converged(rows)) throw std::runtime_error("GMRES did not converge");
}

void run_solve_ie(Resolved& r) {
  auto& cfg = r.cfg;
  default_kernel(r, KernelName::IeLippmann);
  if (cfg.kernel != KernelName::IeLippmann) throw UsageError("solve-ie only takes --kernel ie");
  const auto res = ie_solve(cfg.grid, cfg.wavenumber, formats(cfg), solve_options(cfg));
  write_residuals(cfg, res.rows);
  auto a = solve_artifact(res.rows);
  a.columns.insert(a.columns.end(), {"agreement", "probe_re", "probe_im"});
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    a.rows[i].push_back(res.agreement[i] ? Cell{*res.agreement[i]} : Cell{});
    a.rows[i].push_back(Cell{res.probe[i].real()});
    a.rows[i].push_back(Cell{res.probe[i].imag()});
  }
  emit(std::move(a), cfg, solve_summary("solve-ie", res.rows));
  if (!all_converged(res.rows)) throw std::runtime_error("GMRES did not converge");
}

void run_par_bench(Resolved& r) {
  auto& cfg = r.cfg;
  default_kernel(r, KernelName::OneOverR);
  reject_ie(cfg);
  if (kernel_spec(cfg, cfg.n).scalar_kind() == ScalarKind::Complex) throw UsageError("par-bench takes a real kernel");
  if (r.has("workers") && !r.has("worker_counts")) cfg.worker_list = {cfg.workers};
  const auto rows = par_bench(kernel_spec(cfg, cfg.n), cfg.n, cfg.worker_list, bench_options(cfg, cfg.n));
  std::string summary = "par-bench N=" + std::to_string(cfg.n);
  for (const auto& row : rows)
    summary += " P=" + std::to_string(row.workers) + fmt(":imb=%.3f", row.imbalance) + fmt(",diff=%.1e", row.relative_difference);
  emit(par_artifact(rows), cfg, summary);
}

void run_schedule_dump(Resolved& r) {
  auto& cfg = r.cfg;
  const auto points = problem_points(cfg);
  const auto tree = build_annotated_tree(points, root_box_for(points), cfg.n_max, cfg.depth_rule);
  const auto loads = estimate_loads(tree);
  const auto sched = schedule(loads, cfg.workers);
  std::string summary = "schedule-dump nodes=" + std::to_string(loads.size()) + " workers=" + std::to_string(cfg.workers) +
                        fmt(" imbalance=%.4f", sched.imbalance());
  emit(schedule_artifact(tree, loads, sched), cfg, summary);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical low-rank kernel matrices on 2D point sets"};
  app.require_subcommand(1);

  std::vector<Command> commands = {
      {"rank-study", "epsilon-rank of a cluster-pair block versus size",
       {"kernel", "a", "beta", "wavenumber", "sizes", "pair", "layout", "epsilon", "out"}},
      {"sv-decay", "normalised singular values of one cluster-pair block",
       {"kernel", "a", "beta", "wavenumber", "N", "pair", "layout", "out"}},
      {"bound-check", "randomised check of the far-field expansion error bound",
       {"trials", "p_max", "seed", "out"}},
      {"build", "build operators and report storage",
       {"kernel", "a", "beta", "wavenumber", "N", "points", "format", "n_max", "epsilon", "workers", "depth_rule", "out"}},
      {"matvec-bench", "time matvecs and measure their error against the dense product",
       {"kernel", "a", "beta", "wavenumber", "N", "sizes", "points", "format", "n_max", "epsilon", "workers", "seed",
        "repeats", "depth_rule", "out"}},
      {"solve-rbf", "GMRES on an rbf interpolation system with a manufactured solution",
       {"kernel", "a", "beta", "N", "format", "n_max", "epsilon", "tol", "restart", "max_iters", "workers", "seed",
        "depth_rule", "out"}},
      {"solve-ie", "GMRES on the discretised integral equation",
       {"kernel", "wavenumber", "grid", "format", "n_max", "epsilon", "tol", "restart", "max_iters", "workers",
        "depth_rule", "out"}},
      {"par-bench", "serial versus scheduled parallel matvec",
       {"kernel", "a", "beta", "N", "n_max", "epsilon", "workers", "seed", "repeats", "depth_rule", "out"}},
      {"schedule-dump", "per-node loads and their worker assignment",
       {"N", "points", "n_max", "workers", "depth_rule", "out"}},
  };

  for (auto& cmd : commands) {
    cmd.app = app.add_subcommand(cmd.name, cmd.help);
    for (const auto& key : cmd.keys) {
      const auto& f = flag_for(key);
      // par-bench takes a list of worker counts
      const std::string target = (cmd.name == "par-bench" && key == "workers") ? "worker_counts" : key;
      cmd.app->add_option_function<std::string>(
          f.flag, [&cmd, target](const std::string& v) { cmd.values[target] = v; }, f.help);
    }
    cmd.app->add_option("--config", cmd.config_path, "flat key = value file")->check(CLI::ExistingFile);
    cmd.app->add_flag("--json", cmd.json, "emit JSON instead of CSV");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (auto& cmd : commands) {
      if (!cmd.app->parsed()) continue;
      auto r = resolve(cmd);
      if (cmd.name == "rank-study") run_rank_study(r);
      else if (cmd.name == "sv-decay") run_sv_decay(r);
      else if (cmd.name == "bound-check") run_bound_check(r);
      else if (cmd.name == "build") run_build(r);
      else if (cmd.name == "matvec-bench") run_matvec_bench(r);
      else if (cmd.name == "solve-rbf") run_solve_rbf(r);
      else if (cmd.name == "solve-ie") run_solve_ie(r);
      else if (cmd.name == "par-bench") run_par_bench(r);
      else if (cmd.name == "schedule-dump") run_schedule_dump(r);
    }
  } catch (const UsageError& e) {
    std::cerr << "h2d: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "h2d: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
