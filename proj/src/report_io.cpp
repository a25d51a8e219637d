#include "h2d/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "json.hpp"

namespace h2d {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_text(const Cell& c) {
  struct {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(const std::string& v) const {
      if (v.find_first_of(",\"\n") == std::string::npos) return v;
      std::string q = "\"";
      for (char ch : v) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
  } visitor;
  return std::visit(visitor, c);
}

json to_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> json {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, std::monostate>)
          return nullptr;
        else
          return v;
      },
      c);
}

Cell opt(const std::optional<double>& v) { return v ? Cell{*v} : Cell{}; }
Cell i64(std::int64_t v) { return Cell{v}; }
Cell str(std::string_view v) { return Cell{std::string(v)}; }

}  // namespace

void write_csv(std::ostream& out, const Artifact& a) {
  out << "# study: " << a.study << '\n';
  for (const auto& [k, v] : a.config) out << "# " << k << '=' << v << '\n';
  for (const auto& [k, v] : a.notes) out << "# note: " << k << '=' << csv_text(v) << '\n';
  for (std::size_t i = 0; i < a.columns.size(); ++i) out << (i ? "," : "") << a.columns[i];
  out << '\n';
  for (const auto& row : a.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_text(row[i]);
    out << '\n';
  }
}

void write_json(std::ostream& out, const Artifact& a) {
  json j;
  j["study"] = a.study;
  j["config"] = json::object();
  for (const auto& [k, v] : a.config) j["config"][k] = v;
  j["notes"] = json::object();
  for (const auto& [k, v] : a.notes) j["notes"][k] = to_json(v);
  j["columns"] = a.columns;
  j["rows"] = json::array();
  for (const auto& row : a.rows) {
    json r = json::object();
    for (std::size_t i = 0; i < row.size() && i < a.columns.size(); ++i) r[a.columns[i]] = to_json(row[i]);
    j["rows"].push_back(std::move(r));
  }
  out << j.dump(2) << '\n';
}

void write_artifact(const Artifact& a, const std::string& path, bool as_json) {
  if (path.empty()) {
    as_json ? write_json(std::cout, a) : write_csv(std::cout, a);
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write output file: " + path);
  as_json ? write_json(f, a) : write_csv(f, a);
  if (!f) throw std::runtime_error("write failed: " + path);
}

Artifact rank_artifact(const RankStudy& study) {
  Artifact a;
  a.study = std::string(to_string(study.pair)) + "_rank";
  a.columns = {"n", "epsilon", "rank"};
  for (const auto& r : study.rows) a.rows.push_back({i64(r.n_rows), Cell{r.epsilon}, i64(r.rank)});
  a.notes.emplace_back("layout", str(to_string(study.layout)));
  if (study.fit) {
    a.notes.emplace_back("fit_alpha", Cell{study.fit->alpha});
    a.notes.emplace_back("fit_c", Cell{study.fit->c});
    a.notes.emplace_back("fit_residual", Cell{study.fit->residual});
  }
  return a;
}

Artifact sigma_artifact(std::span<const double> ratios) {
  Artifact a;
  a.study = "sv_decay";
  a.columns = {"k", "sigma_k"};
  for (std::size_t k = 0; k < ratios.size(); ++k) a.rows.push_back({i64(static_cast<std::int64_t>(k + 1)), Cell{ratios[k]}});
  return a;
}

Artifact residual_artifact(std::span<const double> history) {
  Artifact a;
  a.study = "residual_history";
  a.columns = {"iter", "residual"};
  for (std::size_t k = 0; k < history.size(); ++k) a.rows.push_back({i64(static_cast<std::int64_t>(k)), Cell{history[k]}});
  return a;
}

Artifact schedule_artifact(const ClusterTree& tree, std::span<const LoadEstimate> loads, const Schedule& sched) {
  Artifact a;
  a.study = "schedule";
  a.columns = {"node_id", "level", "load", "worker"};
  for (const auto& l : loads)
    a.rows.push_back({i64(l.node), i64(tree.node(l.node).level), i64(l.load),
                      i64(sched.assignment[static_cast<std::size_t>(l.node)])});
  a.notes.emplace_back("workers", i64(sched.workers));
  for (std::size_t w = 0; w < sched.per_worker_load.size(); ++w)
    a.notes.emplace_back("worker_" + std::to_string(w) + "_load", i64(sched.per_worker_load[w]));
  a.notes.emplace_back("imbalance", Cell{sched.imbalance()});
  return a;
}

Artifact storage_artifact(Index n, std::span<const std::pair<Format, StorageReport>> reports,
                          std::span<const int> depths) {
  Artifact a;
  a.study = "storage";
  a.columns = {"N", "format", "depth", "r_m", "memory_gb", "t_init", "cr"};
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& [f, r] = reports[i];
    a.rows.push_back({i64(n), str(to_string(f)), i64(i < depths.size() ? depths[i] : 0), i64(r.r_m),
                      Cell{static_cast<double>(r.memory_scalars) * 8e-9}, Cell{r.build_seconds},
                      Cell{r.compression_ratio}});
  }
  return a;
}

Artifact bench_artifact(std::span<const BenchRow> rows) {
  Artifact a;
  a.study = "matvec_bench";
  a.columns = {"N", "format", "depth", "build_s", "matvec_s", "eps_r", "r_m", "memory_gb", "cr", "truncated"};
  for (const auto& r : rows)
    a.rows.push_back({i64(r.n), str(to_string(r.format)), i64(r.depth), Cell{r.build_seconds}, Cell{r.matvec_seconds},
                      opt(r.eps_r), i64(r.r_m), Cell{static_cast<double>(r.memory_scalars) * 8e-9},
                      Cell{r.compression_ratio}, Cell{r.truncated}});
  return a;
}

Artifact solve_artifact(std::span<const SolveRow> rows) {
  Artifact a;
  a.study = "solve";
  a.columns = {"method", "N", "iterations", "converged", "residual", "error", "build_s", "solve_s", "r_m", "cr"};
  for (const auto& r : rows)
    a.rows.push_back({str(r.method), i64(r.n), i64(r.iterations), Cell{r.converged}, Cell{r.residual}, opt(r.error),
                      Cell{r.build_seconds}, Cell{r.solve_seconds}, i64(r.r_m), Cell{r.compression_ratio}});
  return a;
}

Artifact par_artifact(std::span<const ParRow> rows) {
  Artifact a;
  a.study = "par_bench";
  a.columns = {"N", "workers", "serial_s", "parallel_s", "rel_diff", "imbalance", "makespan", "total_load"};
  for (const auto& r : rows)
    a.rows.push_back({i64(r.n), i64(r.workers), Cell{r.serial_seconds}, Cell{r.parallel_seconds},
                      Cell{r.relative_difference}, Cell{r.imbalance}, i64(r.makespan), i64(r.total_load)});
  return a;
}

Artifact bound_artifact(const BoundCheck& check) {
  Artifact a;
  a.study = "multipole_bound";
  a.columns = {"p_max", "trials", "checks", "violations", "max_ratio"};
  a.rows.push_back({i64(check.p_max), i64(check.trials), i64(check.checks), i64(check.violations), Cell{check.max_ratio}});
  a.notes.emplace_back("max_direct_deviation", Cell{check.max_direct_deviation});
  return a;
}

Artifact operator_metadata(Format format, Index n, int depth, double epsilon, const StorageReport& report) {
  Artifact a;
  a.study = "operator";
  a.notes = {{"format", str(to_string(format))},
             {"N", i64(n)},
             {"depth", i64(depth)},
             {"epsilon", Cell{epsilon}},
             {"r_m", i64(report.r_m)},
             {"memory_scalars", i64(report.memory_scalars)},
             {"cr", Cell{report.compression_ratio}},
             {"build_s", Cell{report.build_seconds}},
             {"dense_blocks", i64(report.dense_blocks)},
             {"lowrank_blocks", i64(report.lowrank_blocks)}};
  a.columns = {"level", "lowrank_blocks", "max_rank"};
  for (std::size_t l = 0; l < report.max_rank_per_level.size(); ++l)
    a.rows.push_back({i64(static_cast<std::int64_t>(l)), i64(report.blocks_per_level[l]), i64(report.max_rank_per_level[l])});
  return a;
}

}  // namespace h2d
