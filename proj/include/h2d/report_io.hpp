#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "h2d/experiments.hpp"
#include "h2d/geometry.hpp"
#include "h2d/hierarchical.hpp"
#include "h2d/schedule.hpp"

namespace h2d {

// Empty cells (std::monostate) print as an empty CSV field and as JSON null.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

// One output table plus the resolved run configuration. `notes` carry scalar
// summaries (fit exponent, violation counts) that do not fit the row schema.
struct Artifact {
  std::string study;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, Cell>> notes;
};

// CSV layout: "# study: <name>", one "# key=value" line per config entry,
// one "# note: key=value" line per note, the header row, then data rows.
// Doubles use 17 significant digits.
void write_csv(std::ostream& out, const Artifact& a);
// {"study", "config": {...}, "notes": {...}, "columns": [...], "rows": [{col: value}]}
void write_json(std::ostream& out, const Artifact& a);
// Writes to `path` (stdout when empty) as JSON or CSV. Throws
// std::runtime_error when the file cannot be opened.
void write_artifact(const Artifact& a, const std::string& path, bool json);

// n,epsilon,rank
Artifact rank_artifact(const RankStudy& study);
// k,sigma_k (normalised by sigma_1)
Artifact sigma_artifact(std::span<const double> ratios);
// iter,residual
Artifact residual_artifact(std::span<const double> history);
// node_id,level,load,worker
Artifact schedule_artifact(const ClusterTree& tree, std::span<const LoadEstimate> loads, const Schedule& sched);
// N,format,depth,r_m,memory_gb,t_init,cr
Artifact storage_artifact(Index n, std::span<const std::pair<Format, StorageReport>> reports,
                          std::span<const int> depths);
// N,format,build_s,matvec_s,eps_r,r_m,cr
Artifact bench_artifact(std::span<const BenchRow> rows);
// method,N,iterations,converged,residual,error,build_s,solve_s,r_m,cr
Artifact solve_artifact(std::span<const SolveRow> rows);
// N,workers,serial_s,parallel_s,rel_diff,imbalance,makespan,total_load
Artifact par_artifact(std::span<const ParRow> rows);
// p_max,trials,checks,violations,max_ratio
Artifact bound_artifact(const BoundCheck& check);

// Operator summary: format, N, depth, epsilon, r_m, memory, CR and the
// per-level rank histogram.
Artifact operator_metadata(Format format, Index n, int depth, double epsilon, const StorageReport& report);

}  // namespace h2d
