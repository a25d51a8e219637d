#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "h2d/common.hpp"
#include "h2d/geometry.hpp"
#include "h2d/hierarchical.hpp"
#include "h2d/kernels.hpp"
#include "h2d/lowrank.hpp"
#include "h2d/solver.hpp"

namespace h2d {

inline constexpr std::uint64_t kDefaultSeed = 20240607;

// Size guards for the studies.
inline constexpr Index kStudySvdMaxN = 6400;
inline constexpr Index kBenchMaxN = 250000;

enum class Pair { Edge, Vertex, Far };

// Half: the square is cut into [-1,0]x[-1,1] and [0,1]x[-1,1].
// Level2: 4x4 grid of cells of width 0.5 over [-1,1]^2; the source is cell
// (1,1), the edge target (2,1), the vertex target (2,2), the far target (3,3).
enum class Layout { Half, Level2 };

std::string_view to_string(Pair p);
std::optional<Pair> parse_pair(std::string_view text);
std::string_view to_string(Layout l);
std::optional<Layout> parse_layout(std::string_view text);

// Two clusters of n = m^2 Chebyshev points each; rows index the source
// cluster and cols the target cluster within `points`.
struct ClusterPair {
  std::vector<Point2D> points;
  std::vector<Index> rows;
  std::vector<Index> cols;
};

// Throws std::invalid_argument if n is not a perfect square, or for the
// half layout with anything but an edge pair.
ClusterPair cluster_pair(Pair pair, Layout layout, Index n);

// Least-squares fit of log r = log c + alpha log n.
struct FitResult {
  double alpha = 0.0;
  double c = 0.0;
  double residual = 0.0;  // RMS of the log-space residuals
};

// Needs at least 3 points with positive coordinates.
FitResult fit_power_law(std::span<const double> n, std::span<const double> r);

struct RankStudy {
  Pair pair = Pair::Edge;
  Layout layout = Layout::Half;
  double epsilon = 1e-14;
  std::vector<RankReport> rows;   // one per size, singular values kept
  std::optional<FitResult> fit;   // with >= 3 sizes
};

// Dense assembly and SVD rank per size. Sizes above kStudySvdMaxN are rejected.
RankStudy rank_study(const KernelSpec& kernel, Pair pair, Layout layout, std::span<const Index> sizes,
                     double epsilon = 1e-14);

// sigma_k / sigma_1 for k = 1..n.
std::vector<double> sv_decay(const KernelSpec& kernel, Pair pair, Layout layout, Index n);

// Truncation of the far-field expansion of sum_i q_i log(z - z_i) after p terms,
// evaluated as the tail sum of the series.
double multipole_truncation_error(std::span<const Complex> sources, std::span<const double> charges, Complex z,
                                  int p);
// (Q / (p + 1)) (1 / (c - 1)) (1 / c)^p with Q = sum |q_i| and c = |z| / r.
double multipole_bound(double total_charge, double c, int p);

struct BoundCheck {
  int trials = 0;
  int p_max = 0;
  std::int64_t checks = 0;
  std::int64_t violations = 0;
  double max_ratio = 0.0;             // max error / bound
  double max_direct_deviation = 0.0;  // tail sum vs direct subtraction, relative to |phi|
};

BoundCheck multipole_bound_check(int trials, int p_max, std::uint64_t seed);

struct BenchOptions {
  KernelSpec kernel{KernelName::OneOverR, {}};
  std::vector<Format> formats{Format::Hodlr2d, Format::Hodlr, Format::HMatrix};
  Index n_max = 500;
  double epsilon = 1e-12;
  int repeats = 10;
  int workers = 1;
  std::uint64_t seed = kDefaultSeed;
  DepthRule depth_rule = DepthRule::MaxOccupancy;
  bool oracle = true;  // dense error check, skipped above kDenseOracleMaxN
};

struct BenchRow {
  Index n = 0;
  Format format = Format::Hodlr2d;
  int depth = 0;
  double build_seconds = 0.0;
  double matvec_seconds = 0.0;  // mean over the repeats
  std::optional<double> eps_r;  // max_i |b_i - (Ax)_i| / max_i |(Ax)_i|, worst over the repeats
  Index r_m = 0;
  std::int64_t memory_scalars = 0;
  double compression_ratio = 0.0;
  bool truncated = false;
};

// Points are the sqrt(N) x sqrt(N) Chebyshev grid on [-1,1]^2 unless given.
std::vector<BenchRow> matvec_bench(std::span<const Index> sizes, const BenchOptions& opts);
std::vector<BenchRow> matvec_bench_points(std::span<const Point2D> points, const BenchOptions& opts);

std::vector<Point2D> chebyshev_points(Index n);

struct SolveOptions {
  Index n_max = 500;
  double epsilon = 1e-12;
  GmresConfig gmres;
  int workers = 1;
  std::uint64_t seed = kDefaultSeed;
  DepthRule depth_rule = DepthRule::MaxOccupancy;
};

struct SolveRow {
  std::string_view method;  // "dense" or a format name
  Index n = 0;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;        // true relative residual of the hierarchical system
  std::optional<double> error;  // forward error (RBF) or |A x - f| / |f| with the exact matrix (IE)
  double build_seconds = 0.0;
  double solve_seconds = 0.0;
  Index r_m = 0;
  double compression_ratio = 0.0;
  std::vector<double> residual_history;
};

// Manufactured solution lambda in [-1,1]^N, f = A lambda with the exact
// matrix, then GMRES through each format. Kernel must be rbf_phi1 or rbf_phi2.
std::vector<SolveRow> rbf_solve(const KernelSpec& kernel, Index n, std::span<const Format> formats,
                                const SolveOptions& opts);

struct IeSolve {
  std::vector<SolveRow> rows;                        // dense first, then each format
  std::vector<std::vector<Complex>> solutions;       // parallel to rows
  std::vector<std::optional<double>> agreement;      // |x_method - x_dense| / |x_dense|
  std::vector<Complex> probe;                        // solution interpolated at (0,0)
};

IeSolve ie_solve(int grid, double wavenumber, std::span<const Format> formats, const SolveOptions& opts);

// Bilinear interpolation of a cell-centred grid x grid field on [-1,1]^2.
Complex interpolate_grid(std::span<const Complex> field, int grid, Point2D at);

struct ParRow {
  Index n = 0;
  int workers = 1;
  double serial_seconds = 0.0;
  double parallel_seconds = 0.0;
  double relative_difference = 0.0;  // vs the serial product
  double imbalance = 0.0;
  std::int64_t makespan = 0;
  std::int64_t total_load = 0;
};

std::vector<ParRow> par_bench(const KernelSpec& kernel, Index n, std::span<const int> workers,
                              const BenchOptions& opts);

}  // namespace h2d
