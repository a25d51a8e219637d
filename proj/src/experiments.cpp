#include "h2d/experiments.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <memory>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "h2d/matvec.hpp"
#include "h2d/schedule.hpp"

namespace h2d {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int exact_sqrt(Index n, const char* what) {
  if (n < 1) throw std::invalid_argument(std::string(what) + ": size must be positive");
  auto m = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (m * m != n)
    throw std::invalid_argument(std::string(what) + ": size " + std::to_string(n) + " is not a perfect square");
  return static_cast<int>(m);
}

template <Scalar T>
std::vector<T> random_vector(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<T> x(static_cast<std::size_t>(n));
  for (auto& v : x) {
    if constexpr (is_complex_v<T>) {
      const double re = u(rng);
      v = T(re, u(rng));
    } else {
      v = u(rng);
    }
  }
  return x;
}

template <Scalar T>
DenseBlock<T> pair_block(const KernelSpec& kernel, const ClusterPair& cp) {
  return assemble_block<T>(kernel, cp.rows, cp.cols, cp.points);
}

void check_study_kernel(const KernelSpec& kernel) {
  if (kernel.name == KernelName::IeLippmann)
    throw std::invalid_argument("rank studies take a plain kernel, not the integral-equation system");
}

// Products with the exact matrix for several vectors at once, one kernel
// sweep per row.
template <Scalar T>
std::vector<std::vector<T>> dense_products(const EntryFn<T>& entry, const std::vector<std::vector<T>>& xs) {
  const auto n = static_cast<Index>(xs.front().size());
  const std::size_t k = xs.size();
  std::vector<std::vector<T>> ys(k, std::vector<T>(xs.front().size()));
#pragma omp parallel for schedule(dynamic, 16)
  for (Index i = 0; i < n; ++i) {
    std::vector<T> acc(k, T{});
    for (Index j = 0; j < n; ++j) {
      const T a = entry(i, j);
      for (std::size_t r = 0; r < k; ++r) acc[r] += a * xs[r][static_cast<std::size_t>(j)];
    }
    for (std::size_t r = 0; r < k; ++r) ys[r][static_cast<std::size_t>(i)] = acc[r];
  }
  return ys;
}

template <Scalar T>
double max_relative_error(const std::vector<T>& b, const std::vector<T>& ref) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    diff = std::max(diff, std::abs(b[i] - ref[i]));
    scale = std::max(scale, std::abs(ref[i]));
  }
  return scale == 0.0 ? diff : diff / scale;
}

template <Scalar T>
LinearMap<T> operator_map(const HierarchicalOperator<T>& op, int workers) {
  if (workers <= 1) return [&op](std::span<const T> x) { return matvec<T>(op, x); };
  auto sched = std::make_shared<Schedule>(operator_schedule(op, workers));
  return [&op, sched](std::span<const T> x) { return parallel_matvec<T>(op, x, *sched); };
}

template <Scalar T>
std::vector<BenchRow> bench_impl(std::span<const Point2D> points, const BenchOptions& opts) {
  const auto n = static_cast<Index>(points.size());
  if (n > kBenchMaxN)
    throw std::invalid_argument("matvec_bench: N = " + std::to_string(n) + " exceeds " + std::to_string(kBenchMaxN));
  const auto entry = kernel_entries<T>(opts.kernel, points);
  const int repeats = std::max(1, opts.repeats);

  std::mt19937_64 rng(opts.seed);
  std::vector<std::vector<T>> xs;
  for (int r = 0; r < repeats; ++r) xs.push_back(random_vector<T>(n, rng));
  std::vector<std::vector<T>> exact;
  if (opts.oracle && n <= kDenseOracleMaxN) exact = dense_products<T>(entry, xs);

  std::vector<BenchRow> rows;
  for (Format f : opts.formats) {
    BuildOptions bo{opts.epsilon, 0, opts.workers};
    const auto op = build_operator<T>(f, points, entry, opts.n_max, bo, opts.depth_rule);
    const auto apply = operator_map(op, opts.workers);
    const auto report = storage_report(op);

    BenchRow row;
    row.n = n;
    row.format = f;
    row.depth = op.depth;
    row.build_seconds = op.build_seconds;
    row.r_m = report.r_m;
    row.memory_scalars = report.memory_scalars;
    row.compression_ratio = report.compression_ratio;
    row.truncated = op.any_truncated();

    (void)apply(xs.front());
    double total = 0.0, worst = 0.0;
    for (int r = 0; r < repeats; ++r) {
      const auto t0 = Clock::now();
      auto b = apply(xs[static_cast<std::size_t>(r)]);
      total += seconds_since(t0);
      if (!exact.empty()) worst = std::max(worst, max_relative_error(b, exact[static_cast<std::size_t>(r)]));
    }
    row.matvec_seconds = total / repeats;
    if (!exact.empty()) row.eps_r = worst;
    rows.push_back(row);
  }
  return rows;
}

template <Scalar T>
SolveRow solve_with(std::string_view method, const LinearMap<T>& apply, std::span<const T> rhs,
                    const GmresConfig& cfg, SolveReport<T>& report) {
  const auto t0 = Clock::now();
  report = gmres<T>(apply, rhs, cfg);
  SolveRow row;
  row.method = method;
  row.n = static_cast<Index>(rhs.size());
  row.iterations = report.iterations;
  row.converged = report.converged;
  row.residual = report.final_residual;
  row.solve_seconds = seconds_since(t0);
  row.residual_history = report.residual_history;
  return row;
}

// Two-sided Chebyshev grid over a rectangle.
ClusterPair make_pair(int m, const double src[4], const double dst[4]) {
  ClusterPair cp;
  cp.points = chebyshev_grid(m, src[0], src[1], src[2], src[3]);
  auto target = chebyshev_grid(m, dst[0], dst[1], dst[2], dst[3]);
  const auto n = static_cast<Index>(cp.points.size());
  cp.points.insert(cp.points.end(), target.begin(), target.end());
  for (Index i = 0; i < n; ++i) {
    cp.rows.push_back(i);
    cp.cols.push_back(n + i);
  }
  return cp;
}

}  // namespace

std::string_view to_string(Pair p) {
  switch (p) {
    case Pair::Edge: return "edge";
    case Pair::Vertex: return "vertex";
    case Pair::Far: return "far";
  }
  return "?";
}

std::optional<Pair> parse_pair(std::string_view text) {
  for (Pair p : {Pair::Edge, Pair::Vertex, Pair::Far})
    if (text == to_string(p)) return p;
  return std::nullopt;
}

std::string_view to_string(Layout l) { return l == Layout::Half ? "half" : "level2"; }

std::optional<Layout> parse_layout(std::string_view text) {
  if (text == "half") return Layout::Half;
  if (text == "level2") return Layout::Level2;
  return std::nullopt;
}

ClusterPair cluster_pair(Pair pair, Layout layout, Index n) {
  const int m = exact_sqrt(n, "cluster_pair");
  if (layout == Layout::Half) {
    if (pair != Pair::Edge) throw std::invalid_argument("cluster_pair: the half layout only has an edge pair");
    const double left[4] = {-1.0, 0.0, -1.0, 1.0};
    const double right[4] = {0.0, 1.0, -1.0, 1.0};
    return make_pair(m, left, right);
  }
  auto cell = [](int i, int j, double out[4]) {
    out[0] = -1.0 + 0.5 * i;
    out[1] = out[0] + 0.5;
    out[2] = -1.0 + 0.5 * j;
    out[3] = out[2] + 0.5;
  };
  double src[4], dst[4];
  cell(1, 1, src);
  switch (pair) {
    case Pair::Edge: cell(2, 1, dst); break;
    case Pair::Vertex: cell(2, 2, dst); break;
    case Pair::Far: cell(3, 3, dst); break;
  }
  return make_pair(m, src, dst);
}

FitResult fit_power_law(std::span<const double> n, std::span<const double> r) {
  if (n.size() != r.size() || n.size() < 3) throw std::invalid_argument("fit_power_law: need >= 3 paired points");
  const double k = static_cast<double>(n.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(n[i] > 0.0) || !(r[i] > 0.0)) throw std::invalid_argument("fit_power_law: values must be positive");
    const double x = std::log(n[i]), y = std::log(r[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double det = k * sxx - sx * sx;
  if (det == 0.0) throw std::invalid_argument("fit_power_law: sizes must not all be equal");
  FitResult fit;
  fit.alpha = (k * sxy - sx * sy) / det;
  const double logc = (sy - fit.alpha * sx) / k;
  fit.c = std::exp(logc);
  double ss = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double e = std::log(r[i]) - logc - fit.alpha * std::log(n[i]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / k);
  return fit;
}

RankStudy rank_study(const KernelSpec& kernel, Pair pair, Layout layout, std::span<const Index> sizes,
                     double epsilon) {
  check_study_kernel(kernel);
  if (sizes.empty()) throw std::invalid_argument("rank_study: no sizes given");
  for (Index n : sizes)
    if (n > kStudySvdMaxN)
      throw std::invalid_argument("rank_study: n = " + std::to_string(n) + " exceeds the SVD limit " +
                                  std::to_string(kStudySvdMaxN));
  RankStudy study;
  study.pair = pair;
  study.layout = layout;
  study.epsilon = epsilon;
  for (Index n : sizes) {
    const auto cp = cluster_pair(pair, layout, n);
    if (kernel.scalar_kind() == ScalarKind::Complex)
      study.rows.push_back(svd_rank(pair_block<Complex>(kernel, cp), epsilon));
    else
      study.rows.push_back(svd_rank(pair_block<double>(kernel, cp), epsilon));
  }
  if (study.rows.size() >= 3) {
    std::vector<double> ns, rs;
    for (const auto& r : study.rows) {
      ns.push_back(static_cast<double>(r.n_rows));
      rs.push_back(static_cast<double>(std::max<Index>(r.rank, 1)));
    }
    study.fit = fit_power_law(ns, rs);
  }
  return study;
}

std::vector<double> sv_decay(const KernelSpec& kernel, Pair pair, Layout layout, Index n) {
  const Index sizes[] = {n};
  auto study = rank_study(kernel, pair, layout, sizes, 1e-14);
  auto sigma = std::move(study.rows.front().singular_values);
  if (!sigma.empty()) {
    const double s1 = sigma.front();
    for (auto& s : sigma) s /= s1;
  }
  return sigma;
}

double multipole_bound(double total_charge, double c, int p) {
  if (!(c > 1.0)) throw std::invalid_argument("multipole_bound: c must exceed 1");
  return total_charge / (p + 1) / (c - 1.0) * std::pow(1.0 / c, p);
}

double multipole_truncation_error(std::span<const Complex> sources, std::span<const double> charges, Complex z,
                                  int p) {
  if (sources.size() != charges.size()) throw std::invalid_argument("multipole: sources and charges differ in length");
  double rho = 0.0, total = 0.0;
  std::vector<Complex> w(sources.size()), wk(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    w[i] = sources[i] / z;
    rho = std::max(rho, std::abs(w[i]));
    total += std::abs(charges[i]);
    wk[i] = std::pow(w[i], p);
  }
  if (total == 0.0) return 0.0;
  if (!(rho < 1.0)) throw std::invalid_argument("multipole: evaluation point inside the source disk");
  // term_k = -sum_i q_i w_i^k / k
  Complex sum{};
  for (int k = p + 1; k < 1000000; ++k) {
    Complex term{};
    for (std::size_t i = 0; i < w.size(); ++i) {
      wk[i] *= w[i];
      term -= charges[i] * wk[i];
    }
    sum += term / static_cast<double>(k);
    const double rest = total * std::pow(rho, k + 1) / ((k + 1) * (1.0 - rho));
    if (rest <= 1e-17 * std::abs(sum) || rest < 1e-300) break;
  }
  return std::abs(sum);
}

BoundCheck multipole_bound_check(int trials, int p_max, std::uint64_t seed) {
  if (trials < 0 || p_max < 1) throw std::invalid_argument("multipole_bound_check: need trials >= 0 and p_max >= 1");
  BoundCheck out;
  out.trials = trials;
  out.p_max = p_max;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> charge(-1.0, 1.0);
  std::uniform_int_distribution<int> count(1, 20);
  const double radius = 1.0;
  for (int t = 0; t < trials; ++t) {
    const int ns = count(rng);
    std::vector<Complex> src(static_cast<std::size_t>(ns));
    std::vector<double> q(static_cast<std::size_t>(ns));
    double total = 0.0;
    for (int i = 0; i < ns; ++i) {
      // uniform in the open disk |z| < radius
      const double rr = radius * std::sqrt(unit(rng)) * (1.0 - 1e-12);
      src[static_cast<std::size_t>(i)] = std::polar(rr, 2.0 * std::numbers::pi * unit(rng));
      q[static_cast<std::size_t>(i)] = charge(rng);
      total += std::abs(q[static_cast<std::size_t>(i)]);
    }
    const double c = 1.1 + 4.9 * unit(rng);
    const Complex z = std::polar(c * radius, 2.0 * std::numbers::pi * unit(rng));

    // phi(z) - q log z by direct evaluation, each log(1 - z_i/z) on its principal branch
    Complex phi_rel{};
    double phi_scale = 0.0;
    for (int i = 0; i < ns; ++i) {
      Complex d = std::log(z - src[static_cast<std::size_t>(i)]) - std::log(z);
      if (d.imag() > std::numbers::pi) d -= Complex(0.0, 2.0 * std::numbers::pi);
      if (d.imag() <= -std::numbers::pi) d += Complex(0.0, 2.0 * std::numbers::pi);
      phi_rel += q[static_cast<std::size_t>(i)] * d;
      phi_scale += std::abs(q[static_cast<std::size_t>(i)] * std::log(z - src[static_cast<std::size_t>(i)]));
    }
    Complex expansion{};
    for (int p = 1; p <= p_max; ++p) {
      Complex a{};
      for (int i = 0; i < ns; ++i) a -= q[static_cast<std::size_t>(i)] * std::pow(src[static_cast<std::size_t>(i)], p);
      expansion += a / static_cast<double>(p) / std::pow(z, p);

      const double err = multipole_truncation_error(src, q, z, p);
      const double bound = multipole_bound(total, c, p);
      ++out.checks;
      if (err > bound) ++out.violations;
      if (bound > 0.0) out.max_ratio = std::max(out.max_ratio, err / bound);
      const double direct = std::abs(phi_rel - expansion);
      out.max_direct_deviation = std::max(out.max_direct_deviation, std::abs(direct - err) / std::max(phi_scale, 1.0));
    }
  }
  return out;
}

std::vector<Point2D> chebyshev_points(Index n) { return chebyshev_grid(exact_sqrt(n, "chebyshev_points"), unit_box()); }

std::vector<BenchRow> matvec_bench_points(std::span<const Point2D> points, const BenchOptions& opts) {
  if (points.empty()) throw std::invalid_argument("matvec_bench: empty point set");
  if (opts.kernel.scalar_kind() == ScalarKind::Complex) return bench_impl<Complex>(points, opts);
  return bench_impl<double>(points, opts);
}

std::vector<BenchRow> matvec_bench(std::span<const Index> sizes, const BenchOptions& opts) {
  std::vector<BenchRow> rows;
  for (Index n : sizes) {
    const auto pts = chebyshev_points(n);
    auto part = matvec_bench_points(pts, opts);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::vector<SolveRow> rbf_solve(const KernelSpec& kernel, Index n, std::span<const Format> formats,
                                const SolveOptions& opts) {
  if (kernel.name != KernelName::RbfPhi1 && kernel.name != KernelName::RbfPhi2)
    throw std::invalid_argument("rbf_solve: kernel must be rbf_phi1 or rbf_phi2");
  const auto points = chebyshev_points(n);
  const auto entry = kernel_entries<double>(kernel, points);
  std::mt19937_64 rng(opts.seed);
  const auto lambda = random_vector<double>(n, rng);
  const auto f = manufacture_rhs<double>(entry, lambda);

  std::vector<SolveRow> rows;
  for (Format fmt : formats) {
    BuildOptions bo{opts.epsilon, 0, opts.workers};
    const auto op = build_operator<double>(fmt, points, entry, opts.n_max, bo, opts.depth_rule);
    const auto report = storage_report(op);
    SolveReport<double> sr;
    auto row = solve_with<double>(to_string(fmt), operator_map(op, opts.workers), f, opts.gmres, sr);
    row.error = relative_error<double>(sr.solution, lambda);
    row.build_seconds = op.build_seconds;
    row.r_m = report.r_m;
    row.compression_ratio = report.compression_ratio;
    rows.push_back(std::move(row));
  }
  return rows;
}

Complex interpolate_grid(std::span<const Complex> field, int grid, Point2D at) {
  if (grid < 1 || field.size() != static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid))
    throw std::invalid_argument("interpolate_grid: field does not match the grid size");
  if (grid == 1) return field[0];
  const double h = 2.0 / grid;
  auto locate = [&](double v, int& i0, double& w) {
    const double t = (v + 1.0) / h - 0.5;
    i0 = std::clamp(static_cast<int>(std::floor(t)), 0, grid - 2);
    w = std::clamp(t - i0, 0.0, 1.0);
  };
  int ix, iy;
  double wx, wy;
  locate(at.x, ix, wx);
  locate(at.y, iy, wy);
  auto f = [&](int i, int j) { return field[static_cast<std::size_t>(j) * grid + i]; };
  return (1 - wy) * ((1 - wx) * f(ix, iy) + wx * f(ix + 1, iy)) + wy * ((1 - wx) * f(ix, iy + 1) + wx * f(ix + 1, iy + 1));
}

IeSolve ie_solve(int grid, double wavenumber, std::span<const Format> formats, const SolveOptions& opts) {
  if (grid < 1) throw std::invalid_argument("ie_solve: grid must be >= 1");
  const auto sys = ie_uniform_system(grid, wavenumber);
  const auto entry = sys.entries();
  const auto f = sys.rhs();
  const auto n = static_cast<Index>(f.size());

  // Exact matrix, kept only while it fits comfortably in memory.
  constexpr Index kDenseIeMaxN = 6400;
  std::vector<Complex> dense;
  if (n <= kDenseIeMaxN) {
    dense.resize(static_cast<std::size_t>(n * n));
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) dense[static_cast<std::size_t>(i * n + j)] = entry(i, j);
  }
  auto exact_apply = [&](std::span<const Complex> x) {
    if (dense.empty()) return dense_matvec<Complex>(entry, x);
    std::vector<Complex> y(x.size());
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) {
      Complex acc{};
      const Complex* row = dense.data() + i * n;
      for (Index j = 0; j < n; ++j) acc += row[j] * x[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
  };
  auto self_consistency = [&](const std::vector<Complex>& x) {
    const auto ax = exact_apply(x);
    return relative_error<Complex>(ax, f);
  };

  IeSolve out;
  if (!dense.empty()) {
    SolveReport<Complex> sr;
    auto row = solve_with<Complex>("dense", LinearMap<Complex>(exact_apply), f, opts.gmres, sr);
    row.error = self_consistency(sr.solution);
    row.compression_ratio = 1.0;
    out.rows.push_back(std::move(row));
    out.solutions.push_back(std::move(sr.solution));
  }
  for (Format fmt : formats) {
    BuildOptions bo{opts.epsilon, 0, opts.workers};
    const auto op = build_operator<Complex>(fmt, sys.grid, entry, opts.n_max, bo, opts.depth_rule);
    const auto report = storage_report(op);
    SolveReport<Complex> sr;
    auto row = solve_with<Complex>(to_string(fmt), operator_map(op, opts.workers), f, opts.gmres, sr);
    row.error = self_consistency(sr.solution);
    row.build_seconds = op.build_seconds;
    row.r_m = report.r_m;
    row.compression_ratio = report.compression_ratio;
    out.rows.push_back(std::move(row));
    out.solutions.push_back(std::move(sr.solution));
  }
  for (const auto& x : out.solutions) {
    if (!dense.empty())
      out.agreement.push_back(relative_error<Complex>(x, out.solutions.front()));
    else
      out.agreement.push_back(std::nullopt);
    out.probe.push_back(interpolate_grid(x, grid, {0.0, 0.0}));
  }
  return out;
}

std::vector<ParRow> par_bench(const KernelSpec& kernel, Index n, std::span<const int> workers,
                              const BenchOptions& opts) {
  if (kernel.scalar_kind() == ScalarKind::Complex)
    throw std::invalid_argument("par_bench: real kernels only");
  const auto points = chebyshev_points(n);
  const auto tree = build_annotated_tree(points, root_box_for(points), opts.n_max, opts.depth_rule);
  const auto entry = kernel_entries<double>(kernel, tree.points());
  const auto op = build_hodlr2d<double>(tree, entry, {opts.epsilon, 0, 1});
  const auto loads = estimate_loads(tree);
  std::int64_t total = 0;
  for (const auto& l : loads) total += l.load;

  std::mt19937_64 rng(opts.seed);
  const auto x = random_vector<double>(n, rng);
  const int repeats = std::max(1, opts.repeats);
  auto time_it = [&](auto&& fn) {
    fn();
    const auto t0 = Clock::now();
    for (int r = 0; r < repeats; ++r) fn();
    return seconds_since(t0) / repeats;
  };
  const auto serial = matvec<double>(op, x);
  const double t_serial = time_it([&] { return matvec<double>(op, x); });

  std::vector<ParRow> rows;
  for (int p : workers) {
    if (p < 1) throw std::invalid_argument("par_bench: worker counts must be >= 1");
    const auto sched = schedule(loads, p);
    const auto par = parallel_matvec<double>(op, x, sched);
    ParRow row;
    row.n = n;
    row.workers = p;
    row.serial_seconds = t_serial;
    row.parallel_seconds = time_it([&] { return parallel_matvec<double>(op, x, sched); });
    row.relative_difference = relative_error<double>(par, serial);
    row.imbalance = sched.imbalance();
    row.makespan = sched.makespan();
    row.total_load = total;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace h2d
