// End-to-end acceptance run. One PASS/FAIL line per criterion; exit status is
// nonzero if any criterion fails. Tolerances are fixed here, not configurable.
//
//   acceptance [criterion...]   (default: all ten)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "h2d/experiments.hpp"
#include "h2d/hierarchical.hpp"
#include "h2d/kernels.hpp"
#include "h2d/matvec.hpp"
#include "h2d/schedule.hpp"
#include "h2d/solver.hpp"

using namespace h2d;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const KernelSpec kLog{KernelName::LogR, {}};
const KernelSpec kInv{KernelName::OneOverR, {}};
const Format kAllFormats[] = {Format::Hodlr2d, Format::Hodlr, Format::HMatrix};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

template <Scalar T>
std::vector<T> random_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<T> x(static_cast<std::size_t>(n));
  for (auto& v : x) {
    if constexpr (is_complex_v<T>)
      v = T(u(rng), u(rng));
    else
      v = u(rng);
  }
  return x;
}

Index rank_at(const RankStudy& st, Index n) {
  for (const auto& r : st.rows)
    if (r.n_rows == n) return r.rank;
  return -1;
}

// 1. edge rank at n=1600 and the fitted exponent
Outcome edge_rank() {
  const std::vector<Index> sizes{400, 1600, 4096};
  const auto st = rank_study(kLog, Pair::Edge, Layout::Half, sizes);
  const Index r = rank_at(st, 1600);
  const double alpha = st.fit ? st.fit->alpha : -1.0;
  const bool ok = std::abs(r - 302.0) <= 0.10 * 302.0 && alpha >= 0.4 && alpha <= 0.6;
  return {ok, fmt("r(1600)=%lld (302 +-10%%), alpha=%.3f in [0.4,0.6]", static_cast<long long>(r), alpha)};
}

// 2. the three growth regimes
Outcome regimes() {
  const std::vector<Index> sizes{400, 4096};
  auto ratio = [&](Pair p, Layout l) {
    const auto st = rank_study(kLog, p, l, sizes);
    return static_cast<double>(rank_at(st, 4096)) / static_cast<double>(rank_at(st, 400));
  };
  const double far = ratio(Pair::Far, Layout::Level2);
  const double vertex = ratio(Pair::Vertex, Layout::Level2);
  const double edge = ratio(Pair::Edge, Layout::Half);
  const bool ok = far <= 1.3 && vertex <= 2.0 && edge >= 2.5;
  return {ok, fmt("far=%.3f (<=1.3) vertex=%.3f (<=2.0) edge=%.3f (>=2.5)", far, vertex, edge)};
}

// 3. multipole inequality
Outcome multipole() {
  const auto r = multipole_bound_check(1000, 30, kDefaultSeed);
  return {r.violations == 0 && r.trials == 1000,
          fmt("trials=%d p<=%d checks=%lld violations=%lld max error/bound=%.4f", r.trials, r.p_max,
              static_cast<long long>(r.checks), static_cast<long long>(r.violations), r.max_ratio)};
}

// 4. every kernel, every format against the dense matrix
template <Scalar T>
void oracle_case(std::span<const Point2D> pts, const EntryFn<T>& entry, double& worst_2, double (&worst_col)[3]) {
  const Index n = static_cast<Index>(pts.size());
  const double eps = 1e-12;
  const auto x = random_vector<T>(n, kDefaultSeed);
  const auto exact = dense_matvec<T>(entry, x);
  for (int fi = 0; fi < 3; ++fi) {
    const Format f = kAllFormats[fi];
    const auto op = build_operator<T>(f, pts, entry, 32, BuildOptions{eps});
    worst_2 = std::max(worst_2, relative_error<T>(matvec<T>(op, x), exact));
    std::vector<T> e(static_cast<std::size_t>(n)), col(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
      e[static_cast<std::size_t>(j)] = T(1.0);
      const auto y = matvec<T>(op, e);
      double diff = 0.0, ref = 0.0;
      for (Index i = 0; i < n; ++i) {
        const T a = entry(i, j);
        diff = std::max(diff, std::abs(y[static_cast<std::size_t>(i)] - a));
        ref = std::max(ref, std::abs(a));
      }
      worst_col[fi] = std::max(worst_col[fi], ref > 0.0 ? diff / ref : diff);
      e[static_cast<std::size_t>(j)] = T(0.0);
    }
  }
}

Outcome oracle() {
  double worst_2 = 0.0, worst_col[3] = {0.0, 0.0, 0.0};
  int cases = 0;
  for (int m : {16, 32}) {
    const Index n = static_cast<Index>(m) * m;
    const auto pts = chebyshev_points(n);
    for (auto name : {KernelName::LogR, KernelName::OneOverR, KernelName::ThinPlate, KernelName::BesselY0,
                      KernelName::RbfPhi1, KernelName::RbfPhi2, KernelName::Hankel0}) {
      KernelSpec k{name, {}};
      k.params.beta = static_cast<double>(n);
      if (k.scalar_kind() == ScalarKind::Complex)
        oracle_case<Complex>(pts, kernel_entries<Complex>(k, pts), worst_2, worst_col);
      else
        oracle_case<double>(pts, kernel_entries<double>(k, pts), worst_2, worst_col);
      ++cases;
    }
    const auto ie = ie_uniform_system(m, 0.5);
    oracle_case<Complex>(ie.grid, ie.entries(), worst_2, worst_col);
    ++cases;
  }
  const double col = *std::max_element(worst_col, worst_col + 3);
  const bool ok = worst_2 <= 1e-9 && col <= 100 * 1e-12;
  return {ok, fmt("%d kernel/size cases x 3 formats: max rel 2-norm=%.2e (<=1e-9), max column err (<=1e-10) "
                  "hodlr2d=%.2e hodlr=%.2e hmatrix=%.2e",
                  cases, worst_2, worst_col[0], worst_col[1], worst_col[2])};
}

// 5. rank and storage anchors at N=10000
Outcome anchors() {
  const auto pts = chebyshev_points(10000);
  const auto inv = kernel_entries<double>(kInv, pts);
  const auto h2 = storage_report(build_operator<double>(Format::Hodlr2d, pts, inv, 500));
  const auto hl = storage_report(build_operator<double>(Format::Hodlr, pts, inv, 500));
  KernelSpec p1{KernelName::RbfPhi1, {}}, p2{KernelName::RbfPhi2, {}};
  p1.params.beta = p2.params.beta = 10000;
  const auto c1 = storage_report(build_operator<double>(Format::Hodlr2d, pts, kernel_entries<double>(p1, pts), 500));
  const auto c2 = storage_report(build_operator<double>(Format::Hodlr2d, pts, kernel_entries<double>(p2, pts), 500));
  const bool r_ok = std::abs(h2.r_m - 113.0) <= 0.20 * 113.0;
  const bool ratio_ok = hl.r_m >= 3 * h2.r_m;
  const bool c1_ok = std::abs(c1.compression_ratio - 0.154) <= 0.25 * 0.154;
  const bool c2_ok = std::abs(c2.compression_ratio - 0.218) <= 0.25 * 0.218;
  return {r_ok && ratio_ok && c1_ok && c2_ok,
          fmt("hodlr2d r_m=%lld (113 +-20%%), hodlr r_m=%lld (>=3x), phi1 CR=%.4f (0.154 +-25%%), phi2 CR=%.4f "
              "(0.218 +-25%%)",
              static_cast<long long>(h2.r_m), static_cast<long long>(hl.r_m), c1.compression_ratio,
              c2.compression_ratio)};
}

// 6. entrywise matvec error at N=10000
Outcome accuracy() {
  BenchOptions opts;
  opts.formats = {Format::Hodlr2d};
  const std::vector<Index> sizes{10000};
  const auto rows = matvec_bench(sizes, opts);
  const double e = rows.at(0).eps_r.value_or(1.0);
  return {e <= 1e-10, fmt("eps_r=%.2e (<=1e-10) over %d products", e, opts.repeats)};
}

// 7. RBF solves through HODLR2D
Outcome rbf() {
  SolveOptions opts;
  const std::vector<Format> fmts{Format::Hodlr2d};
  bool ok = true;
  std::string detail;
  for (auto name : {KernelName::RbfPhi1, KernelName::RbfPhi2}) {
    KernelSpec k{name, {}};
    k.params.beta = 10000;
    const auto rows = rbf_solve(k, 10000, fmts, opts);
    const auto& r = rows.at(0);
    const double err = r.error.value_or(1.0);
    ok = ok && r.converged && err <= 1e-8;
    detail += fmt("%s: it=%d residual=%.2e error=%.2e (<=1e-8)  ", std::string(to_string(name)).c_str(), r.iterations,
                  r.residual, err);
  }
  return {ok, detail};
}

// 8. matvec time growth from N=10000 to N=40000
Outcome scaling() {
  BenchOptions opts;
  opts.formats = {Format::Hodlr2d};
  opts.oracle = false;
  const std::vector<Index> sizes{10000, 40000};
  const auto rows = matvec_bench(sizes, opts);
  const double t1 = rows.at(0).matvec_seconds, t4 = rows.at(1).matvec_seconds;
  const double ratio = t4 / t1;
  const double scalars = static_cast<double>(rows[1].memory_scalars) / static_cast<double>(rows[0].memory_scalars);
  return {ratio <= 6.0, fmt("t(40000)/t(10000)=%.3f (<=6); stored-scalar ratio %.3f; t=%.4fs,%.4fs", ratio, scalars,
                            t1, t4)};
}

// 9. parallel product, schedule balance, LPT bound
std::int64_t brute_force_opt(const std::vector<std::int64_t>& loads, int p) {
  std::vector<int> a(loads.size(), 0);
  std::int64_t best = std::accumulate(loads.begin(), loads.end(), std::int64_t{0});
  while (true) {
    std::vector<std::int64_t> tot(static_cast<std::size_t>(p), 0);
    for (std::size_t i = 0; i < loads.size(); ++i) tot[static_cast<std::size_t>(a[i])] += loads[i];
    best = std::min(best, *std::max_element(tot.begin(), tot.end()));
    std::size_t k = 0;
    while (k < a.size() && ++a[k] == p) a[k++] = 0;
    if (k == a.size()) break;
  }
  return best;
}

Outcome parallel() {
  const auto tree = build_annotated_tree(chebyshev_points(40000), unit_box(), 500);
  const auto op = build_hodlr2d<double>(tree, kernel_entries<double>(kInv, tree.points()));
  const auto loads = estimate_loads(tree);
  const auto x = random_vector<double>(40000, kDefaultSeed);
  const auto ref = matvec<double>(op, x);
  double worst_diff = 0.0, worst_imb = 0.0;
  for (int p : {2, 4, 8}) {
    const auto s = schedule(loads, p);
    worst_diff = std::max(worst_diff, relative_error<double>(parallel_matvec<double>(op, x, s), ref));
    worst_imb = std::max(worst_imb, s.imbalance());
  }

  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_int_distribution<int> load(1, 1000);
  int instances = 0, lpt_fail = 0;
  for (int n = 1; n <= 12; ++n)
    for (int p = 2; p <= 3; ++p)
      for (int rep = 0; rep < 4; ++rep) {
        if (p == 3 && n > 11) continue;  // 3^12 assignments: skip for runtime
        std::vector<std::int64_t> v(static_cast<std::size_t>(n));
        std::vector<LoadEstimate> le;
        for (int i = 0; i < n; ++i) {
          v[static_cast<std::size_t>(i)] = load(rng);
          le.push_back({i, v[static_cast<std::size_t>(i)]});
        }
        const auto s = schedule(le, p);
        const double bound = (4.0 / 3.0 - 1.0 / (3.0 * p)) * static_cast<double>(brute_force_opt(v, p));
        if (static_cast<double>(s.makespan()) > bound + 1e-9) ++lpt_fail;
        ++instances;
      }
  const bool ok = worst_diff <= 1e-12 && worst_imb <= 0.15 && lpt_fail == 0;
  return {ok, fmt("P=2,4,8 max rel diff=%.2e (<=1e-12), max imbalance=%.4f (<=0.15), LPT 4/3 bound held on %d/%d "
                  "instances",
                  worst_diff, worst_imb, instances - lpt_fail, instances)};
}

// 10. integral-equation solve on a 40x40 grid
Outcome ie() {
  SolveOptions opts;
  const std::vector<Format> fmts{Format::Hodlr2d};
  const auto r = ie_solve(40, 0.5, fmts, opts);
  bool ok = true;
  double worst_res = 0.0;
  for (const auto& row : r.rows) {
    ok = ok && row.converged && row.residual < 1e-10;
    worst_res = std::max(worst_res, row.residual);
  }
  const double agree = r.agreement.at(1).value_or(1.0);
  ok = ok && agree <= 1e-8;
  return {ok, fmt("N=%lld residual=%.2e (<1e-10), hodlr2d vs dense=%.2e (<=1e-8)",
                  static_cast<long long>(r.rows.at(0).n), worst_res, agree)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"edge rank growth", edge_rank},     {"rank regimes", regimes},
      {"multipole bound", multipole},      {"dense oracle equivalence", oracle},
      {"rank/storage anchors", anchors},   {"matvec accuracy", accuracy},
      {"rbf solve", rbf},                  {"matvec time scaling", scaling},
      {"parallel correctness", parallel},  {"integral-equation solve", ie},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s: %s [%s] (%.1fs)\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
