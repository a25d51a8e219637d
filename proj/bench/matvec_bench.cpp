// Serial reference matvec versus the scheduled OpenMP matvec on one HODLR2D
// operator.
//
//   matvec_bench [N=40000] [repeats=10] [workers...=1 2 4 8]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "h2d/experiments.hpp"
#include "h2d/hierarchical.hpp"
#include "h2d/matvec.hpp"
#include "h2d/schedule.hpp"
#include "h2d/solver.hpp"

using namespace h2d;

namespace {

template <class F>
double time_mean(int repeats, F&& fn) {
  fn();
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / repeats;
}

}  // namespace

int main(int argc, char** argv) {
  const Index n = argc > 1 ? std::atoll(argv[1]) : 40000;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 10;
  std::vector<int> workers;
  for (int i = 3; i < argc; ++i) workers.push_back(std::atoi(argv[i]));
  if (workers.empty()) workers = {1, 2, 4, 8};

  const auto points = chebyshev_points(n);
  const auto tree = build_annotated_tree(points, unit_box(), 500);
  const KernelSpec kernel{KernelName::OneOverR, {}};
  const auto op = build_hodlr2d<double>(tree, kernel_entries<double>(kernel, tree.points()));
  const auto rep = storage_report(op);
  std::printf("N=%lld depth=%d r_m=%lld memory=%.3f GB build=%.2f s threads=%d\n", static_cast<long long>(n),
              op.depth, static_cast<long long>(rep.r_m), rep.memory_scalars * 8e-9, op.build_seconds,
              omp_get_max_threads());

  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = u(rng);

  std::vector<double> ref;
  const double t_serial = time_mean(repeats, [&] { ref = matvec<double>(op, x); });
  std::printf("%-10s %12s %10s %12s %10s\n", "variant", "seconds", "speedup", "rel_diff", "imbalance");
  std::printf("%-10s %12.5f %10.2f %12s %10s\n", "serial", t_serial, 1.0, "-", "-");

  const auto loads = estimate_loads(tree);
  for (int p : workers) {
    const auto sched = schedule(loads, p);
    std::vector<double> y;
    const double t = time_mean(repeats, [&] { y = parallel_matvec<double>(op, x, sched); });
    std::printf("P=%-8d %12.5f %10.2f %12.3e %10.4f\n", p, t, t_serial / t, relative_error<double>(y, ref),
                sched.imbalance());
  }
  return 0;
}
