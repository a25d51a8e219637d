#include "h2d/matvec.hpp"

#include <omp.h>

#include <stdexcept>

namespace h2d {

namespace {

// Four independent partial sums keep the FMA pipeline busy.
template <Scalar T>
T dot(const T* a, const T* b, Index n) {
  T s0{}, s1{}, s2{}, s3{};
  Index q = 0;
  for (; q + 4 <= n; q += 4) {
    s0 += a[q] * b[q];
    s1 += a[q + 1] * b[q + 1];
    s2 += a[q + 2] * b[q + 2];
    s3 += a[q + 3] * b[q + 3];
  }
  for (; q < n; ++q) s0 += a[q] * b[q];
  return (s0 + s1) + (s2 + s3);
}

template <Scalar T>
void apply_dense(const DenseCoupling<T>& d, const T* x, T* y) {
  const Index m = d.slot.rows.count;
  const Index n = d.slot.cols.count;
  const T* xs = x + d.slot.cols.offset;
  T* ys = y + d.slot.rows.offset;
  const T* a = d.entries.data();
  for (Index p = 0; p < m; ++p) ys[p] += dot(a + p * n, xs, n);
}

template <Scalar T>
void apply_lowrank(const LowRankCoupling<T>& l, const T* x, T* y, std::vector<T>& work) {
  const auto& b = l.block;
  const T* xs = x + l.slot.cols.offset;
  T* ys = y + l.slot.rows.offset;
  work.assign(static_cast<std::size_t>(b.rank), T{});
  for (Index k = 0; k < b.rank; ++k) work[static_cast<std::size_t>(k)] = dot(b.v_col(k), xs, b.n_cols);
  for (Index k = 0; k < b.rank; ++k) {
    const T* u = b.u_col(k);
    const T t = work[static_cast<std::size_t>(k)];
    for (Index p = 0; p < b.n_rows; ++p) ys[p] += u[p] * t;
  }
}

template <Scalar T>
std::vector<T> to_tree_order(const HierarchicalOperator<T>& op, std::span<const T> x) {
  if (static_cast<Index>(x.size()) != op.n)
    throw std::invalid_argument("matvec: vector length " + std::to_string(x.size()) + " does not match N = " +
                                std::to_string(op.n));
  std::vector<T> xp(x.size());
  for (std::size_t p = 0; p < xp.size(); ++p) xp[p] = x[static_cast<std::size_t>(op.permutation[p])];
  return xp;
}

template <Scalar T>
std::vector<T> to_original_order(const HierarchicalOperator<T>& op, const std::vector<T>& yp) {
  std::vector<T> y(yp.size());
  for (std::size_t p = 0; p < yp.size(); ++p) y[static_cast<std::size_t>(op.permutation[p])] = yp[p];
  return y;
}

}  // namespace

template <Scalar T>
std::vector<T> matvec(const HierarchicalOperator<T>& op, std::span<const T> x) {
  const auto xp = to_tree_order(op, x);
  std::vector<T> yp(xp.size(), T{});
  std::vector<T> work;
  for (const auto& d : op.dense) apply_dense(d, xp.data(), yp.data());
  for (const auto& l : op.lowrank) apply_lowrank(l, xp.data(), yp.data(), work);
  return to_original_order(op, yp);
}

template <Scalar T>
std::vector<T> parallel_matvec(const HierarchicalOperator<T>& op, std::span<const T> x, const Schedule& sched) {
  if (sched.assignment.size() != op.nodes.size() || sched.workers < 1)
    throw std::invalid_argument("parallel_matvec: schedule does not cover the operator's tree");
  const auto xp = to_tree_order(op, x);
  const auto workers = static_cast<std::size_t>(sched.workers);
  std::vector<std::vector<T>> partial(workers);
  const auto owner_of = [&](const BlockSlot& s) { return sched.assignment[static_cast<std::size_t>(s.owner)]; };

#pragma omp parallel num_threads(sched.workers)
  {
    const int nthreads = omp_get_num_threads();
    std::vector<T> work;
    for (int w = omp_get_thread_num(); w < sched.workers; w += nthreads) {
      auto& yp = partial[static_cast<std::size_t>(w)];
      yp.assign(xp.size(), T{});
      for (const auto& d : op.dense)
        if (owner_of(d.slot) == w) apply_dense(d, xp.data(), yp.data());
      for (const auto& l : op.lowrank)
        if (owner_of(l.slot) == w) apply_lowrank(l, xp.data(), yp.data(), work);
    }
  }

  std::vector<T> yp(xp.size(), T{});
  for (const auto& part : partial)
    for (std::size_t p = 0; p < yp.size(); ++p) yp[p] += part[p];
  return to_original_order(op, yp);
}

template <Scalar T>
Schedule operator_schedule(const HierarchicalOperator<T>& op, int workers) {
  const auto loads = operator_loads(op);
  return schedule(loads, workers);
}

template <Scalar T>
std::vector<T> dense_matvec(const EntryFn<T>& entry, std::span<const T> x) {
  const auto n = static_cast<Index>(x.size());
  std::vector<T> y(x.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    T acc{};
    for (Index j = 0; j < n; ++j) acc += entry(i, j) * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

#define H2D_INSTANTIATE(T)                                                                                    \
  template std::vector<T> matvec<T>(const HierarchicalOperator<T>&, std::span<const T>);                     \
  template std::vector<T> parallel_matvec<T>(const HierarchicalOperator<T>&, std::span<const T>,             \
                                             const Schedule&);                                                \
  template Schedule operator_schedule<T>(const HierarchicalOperator<T>&, int);                                \
  template std::vector<T> dense_matvec<T>(const EntryFn<T>&, std::span<const T>);

H2D_INSTANTIATE(double)
H2D_INSTANTIATE(Complex)

#undef H2D_INSTANTIATE

}  // namespace h2d
