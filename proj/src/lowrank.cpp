#include "h2d/lowrank.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace h2d {

namespace {

template <Scalar T>
double norm2_sq(const T* x, Index n) {
  double s = 0.0;
  for (Index i = 0; i < n; ++i) s += abs2(x[i]);
  return s;
}

// sum_i conj(a_i) b_i
template <Scalar T>
T dot_conj(const T* a, const T* b, Index n) {
  T s{};
  for (Index i = 0; i < n; ++i) s += conj_if(a[i]) * b[i];
  return s;
}

Index argmax_unused(const auto& values, const std::vector<char>& used) {
  Index best = -1;
  double best_abs = -1.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (used[i]) continue;
    const double a = std::abs(values[i]);
    if (a > best_abs) {
      best_abs = a;
      best = static_cast<Index>(i);
    }
  }
  return best;
}

Index first_unused(const std::vector<char>& used) {
  auto it = std::find(used.begin(), used.end(), 0);
  return it == used.end() ? -1 : static_cast<Index>(it - used.begin());
}

}  // namespace

template <Scalar T>
LowRankBlock<T> aca(const EntryFn<T>& entry, std::span<const Index> rows, std::span<const Index> cols,
                    const AcaOptions& opts) {
  if (!(opts.epsilon > 0.0 && opts.epsilon < 1.0)) throw std::invalid_argument("aca: epsilon must lie in (0, 1)");
  if (rows.empty() || cols.empty()) throw std::invalid_argument("aca: empty index set");
  if (opts.max_rank < 0) throw std::invalid_argument("aca: max_rank must be >= 1 (or 0 for unlimited)");

  const auto m = static_cast<Index>(rows.size());
  const auto n = static_cast<Index>(cols.size());
  const Index full = std::min(m, n);
  const Index limit = opts.max_rank > 0 ? std::min(opts.max_rank, full) : full;

  LowRankBlock<T> out;
  out.n_rows = m;
  out.n_cols = n;
  out.tolerance = opts.epsilon;

  std::vector<char> used_rows(static_cast<std::size_t>(m), 0);
  std::vector<char> used_cols(static_cast<std::size_t>(n), 0);
  std::vector<T> row(static_cast<std::size_t>(n));
  std::vector<T> col(static_cast<std::size_t>(m));

  double approx_norm_sq = 0.0;
  int zero_streak = 0;
  int small_streak = 0;
  bool converged = false;
  Index pivot_row = 0;

  while (out.rank < limit && pivot_row >= 0) {
    used_rows[static_cast<std::size_t>(pivot_row)] = 1;
    const Index gi = rows[static_cast<std::size_t>(pivot_row)];
    for (Index q = 0; q < n; ++q) row[static_cast<std::size_t>(q)] = entry(gi, cols[static_cast<std::size_t>(q)]);
    for (Index k = 0; k < out.rank; ++k) {
      const T uk = out.u_col(k)[pivot_row];
      const T* vk = out.v_col(k);
      for (Index q = 0; q < n; ++q) row[static_cast<std::size_t>(q)] -= uk * vk[q];
    }

    const Index pivot_col = argmax_unused(row, used_cols);
    if (pivot_col < 0 || std::abs(row[static_cast<std::size_t>(pivot_col)]) == 0.0) {
      if (++zero_streak >= opts.max_zero_pivots) {
        converged = true;
        break;
      }
      pivot_row = first_unused(used_rows);
      continue;
    }
    zero_streak = 0;
    used_cols[static_cast<std::size_t>(pivot_col)] = 1;

    const T pivot = row[static_cast<std::size_t>(pivot_col)];
    const Index gj = cols[static_cast<std::size_t>(pivot_col)];
    for (Index p = 0; p < m; ++p) col[static_cast<std::size_t>(p)] = entry(rows[static_cast<std::size_t>(p)], gj);
    for (Index k = 0; k < out.rank; ++k) {
      const T vk = out.v_col(k)[pivot_col];
      const T* uk = out.u_col(k);
      for (Index p = 0; p < m; ++p) col[static_cast<std::size_t>(p)] -= uk[p] * vk;
    }

    for (auto& r : row) r /= pivot;
    const double uu = norm2_sq(col.data(), m);
    const double vv = norm2_sq(row.data(), n);
    out.u.insert(out.u.end(), col.begin(), col.end());
    out.v.insert(out.v.end(), row.begin(), row.end());
    const Index k_new = out.rank++;

    // |S_k|^2 = |S_{k-1}|^2 + 2 Re sum_{j<k} (u_j^H u_k)(v_j^H v_k) + |u_k|^2 |v_k|^2
    const T* uk = out.u_col(k_new);
    const T* vk = out.v_col(k_new);
    double cross = 0.0;
    for (Index j = 0; j < k_new; ++j) cross += std::real(dot_conj(out.u_col(j), uk, m) * dot_conj(out.v_col(j), vk, n));
    approx_norm_sq = std::max(0.0, approx_norm_sq + 2.0 * cross + uu * vv);

    // One small term can be a lucky pivot; stop only on a run of them and
    // drop the run, since each is below tolerance.
    if (std::sqrt(uu * vv) <= opts.epsilon * std::sqrt(approx_norm_sq)) {
      if (++small_streak >= opts.confirm) {
        out.rank -= small_streak;
        out.u.resize(static_cast<std::size_t>(out.rank * m));
        out.v.resize(static_cast<std::size_t>(out.rank * n));
        converged = true;
        break;
      }
    } else {
      small_streak = 0;
    }

    pivot_row = argmax_unused(col, used_rows);
    if (pivot_row >= 0 && std::abs(col[static_cast<std::size_t>(pivot_row)]) == 0.0) pivot_row = first_unused(used_rows);
  }
  if (out.rank == full) converged = true;  // full-rank skeleton reproduces the block
  out.truncated = !converged && out.rank == limit;
  return out;
}

template LowRankBlock<double> aca<double>(const EntryFn<double>&, std::span<const Index>, std::span<const Index>,
                                          const AcaOptions&);
template LowRankBlock<Complex> aca<Complex>(const EntryFn<Complex>&, std::span<const Index>, std::span<const Index>,
                                            const AcaOptions&);

template <Scalar T>
std::vector<double> singular_values(const DenseBlock<T>& block) {
  const Index m = block.n_rows();
  const Index n = block.n_cols();
  if (m > kSvdMaxSide || n > kSvdMaxSide)
    throw std::invalid_argument("svd: block side exceeds " + std::to_string(kSvdMaxSide));
  for (const auto& e : block.entries)
    if (!std::isfinite(std::abs(e))) throw std::invalid_argument("svd: non-finite entry");
  if (m == 0 || n == 0) return {};

  std::vector<T> a = block.entries;
  std::vector<double> s(static_cast<std::size_t>(std::min(m, n)));
  lapack_int info = 0;
  const auto lm = static_cast<lapack_int>(m);
  const auto ln = static_cast<lapack_int>(n);
  // Row-major A read as column-major is A^T, which has the same singular values.
  if constexpr (std::is_same_v<T, double>) {
    info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', ln, lm, a.data(), ln, s.data(), nullptr, 1, nullptr, 1);
  } else {
    info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', ln, lm, reinterpret_cast<lapack_complex_double*>(a.data()), ln,
                          s.data(), nullptr, 1, nullptr, 1);
  }
  if (info != 0) throw std::runtime_error("svd: LAPACK gesdd failed with info " + std::to_string(info));
  return s;
}

template <Scalar T>
RankReport svd_rank(const DenseBlock<T>& block, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("svd_rank: epsilon must lie in (0, 1)");
  RankReport report;
  report.n_rows = block.n_rows();
  report.n_cols = block.n_cols();
  report.epsilon = epsilon;
  report.singular_values = singular_values(block);
  if (report.singular_values.empty() || report.singular_values.front() == 0.0) {
    report.singular_values.clear();
    return report;
  }
  const double s1 = report.singular_values.front();
  report.rank = std::count_if(report.singular_values.begin(), report.singular_values.end(),
                              [&](double s) { return s / s1 > epsilon; });
  return report;
}

template std::vector<double> singular_values<double>(const DenseBlock<double>&);
template std::vector<double> singular_values<Complex>(const DenseBlock<Complex>&);
template RankReport svd_rank<double>(const DenseBlock<double>&, double);
template RankReport svd_rank<Complex>(const DenseBlock<Complex>&, double);

template <Scalar T>
double aca_error(const EntryFn<T>& entry, std::span<const Index> rows, std::span<const Index> cols,
                 const LowRankBlock<T>& block) {
  const auto m = static_cast<Index>(rows.size());
  const auto n = static_cast<Index>(cols.size());
  if (m * n > kSvdMaxSide * kSvdMaxSide) throw std::invalid_argument("aca_error: block too large for a dense check");
  if (block.n_rows != m || block.n_cols != n) throw std::invalid_argument("aca_error: factor shape mismatch");
  double diff = 0.0;
  double ref = 0.0;
  for (Index p = 0; p < m; ++p) {
    for (Index q = 0; q < n; ++q) {
      const T a = entry(rows[static_cast<std::size_t>(p)], cols[static_cast<std::size_t>(q)]);
      T approx{};
      for (Index k = 0; k < block.rank; ++k) approx += block.u_col(k)[p] * block.v_col(k)[q];
      diff += abs2(a - approx);
      ref += abs2(a);
    }
  }
  if (ref == 0.0) return diff == 0.0 ? 0.0 : std::sqrt(diff);
  return std::sqrt(diff / ref);
}

template double aca_error<double>(const EntryFn<double>&, std::span<const Index>, std::span<const Index>,
                                  const LowRankBlock<double>&);
template double aca_error<Complex>(const EntryFn<Complex>&, std::span<const Index>, std::span<const Index>,
                                   const LowRankBlock<Complex>&);

}  // namespace h2d
