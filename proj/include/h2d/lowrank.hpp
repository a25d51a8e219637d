#pragma once

#include <span>
#include <vector>

#include "h2d/common.hpp"
#include "h2d/kernels.hpp"

namespace h2d {

// A block approximated as U * V^T (plain transpose, also for complex data).
// Factors are column-major: U is n_rows x rank, V is n_cols x rank.
template <Scalar T>
struct LowRankBlock {
  Index n_rows = 0;
  Index n_cols = 0;
  Index rank = 0;
  std::vector<T> u;
  std::vector<T> v;
  double tolerance = 0.0;
  bool truncated = false;  // stopped at max_rank before the tolerance was met

  const T* u_col(Index k) const { return u.data() + k * n_rows; }
  const T* v_col(Index k) const { return v.data() + k * n_cols; }
  Index stored_scalars() const { return rank * (n_rows + n_cols); }
};

struct AcaOptions {
  double epsilon = 1e-12;
  Index max_rank = 0;        // 0 means min(rows, cols)
  int max_zero_pivots = 3;   // consecutive exactly-zero pivot rows before giving up
  int confirm = 1;           // consecutive sub-tolerance terms needed to stop
};

// Partially pivoted adaptive cross approximation. Residual rows and columns
// are formed from the factors, never from a dense residual. Stops once
// |u_k| |v_k| <= epsilon * |U V^T|_F (running estimate) holds for `confirm`
// terms in a row; those trailing terms are discarded (they are below tolerance).
template <Scalar T>
LowRankBlock<T> aca(const EntryFn<T>& entry, std::span<const Index> rows, std::span<const Index> cols,
                    const AcaOptions& opts = {});

struct RankReport {
  Index n_rows = 0;
  Index n_cols = 0;
  double epsilon = 0.0;
  Index rank = 0;
  std::vector<double> singular_values;  // descending; empty for a zero matrix
};

inline constexpr Index kSvdMaxSide = 4096;

// epsilon-rank r = #{k : sigma_k / sigma_1 > epsilon} from a full SVD.
// Throws std::invalid_argument above kSvdMaxSide per side or on non-finite data.
template <Scalar T>
RankReport svd_rank(const DenseBlock<T>& block, double epsilon);

// Singular values only, descending.
template <Scalar T>
std::vector<double> singular_values(const DenseBlock<T>& block);

// Exact |A - U V^T|_F / |A|_F (0 when both vanish). Limited to 4096^2 entries.
template <Scalar T>
double aca_error(const EntryFn<T>& entry, std::span<const Index> rows, std::span<const Index> cols,
                 const LowRankBlock<T>& block);

}  // namespace h2d
