#pragma once

#include <span>
#include <vector>

#include "h2d/hierarchical.hpp"
#include "h2d/schedule.hpp"

namespace h2d {

// Serial reference product: dense leaf blocks, then every low-rank block
// U (V^T x), in stored order. Throws std::invalid_argument if |x| != N.
template <Scalar T>
std::vector<T> matvec(const HierarchicalOperator<T>& op, std::span<const T> x);

// Each worker accumulates the blocks owned by its scheduled nodes (in stored
// order) into a private buffer; buffers are summed in worker-id order. With
// one worker the result is bitwise identical to matvec.
template <Scalar T>
std::vector<T> parallel_matvec(const HierarchicalOperator<T>& op, std::span<const T> x, const Schedule& sched);

// LPT schedule over operator_loads(op).
template <Scalar T>
Schedule operator_schedule(const HierarchicalOperator<T>& op, int workers);

// Exact O(N^2) product with the full kernel matrix; rows run in parallel.
template <Scalar T>
std::vector<T> dense_matvec(const EntryFn<T>& entry, std::span<const T> x);

}  // namespace h2d
