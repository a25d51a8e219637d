#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "h2d/geometry.hpp"

namespace h2d {

struct LoadEstimate {
  NodeId node = kNoNode;
  std::int64_t load = 0;  // scalar multiply-add units
};

// Per-node work of one HODLR2D node with n points:
//   leaf:     n^2 + |I_C| n + sum_i m_i + n sum_j k_j
//   non-leaf: |I_C| n + sum_i m_i
// where m_i / k_j are the sizes of the interaction-list / edge-sharing clusters.
std::int64_t node_load(bool leaf, Index n, std::span<const Index> interaction_sizes, std::span<const Index> edge_sizes);
LoadEstimate estimate_load(const ClusterTree& tree, NodeId id);
std::vector<LoadEstimate> estimate_loads(const ClusterTree& tree);

struct Schedule {
  int workers = 1;
  std::vector<int> assignment;  // indexed by node id
  std::vector<std::int64_t> per_worker_load;

  std::int64_t makespan() const;
  // (max - min) / mean of per-worker totals; 0 when no load.
  double imbalance() const;
};

// Longest-processing-time-first, decided once up front: loads sorted descending
// (ties by node id), each placed on the least-loaded worker (ties by worker id).
// Node ids must be 0..loads.size()-1 in some order.
Schedule schedule(std::span<const LoadEstimate> loads, int workers);

}  // namespace h2d
