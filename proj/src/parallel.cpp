#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "h2d/schedule.hpp"

namespace h2d {

std::int64_t node_load(bool leaf, Index n, std::span<const Index> interaction_sizes, std::span<const Index> edge_sizes) {
  std::int64_t load = static_cast<std::int64_t>(interaction_sizes.size()) * n;
  for (Index m : interaction_sizes) load += m;
  if (leaf) {
    load += n * n;
    for (Index k : edge_sizes) load += n * k;
  }
  return load;
}

LoadEstimate estimate_load(const ClusterTree& tree, NodeId id) {
  if (!tree.relations_computed()) throw std::invalid_argument("estimate_load: tree relations have not been computed");
  const auto& nd = tree.node(id);
  std::vector<Index> m, k;
  for (NodeId c : nd.interaction_list) m.push_back(tree.node(c).size());
  for (NodeId e : nd.edge_set) k.push_back(tree.node(e).size());
  return {id, node_load(nd.is_leaf(), nd.size(), m, k)};
}

std::vector<LoadEstimate> estimate_loads(const ClusterTree& tree) {
  std::vector<LoadEstimate> loads;
  loads.reserve(tree.nodes().size());
  for (const auto& nd : tree.nodes()) loads.push_back(estimate_load(tree, nd.id));
  return loads;
}

std::int64_t Schedule::makespan() const {
  return per_worker_load.empty() ? 0 : *std::max_element(per_worker_load.begin(), per_worker_load.end());
}

double Schedule::imbalance() const {
  if (per_worker_load.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(per_worker_load.begin(), per_worker_load.end());
  const double total = static_cast<double>(std::accumulate(per_worker_load.begin(), per_worker_load.end(), std::int64_t{0}));
  if (total == 0.0) return 0.0;
  return static_cast<double>(*hi - *lo) / (total / static_cast<double>(per_worker_load.size()));
}

Schedule schedule(std::span<const LoadEstimate> loads, int workers) {
  if (workers < 1) throw std::invalid_argument("schedule: need at least one worker");
  Schedule s;
  s.workers = workers;
  s.assignment.assign(loads.size(), -1);
  s.per_worker_load.assign(static_cast<std::size_t>(workers), 0);

  std::vector<LoadEstimate> order(loads.begin(), loads.end());
  for (const auto& l : order) {
    if (l.node < 0 || static_cast<std::size_t>(l.node) >= loads.size() || s.assignment[static_cast<std::size_t>(l.node)] != -1)
      throw std::invalid_argument("schedule: node ids must be a permutation of 0..n-1");
    if (l.load < 0) throw std::invalid_argument("schedule: negative load");
    s.assignment[static_cast<std::size_t>(l.node)] = 0;
  }
  std::sort(order.begin(), order.end(), [](const LoadEstimate& a, const LoadEstimate& b) {
    return a.load != b.load ? a.load > b.load : a.node < b.node;
  });
  for (const auto& l : order) {
    // min_element returns the first minimum, i.e. the lowest worker id on ties.
    const auto w = std::min_element(s.per_worker_load.begin(), s.per_worker_load.end()) - s.per_worker_load.begin();
    s.assignment[static_cast<std::size_t>(l.node)] = static_cast<int>(w);
    s.per_worker_load[static_cast<std::size_t>(w)] += l.load;
  }
  return s;
}

}  // namespace h2d
