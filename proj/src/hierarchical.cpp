#include "h2d/hierarchical.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <exception>
#include <functional>
#include <stdexcept>

namespace h2d {

namespace {

struct FormatName {
  Format format;
  std::string_view text;
};

constexpr FormatName kFormats[] = {
    {Format::Hodlr2d, "hodlr2d"}, {Format::Hodlr, "hodlr"}, {Format::HMatrix, "hmatrix"}};

void require_relations(const ClusterTree& tree) {
  if (!tree.relations_computed()) throw std::invalid_argument("builder: tree relations have not been computed");
}

void push_slot(std::vector<BlockSlot>& plan, BlockKind kind, const ClusterTree& tree, NodeId owner, NodeId partner) {
  const auto& a = tree.node(owner);
  const auto& b = tree.node(partner);
  if (a.range.empty() || b.range.empty()) return;
  plan.push_back({kind, owner, partner, a.level, a.range, b.range});
}

// Admissibility on grid cells: diam^2 = 2 w^2 and dist^2 = w^2 (gx^2 + gy^2)
// with gx, gy the number of empty cells between the boxes along each axis.
bool grid_admissible(const GridCoord& a, const GridCoord& b, double eta_squared) {
  const auto gx = std::max<std::int64_t>(std::abs(a.ix - b.ix) - 1, 0);
  const auto gy = std::max<std::int64_t>(std::abs(a.iy - b.iy) - 1, 0);
  const auto gap_sq = static_cast<double>(gx * gx + gy * gy);
  return 2.0 <= eta_squared * gap_sq * (1.0 + 1e-12);
}

}  // namespace

std::string_view to_string(Format f) {
  for (const auto& e : kFormats)
    if (e.format == f) return e.text;
  return "?";
}

std::optional<Format> parse_format(std::string_view text) {
  for (const auto& e : kFormats)
    if (e.text == text) return e.format;
  return std::nullopt;
}

template <Scalar T>
bool HierarchicalOperator<T>::any_truncated() const {
  return std::any_of(lowrank.begin(), lowrank.end(), [](const auto& c) { return c.block.truncated; });
}

bool hmatrix_admissible(const Box2D& a, const Box2D& b, double eta_squared) {
  const double dx = std::max(0.0, std::abs(a.center.x - b.center.x) - a.half_width - b.half_width);
  const double dy = std::max(0.0, std::abs(a.center.y - b.center.y) - a.half_width - b.half_width);
  const double diam_sq = 8.0 * std::min(a.half_width, b.half_width) * std::min(a.half_width, b.half_width);
  return diam_sq <= eta_squared * (dx * dx + dy * dy) * (1.0 + 1e-12);
}

std::vector<OpNode> op_nodes(const ClusterTree& tree) {
  std::vector<OpNode> nodes;
  nodes.reserve(tree.nodes().size());
  for (const auto& nd : tree.nodes()) nodes.push_back({nd.range, nd.level, nd.parent, nd.is_leaf()});
  return nodes;
}

std::vector<BlockSlot> plan_hodlr2d(const ClusterTree& tree) {
  require_relations(tree);
  std::vector<BlockSlot> plan;
  const int depth = tree.depth();
  for (std::int64_t k = 0; k < tree.level_size(depth); ++k) {
    const NodeId leaf = tree.node_at(depth, k);
    push_slot(plan, BlockKind::Dense, tree, leaf, leaf);
    for (NodeId e : tree.node(leaf).edge_set) push_slot(plan, BlockKind::Dense, tree, leaf, e);
  }
  for (int level = 1; level <= depth; ++level)
    for (std::int64_t k = 0; k < tree.level_size(level); ++k) {
      const NodeId id = tree.node_at(level, k);
      for (NodeId j : tree.node(id).interaction_list) push_slot(plan, BlockKind::LowRank, tree, id, j);
    }
  return plan;
}

std::vector<BlockSlot> plan_hmatrix(const ClusterTree& tree, double eta_squared) {
  require_relations(tree);
  std::vector<BlockSlot> dense;
  std::vector<BlockSlot> lowrank;
  // Pairs (a, b) not yet covered by an admissible ancestor pair.
  std::function<void(NodeId, NodeId)> visit = [&](NodeId a, NodeId b) {
    const auto& na = tree.node(a);
    const auto& nb = tree.node(b);
    if (na.range.empty() || nb.range.empty()) return;
    if (na.level >= 1 && grid_admissible(na.coord, nb.coord, eta_squared)) {
      push_slot(lowrank, BlockKind::LowRank, tree, a, b);
    } else if (na.is_leaf()) {
      push_slot(dense, BlockKind::Dense, tree, a, b);
    } else {
      for (NodeId ca : na.children)
        for (NodeId cb : nb.children) visit(ca, cb);
    }
  };
  visit(0, 0);
  const auto by_owner = [](const BlockSlot& x, const BlockSlot& y) {
    return std::tie(x.level, x.owner, x.partner) < std::tie(y.level, y.owner, y.partner);
  };
  std::sort(dense.begin(), dense.end(), by_owner);
  std::sort(lowrank.begin(), lowrank.end(), by_owner);
  dense.insert(dense.end(), lowrank.begin(), lowrank.end());
  return dense;
}

BinaryPartition kd_partition(std::span<const Point2D> points, Index n_max) {
  if (points.empty()) throw std::invalid_argument("kd_partition: empty point list");
  if (n_max < 1) throw std::invalid_argument("kd_partition: n_max must be >= 1");
  BinaryPartition part;
  part.permutation.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) part.permutation[i] = static_cast<Index>(i);

  std::function<NodeId(Index, Index, int, NodeId)> split = [&](Index offset, Index count, int level, NodeId parent) {
    const auto id = static_cast<NodeId>(part.nodes.size());
    part.nodes.push_back({{offset, count}, level, parent, true});
    part.children.push_back({kNoNode, kNoNode});
    part.depth = std::max(part.depth, level);
    if (count <= n_max) return id;

    const bool by_x = level % 2 == 0;
    auto first = part.permutation.begin() + offset;
    std::sort(first, first + count, [&](Index a, Index b) {
      const auto& pa = points[static_cast<std::size_t>(a)];
      const auto& pb = points[static_cast<std::size_t>(b)];
      const double ka = by_x ? pa.x : pa.y, kb = by_x ? pb.x : pb.y;
      const double sa = by_x ? pa.y : pa.x, sb = by_x ? pb.y : pb.x;
      return std::tie(ka, sa, a) < std::tie(kb, sb, b);
    });
    const Index left = count - count / 2;
    const NodeId l = split(offset, left, level + 1, id);
    const NodeId r = split(offset + left, count - left, level + 1, id);
    part.nodes[static_cast<std::size_t>(id)].leaf = false;
    part.children[static_cast<std::size_t>(id)] = {l, r};
    return id;
  };
  split(0, static_cast<Index>(points.size()), 0, kNoNode);
  return part;
}

std::vector<BlockSlot> plan_hodlr(const BinaryPartition& part) {
  std::vector<BlockSlot> dense;
  std::vector<BlockSlot> lowrank;
  for (std::size_t id = 0; id < part.nodes.size(); ++id) {
    const auto& nd = part.nodes[id];
    const auto self = static_cast<NodeId>(id);
    if (nd.leaf) {
      dense.push_back({BlockKind::Dense, self, self, nd.level, nd.range, nd.range});
      continue;
    }
    const auto [l, r] = part.children[id];
    const auto& nl = part.nodes[static_cast<std::size_t>(l)];
    const auto& nr = part.nodes[static_cast<std::size_t>(r)];
    lowrank.push_back({BlockKind::LowRank, l, r, nl.level, nl.range, nr.range});
    lowrank.push_back({BlockKind::LowRank, r, l, nr.level, nr.range, nl.range});
  }
  std::stable_sort(lowrank.begin(), lowrank.end(), [](const BlockSlot& x, const BlockSlot& y) { return x.level < y.level; });
  dense.insert(dense.end(), lowrank.begin(), lowrank.end());
  return dense;
}

template <Scalar T>
HierarchicalOperator<T> execute_plan(Format format, std::vector<Index> permutation, std::vector<OpNode> nodes,
                                     int depth, std::span<const BlockSlot> plan, const EntryFn<T>& entry,
                                     const BuildOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  HierarchicalOperator<T> op;
  op.format = format;
  op.n = static_cast<Index>(permutation.size());
  op.depth = depth;
  op.epsilon = opts.epsilon;
  op.permutation = std::move(permutation);
  op.nodes = std::move(nodes);

  // Job j fills dense[slot_index[j]] or lowrank[slot_index[j]].
  std::vector<std::size_t> slot_index(plan.size());
  for (std::size_t j = 0; j < plan.size(); ++j) {
    if (plan[j].kind == BlockKind::Dense) {
      slot_index[j] = op.dense.size();
      op.dense.push_back({plan[j], {}});
    } else {
      slot_index[j] = op.lowrank.size();
      op.lowrank.push_back({plan[j], {}});
    }
  }

  const AcaOptions aca_opts{opts.epsilon, opts.max_rank, 3};
  const auto& perm = op.permutation;
  auto run_job = [&](std::size_t j) {
    const auto& s = plan[j];
    const std::span<const Index> rows(perm.data() + s.rows.offset, static_cast<std::size_t>(s.rows.count));
    const std::span<const Index> cols(perm.data() + s.cols.offset, static_cast<std::size_t>(s.cols.count));
    if (s.kind == BlockKind::Dense) {
      auto& e = op.dense[slot_index[j]].entries;
      e.resize(rows.size() * cols.size());
      std::size_t k = 0;
      for (Index i : rows)
        for (Index c : cols) e[k++] = entry(i, c);
    } else {
      op.lowrank[slot_index[j]].block = aca<T>(entry, rows, cols, aca_opts);
    }
  };

  if (opts.workers <= 1) {
    for (std::size_t j = 0; j < plan.size(); ++j) run_job(j);
  } else {
    std::vector<LoadEstimate> loads(op.nodes.size());
    for (std::size_t id = 0; id < loads.size(); ++id) loads[id].node = static_cast<NodeId>(id);
    for (const auto& s : plan)
      loads[static_cast<std::size_t>(s.owner)].load +=
          s.kind == BlockKind::Dense ? s.rows.count * s.cols.count : s.rows.count + s.cols.count;
    const Schedule sched = schedule(loads, opts.workers);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(opts.workers));
#pragma omp parallel num_threads(opts.workers)
    {
      const int nthreads = omp_get_num_threads();
      for (int w = omp_get_thread_num(); w < opts.workers; w += nthreads) {
        try {
          for (std::size_t j = 0; j < plan.size(); ++j)
            if (sched.assignment[static_cast<std::size_t>(plan[j].owner)] == w) run_job(j);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  op.build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return op;
}

template <Scalar T>
HierarchicalOperator<T> build_hodlr2d(const ClusterTree& tree, const EntryFn<T>& entry, const BuildOptions& opts) {
  const auto plan = plan_hodlr2d(tree);
  return execute_plan<T>(Format::Hodlr2d, tree.permutation(), op_nodes(tree), tree.depth(), plan, entry, opts);
}

template <Scalar T>
HierarchicalOperator<T> build_hmatrix(const ClusterTree& tree, const EntryFn<T>& entry, const BuildOptions& opts) {
  const auto plan = plan_hmatrix(tree);
  return execute_plan<T>(Format::HMatrix, tree.permutation(), op_nodes(tree), tree.depth(), plan, entry, opts);
}

template <Scalar T>
HierarchicalOperator<T> build_hodlr(std::span<const Point2D> points, const EntryFn<T>& entry, Index n_max,
                                    const BuildOptions& opts) {
  auto part = kd_partition(points, n_max);
  const auto plan = plan_hodlr(part);
  return execute_plan<T>(Format::Hodlr, std::move(part.permutation), std::move(part.nodes), part.depth, plan, entry,
                         opts);
}

template <Scalar T>
HierarchicalOperator<T> build_operator(Format format, std::span<const Point2D> points, const EntryFn<T>& entry,
                                       Index n_max, const BuildOptions& opts, DepthRule rule) {
  if (format == Format::Hodlr) return build_hodlr<T>(points, entry, n_max, opts);
  const auto tree = build_annotated_tree({points.begin(), points.end()}, root_box_for(points), n_max, rule);
  return format == Format::Hodlr2d ? build_hodlr2d<T>(tree, entry, opts) : build_hmatrix<T>(tree, entry, opts);
}

template <Scalar T>
std::vector<LoadEstimate> operator_loads(const HierarchicalOperator<T>& op) {
  std::vector<LoadEstimate> loads(op.nodes.size());
  for (std::size_t id = 0; id < loads.size(); ++id) loads[id].node = static_cast<NodeId>(id);
  for (const auto& d : op.dense)
    loads[static_cast<std::size_t>(d.slot.owner)].load += d.slot.rows.count * d.slot.cols.count;
  for (const auto& l : op.lowrank)
    loads[static_cast<std::size_t>(l.slot.owner)].load += l.slot.rows.count + l.slot.cols.count;
  return loads;
}

template <Scalar T>
StorageReport storage_report(const HierarchicalOperator<T>& op) {
  StorageReport r;
  r.max_rank_per_level.assign(static_cast<std::size_t>(op.depth + 1), 0);
  r.blocks_per_level.assign(static_cast<std::size_t>(op.depth + 1), 0);
  for (const auto& d : op.dense) r.memory_scalars += static_cast<std::int64_t>(d.entries.size());
  for (const auto& l : op.lowrank) {
    r.memory_scalars += l.block.stored_scalars();
    r.r_m = std::max(r.r_m, l.block.rank);
    auto lvl = static_cast<std::size_t>(l.slot.level);
    r.max_rank_per_level[lvl] = std::max(r.max_rank_per_level[lvl], l.block.rank);
    ++r.blocks_per_level[lvl];
  }
  r.dense_blocks = static_cast<std::int64_t>(op.dense.size());
  r.lowrank_blocks = static_cast<std::int64_t>(op.lowrank.size());
  r.compression_ratio = op.n == 0 ? 0.0 : static_cast<double>(r.memory_scalars) / (static_cast<double>(op.n) * op.n);
  r.build_seconds = op.build_seconds;
  return r;
}

#define H2D_INSTANTIATE(T)                                                                                          \
  template struct HierarchicalOperator<T>;                                                                          \
  template HierarchicalOperator<T> execute_plan<T>(Format, std::vector<Index>, std::vector<OpNode>, int,           \
                                                   std::span<const BlockSlot>, const EntryFn<T>&,                   \
                                                   const BuildOptions&);                                            \
  template HierarchicalOperator<T> build_hodlr2d<T>(const ClusterTree&, const EntryFn<T>&, const BuildOptions&);   \
  template HierarchicalOperator<T> build_hmatrix<T>(const ClusterTree&, const EntryFn<T>&, const BuildOptions&);   \
  template HierarchicalOperator<T> build_hodlr<T>(std::span<const Point2D>, const EntryFn<T>&, Index,              \
                                                  const BuildOptions&);                                             \
  template HierarchicalOperator<T> build_operator<T>(Format, std::span<const Point2D>, const EntryFn<T>&, Index,   \
                                                     const BuildOptions&, DepthRule);                               \
  template std::vector<LoadEstimate> operator_loads<T>(const HierarchicalOperator<T>&);                             \
  template StorageReport storage_report<T>(const HierarchicalOperator<T>&);

H2D_INSTANTIATE(double)
H2D_INSTANTIATE(Complex)

#undef H2D_INSTANTIATE

}  // namespace h2d
