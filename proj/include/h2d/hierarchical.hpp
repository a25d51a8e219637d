#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <optional>
#include <vector>

#include "h2d/common.hpp"
#include "h2d/geometry.hpp"
#include "h2d/lowrank.hpp"
#include "h2d/schedule.hpp"

namespace h2d {

enum class Format { Hodlr2d, Hodlr, HMatrix };

std::string_view to_string(Format f);
std::optional<Format> parse_format(std::string_view text);

// Tree node as seen by an operator; quadtree nodes keep their ids.
struct OpNode {
  IndexRange range;
  int level = 0;
  NodeId parent = kNoNode;
  bool leaf = true;
};

enum class BlockKind { Dense, LowRank };

// One stored block of the partition, in permuted (tree) order.
struct BlockSlot {
  BlockKind kind = BlockKind::Dense;
  NodeId owner = kNoNode;    // row cluster
  NodeId partner = kNoNode;  // column cluster
  int level = 0;
  IndexRange rows;
  IndexRange cols;
};

template <Scalar T>
struct DenseCoupling {
  BlockSlot slot;
  std::vector<T> entries;  // row-major
};

template <Scalar T>
struct LowRankCoupling {
  BlockSlot slot;
  LowRankBlock<T> block;
};

template <Scalar T>
struct HierarchicalOperator {
  Format format = Format::Hodlr2d;
  Index n = 0;
  int depth = 0;
  double epsilon = 0.0;
  std::vector<Index> permutation;  // permutation[p] = original index at position p
  std::vector<OpNode> nodes;
  std::vector<DenseCoupling<T>> dense;
  std::vector<LowRankCoupling<T>> lowrank;
  double build_seconds = 0.0;

  bool any_truncated() const;
};

struct BuildOptions {
  double epsilon = 1e-12;
  Index max_rank = 0;  // 0: no cap beyond the block size
  int workers = 1;     // >1 compresses blocks on an LPT schedule of node loads
};

// Square-box admissibility min(diam) <= eta * dist, boxes measured exactly;
// equality is admissible.
bool hmatrix_admissible(const Box2D& a, const Box2D& b, double eta_squared = 2.0);

// Block partitions. Blocks with an empty row or column range are omitted.
std::vector<BlockSlot> plan_hodlr2d(const ClusterTree& tree);
std::vector<BlockSlot> plan_hmatrix(const ClusterTree& tree, double eta_squared = 2.0);

// K-D binary tree for HODLR: alternating x/y median splits until a node holds
// at most n_max points.
struct BinaryPartition {
  std::vector<Index> permutation;
  std::vector<OpNode> nodes;
  std::vector<std::array<NodeId, 2>> children;
  int depth = 0;
};
BinaryPartition kd_partition(std::span<const Point2D> points, Index n_max);
std::vector<BlockSlot> plan_hodlr(const BinaryPartition& part);

// Fills every planned block from `entry` (global indices).
template <Scalar T>
HierarchicalOperator<T> execute_plan(Format format, std::vector<Index> permutation, std::vector<OpNode> nodes,
                                     int depth, std::span<const BlockSlot> plan, const EntryFn<T>& entry,
                                     const BuildOptions& opts);

// Throws std::invalid_argument if the tree's relations were not computed.
template <Scalar T>
HierarchicalOperator<T> build_hodlr2d(const ClusterTree& tree, const EntryFn<T>& entry, const BuildOptions& opts = {});

template <Scalar T>
HierarchicalOperator<T> build_hmatrix(const ClusterTree& tree, const EntryFn<T>& entry, const BuildOptions& opts = {});

template <Scalar T>
HierarchicalOperator<T> build_hodlr(std::span<const Point2D> points, const EntryFn<T>& entry, Index n_max,
                                    const BuildOptions& opts = {});

// Any format from raw points; the quadtree formats use root_box_for(points).
template <Scalar T>
HierarchicalOperator<T> build_operator(Format format, std::span<const Point2D> points, const EntryFn<T>& entry,
                                       Index n_max, const BuildOptions& opts = {},
                                       DepthRule rule = DepthRule::MaxOccupancy);

std::vector<OpNode> op_nodes(const ClusterTree& tree);

// Per-owner work of an operator's blocks: rows*cols for dense, rows+cols for
// low-rank. For HODLR2D this reproduces estimate_load on every node.
template <Scalar T>
std::vector<LoadEstimate> operator_loads(const HierarchicalOperator<T>& op);

struct StorageReport {
  Index r_m = 0;                  // max rank over low-rank blocks
  std::int64_t memory_scalars = 0;
  double compression_ratio = 0.0;  // memory_scalars / N^2
  double build_seconds = 0.0;
  std::int64_t dense_blocks = 0;
  std::int64_t lowrank_blocks = 0;
  std::vector<Index> max_rank_per_level;     // index = level
  std::vector<std::int64_t> blocks_per_level;  // low-rank blocks per level
};

template <Scalar T>
StorageReport storage_report(const HierarchicalOperator<T>& op);

}  // namespace h2d
