#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "h2d/common.hpp"

namespace h2d {

struct Point2D {
  double x = 0.0;
  double y = 0.0;
};

// Axis-aligned square.
struct Box2D {
  Point2D center;
  double half_width = 1.0;

  double x_lo() const { return center.x - half_width; }
  double x_hi() const { return center.x + half_width; }
  double y_lo() const { return center.y - half_width; }
  double y_hi() const { return center.y + half_width; }
  bool contains(const Point2D& p) const;  // closed box
};

inline Box2D unit_box() { return Box2D{{0.0, 0.0}, 1.0}; }  // [-1,1]^2

enum class Relation { Self, Edge, Vertex, WellSeparated };

const char* to_string(Relation r);

// Integer position of a box in the uniform 2^level x 2^level grid.
struct GridCoord {
  int level = 0;
  std::int64_t ix = 0;
  std::int64_t iy = 0;
};

Relation classify_relation(const GridCoord& a, const GridCoord& b);

// Boxes must be same-size cells of one grid; throws std::invalid_argument on
// mismatched half widths or misaligned centres.
Relation classify_relation(const Box2D& a, const Box2D& b);

enum class DepthRule {
  MaxOccupancy,   // smallest depth whose fullest leaf holds <= n_max points
  MeanOccupancy,  // smallest depth with N / 4^depth <= n_max
};

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

struct ClusterNode {
  NodeId id = kNoNode;
  int level = 0;
  std::int64_t index_in_level = 0;
  GridCoord coord;
  Box2D box;
  IndexRange range;  // slice of ClusterTree::permutation
  NodeId parent = kNoNode;
  // Counter-clockwise from bottom-left: 0 BL, 1 BR, 2 TR, 3 TL.
  std::array<NodeId, 4> children{kNoNode, kNoNode, kNoNode, kNoNode};

  std::vector<NodeId> edge_set;
  std::vector<NodeId> vertex_set;
  std::vector<NodeId> clan_set;
  std::vector<NodeId> interaction_list;

  bool is_leaf() const { return children[0] == kNoNode; }
  Index size() const { return range.count; }
};

// Balanced quadtree. Nodes are stored level by level; within a level, a node
// with index k has children 4k..4k+3, so every node's indices are contiguous
// in `permutation`.
class ClusterTree {
 public:
  const std::vector<Point2D>& points() const { return points_; }
  const Box2D& root_box() const { return root_box_; }
  int depth() const { return depth_; }
  Index leaf_capacity() const { return leaf_capacity_; }
  bool relations_computed() const { return relations_computed_; }

  const std::vector<ClusterNode>& nodes() const { return nodes_; }
  const ClusterNode& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const ClusterNode& root() const { return nodes_.front(); }

  NodeId level_offset(int level) const;
  std::int64_t level_size(int level) const { return std::int64_t{1} << (2 * level); }
  NodeId node_at(int level, std::int64_t index_in_level) const {
    return static_cast<NodeId>(level_offset(level) + index_in_level);
  }

  // permutation[p] is the original point index stored at position p.
  const std::vector<Index>& permutation() const { return permutation_; }
  std::vector<Index> index_set(NodeId id) const;

  friend ClusterTree build_tree(std::vector<Point2D> points, const Box2D& root_box, Index n_max,
                                DepthRule rule);
  friend void compute_relations(ClusterTree& tree);

 private:
  std::vector<Point2D> points_;
  Box2D root_box_;
  int depth_ = 0;
  Index leaf_capacity_ = 1;
  bool relations_computed_ = false;
  std::vector<ClusterNode> nodes_;
  std::vector<Index> permutation_;
};

// Throws std::invalid_argument on empty input or a point outside root_box.
ClusterTree build_tree(std::vector<Point2D> points, const Box2D& root_box, Index n_max,
                       DepthRule rule = DepthRule::MaxOccupancy);

// Fills edge/vertex/clan sets and interaction lists.
void compute_relations(ClusterTree& tree);

// Same-level boxes sharing no boundary with the node. Quadratic in the level
// size, so it is derived on demand instead of being stored per node.
std::vector<NodeId> wellsep_set(const ClusterTree& tree, NodeId id);

inline ClusterTree build_annotated_tree(std::vector<Point2D> points, const Box2D& root_box,
                                        Index n_max, DepthRule rule = DepthRule::MaxOccupancy) {
  ClusterTree tree = build_tree(std::move(points), root_box, n_max, rule);
  compute_relations(tree);
  return tree;
}

// m x m tensor grid of Chebyshev (first kind) nodes, row-major with x fastest.
std::vector<Point2D> chebyshev_grid(int m, const Box2D& box);
std::vector<Point2D> chebyshev_grid(int m, double x_lo, double x_hi, double y_lo, double y_hi);

// unit_box() when it holds every point, otherwise the bounding square.
Box2D root_box_for(std::span<const Point2D> points);

std::vector<Point2D> uniform_random(Index n, const Box2D& box, std::uint64_t seed);

// n x n cell-centred grid over the box.
std::vector<Point2D> uniform_grid(int n, const Box2D& box);

// Two-column CSV (x,y), '#' starts a comment; throws std::runtime_error.
std::vector<Point2D> load_points_csv(const std::string& path);

}  // namespace h2d
