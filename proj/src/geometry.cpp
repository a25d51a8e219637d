#include "h2d/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace h2d {

namespace {

constexpr int kMaxDepth = 10;

// Child slot for the bit pair (bx, by): counter-clockwise from bottom-left.
constexpr int child_slot(int bx, int by) {
  if (by == 0) return bx == 0 ? 0 : 1;
  return bx == 1 ? 2 : 3;
}

constexpr std::array<std::array<int, 2>, 4> kSlotBits{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};

std::int64_t index_from_coord(int level, std::int64_t ix, std::int64_t iy) {
  std::int64_t index = 0;
  for (int b = level - 1; b >= 0; --b) {
    const int bx = static_cast<int>((ix >> b) & 1);
    const int by = static_cast<int>((iy >> b) & 1);
    index = index * 4 + child_slot(bx, by);
  }
  return index;
}

GridCoord coord_from_index(int level, std::int64_t index) {
  GridCoord c{level, 0, 0};
  for (int b = 0; b < level; ++b) {
    const auto slot = static_cast<std::size_t>((index >> (2 * b)) & 3);
    c.ix |= std::int64_t{kSlotBits[slot][0]} << b;
    c.iy |= std::int64_t{kSlotBits[slot][1]} << b;
  }
  return c;
}

// Cell of p along one axis at the given level; half-open cells, the global
// upper boundary belongs to the last cell.
std::int64_t cell_along(double v, double lo, double width, int level) {
  const std::int64_t cells = std::int64_t{1} << level;
  const auto c = static_cast<std::int64_t>(std::floor((v - lo) / width * static_cast<double>(cells)));
  return std::clamp<std::int64_t>(c, 0, cells - 1);
}

std::vector<std::int64_t> leaf_keys(const std::vector<Point2D>& pts, const Box2D& box, int level) {
  std::vector<std::int64_t> keys(pts.size());
  const double width = 2.0 * box.half_width;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto ix = cell_along(pts[i].x, box.x_lo(), width, level);
    const auto iy = cell_along(pts[i].y, box.y_lo(), width, level);
    keys[i] = index_from_coord(level, ix, iy);
  }
  return keys;
}

Index max_occupancy(std::vector<std::int64_t> keys) {
  std::sort(keys.begin(), keys.end());
  Index best = 0;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    best = std::max<Index>(best, static_cast<Index>(j - i));
    i = j;
  }
  return best;
}

int choose_depth(const std::vector<Point2D>& pts, const Box2D& box, Index n_max, DepthRule rule) {
  const auto n = static_cast<Index>(pts.size());
  for (int level = 0; level <= kMaxDepth; ++level) {
    if (rule == DepthRule::MeanOccupancy) {
      const Index leaves = Index{1} << (2 * level);
      if ((n + leaves - 1) / leaves <= n_max) return level;
    } else if (max_occupancy(leaf_keys(pts, box, level)) <= n_max) {
      return level;
    }
  }
  throw std::invalid_argument("build_tree: more than " + std::to_string(n_max) +
                              " points share a cell at depth " + std::to_string(kMaxDepth));
}

}  // namespace

bool Box2D::contains(const Point2D& p) const {
  return p.x >= x_lo() && p.x <= x_hi() && p.y >= y_lo() && p.y <= y_hi();
}

const char* to_string(Relation r) {
  switch (r) {
    case Relation::Self: return "self";
    case Relation::Edge: return "edge";
    case Relation::Vertex: return "vertex";
    case Relation::WellSeparated: return "wellsep";
  }
  return "?";
}

Relation classify_relation(const GridCoord& a, const GridCoord& b) {
  if (a.level != b.level) throw std::invalid_argument("classify_relation: boxes on different levels");
  const auto dx = std::abs(a.ix - b.ix);
  const auto dy = std::abs(a.iy - b.iy);
  if (dx == 0 && dy == 0) return Relation::Self;
  if (dx > 1 || dy > 1) return Relation::WellSeparated;
  return dx + dy == 1 ? Relation::Edge : Relation::Vertex;
}

Relation classify_relation(const Box2D& a, const Box2D& b) {
  if (!(a.half_width > 0.0) || a.half_width != b.half_width)
    throw std::invalid_argument("classify_relation: boxes must have identical positive half widths");
  // Offsets in units of the box width must be whole numbers.
  const double width = 2.0 * a.half_width;
  const double fx = (b.center.x - a.center.x) / width;
  const double fy = (b.center.y - a.center.y) / width;
  const double rx = std::round(fx);
  const double ry = std::round(fy);
  if (std::abs(fx - rx) > 1e-9 || std::abs(fy - ry) > 1e-9)
    throw std::invalid_argument("classify_relation: boxes are not cells of a common grid");
  return classify_relation(GridCoord{0, 0, 0},
                           GridCoord{0, static_cast<std::int64_t>(rx), static_cast<std::int64_t>(ry)});
}

NodeId ClusterTree::level_offset(int level) const {
  // (4^level - 1) / 3 nodes precede the level.
  return static_cast<NodeId>(((std::int64_t{1} << (2 * level)) - 1) / 3);
}

std::vector<Index> ClusterTree::index_set(NodeId id) const {
  const auto& r = node(id).range;
  return {permutation_.begin() + r.offset, permutation_.begin() + r.end()};
}

ClusterTree build_tree(std::vector<Point2D> points, const Box2D& root_box, Index n_max,
                       DepthRule rule) {
  if (points.empty()) throw std::invalid_argument("build_tree: empty point list");
  if (n_max < 1) throw std::invalid_argument("build_tree: n_max must be >= 1");
  if (!(root_box.half_width > 0.0)) throw std::invalid_argument("build_tree: root box half width must be positive");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !root_box.contains(p))
      throw std::invalid_argument("build_tree: point " + std::to_string(i) + " lies outside the root box");
  }

  ClusterTree tree;
  tree.root_box_ = root_box;
  tree.leaf_capacity_ = n_max;
  tree.depth_ = choose_depth(points, root_box, n_max, rule);
  const int depth = tree.depth_;

  const auto keys = leaf_keys(points, root_box, depth);
  tree.permutation_.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) tree.permutation_[i] = static_cast<Index>(i);
  std::stable_sort(tree.permutation_.begin(), tree.permutation_.end(),
                   [&](Index a, Index b) { return keys[static_cast<std::size_t>(a)] < keys[static_cast<std::size_t>(b)]; });

  const std::int64_t n_leaves = std::int64_t{1} << (2 * depth);
  std::vector<Index> leaf_start(static_cast<std::size_t>(n_leaves + 1), 0);
  for (auto k : keys) ++leaf_start[static_cast<std::size_t>(k + 1)];
  for (std::size_t k = 1; k < leaf_start.size(); ++k) leaf_start[k] += leaf_start[k - 1];

  const std::int64_t total = (4 * n_leaves - 1) / 3;
  tree.nodes_.resize(static_cast<std::size_t>(total));
  for (int level = 0; level <= depth; ++level) {
    const std::int64_t count = std::int64_t{1} << (2 * level);
    const std::int64_t span = std::int64_t{1} << (2 * (depth - level));  // leaves per node
    const double width = 2.0 * root_box.half_width / static_cast<double>(std::int64_t{1} << level);
    for (std::int64_t k = 0; k < count; ++k) {
      const NodeId id = tree.node_at(level, k);
      auto& nd = tree.nodes_[static_cast<std::size_t>(id)];
      nd.id = id;
      nd.level = level;
      nd.index_in_level = k;
      nd.coord = coord_from_index(level, k);
      nd.box = Box2D{{root_box.x_lo() + (static_cast<double>(nd.coord.ix) + 0.5) * width,
                      root_box.y_lo() + (static_cast<double>(nd.coord.iy) + 0.5) * width},
                     0.5 * width};
      const auto first = static_cast<std::size_t>(k * span);
      const auto last = static_cast<std::size_t>((k + 1) * span);
      nd.range = IndexRange{leaf_start[first], leaf_start[last] - leaf_start[first]};
      if (level > 0) nd.parent = tree.node_at(level - 1, k / 4);
      if (level < depth)
        for (int c = 0; c < 4; ++c) nd.children[static_cast<std::size_t>(c)] = tree.node_at(level + 1, 4 * k + c);
    }
  }
  tree.points_ = std::move(points);
  return tree;
}

void compute_relations(ClusterTree& tree) {
  for (int level = 1; level <= tree.depth_; ++level) {
    const std::int64_t side = std::int64_t{1} << level;
    const std::int64_t count = side * side;
    for (std::int64_t k = 0; k < count; ++k) {
      auto& nd = tree.nodes_[static_cast<std::size_t>(tree.node_at(level, k))];
      nd.edge_set.clear();
      nd.vertex_set.clear();
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          const auto ix = nd.coord.ix + dx;
          const auto iy = nd.coord.iy + dy;
          if ((dx == 0 && dy == 0) || ix < 0 || iy < 0 || ix >= side || iy >= side) continue;
          const NodeId other = tree.node_at(level, index_from_coord(level, ix, iy));
          (dx == 0 || dy == 0 ? nd.edge_set : nd.vertex_set).push_back(other);
        }
      }
      std::sort(nd.edge_set.begin(), nd.edge_set.end());
      std::sort(nd.vertex_set.begin(), nd.vertex_set.end());
    }
  }
  for (int level = 1; level <= tree.depth_; ++level) {
    const std::int64_t count = std::int64_t{1} << (2 * level);
    for (std::int64_t k = 0; k < count; ++k) {
      auto& nd = tree.nodes_[static_cast<std::size_t>(tree.node_at(level, k))];
      const auto& parent = tree.node(nd.parent);
      nd.clan_set.clear();
      for (NodeId sib : parent.children)
        if (sib != nd.id) nd.clan_set.push_back(sib);
      for (NodeId pe : parent.edge_set)
        for (NodeId c : tree.node(pe).children) nd.clan_set.push_back(c);
      std::sort(nd.clan_set.begin(), nd.clan_set.end());

      nd.interaction_list.clear();
      for (NodeId c : nd.clan_set) {
        const auto rel = classify_relation(nd.coord, tree.node(c).coord);
        if (rel == Relation::Vertex || rel == Relation::WellSeparated) nd.interaction_list.push_back(c);
      }
    }
  }
  tree.relations_computed_ = true;
}

std::vector<NodeId> wellsep_set(const ClusterTree& tree, NodeId id) {
  const auto& nd = tree.node(id);
  std::vector<NodeId> out;
  const std::int64_t count = tree.level_size(nd.level);
  for (std::int64_t k = 0; k < count; ++k) {
    const NodeId other = tree.node_at(nd.level, k);
    if (classify_relation(nd.coord, tree.node(other).coord) == Relation::WellSeparated) out.push_back(other);
  }
  return out;
}

std::vector<Point2D> chebyshev_grid(int m, double x_lo, double x_hi, double y_lo, double y_hi) {
  if (m < 1) throw std::invalid_argument("chebyshev_grid: m must be >= 1");
  std::vector<double> t(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    // -cos((k + 1/2) pi / m), written as a sine so the nodes are exactly symmetric.
    t[static_cast<std::size_t>(k)] = std::sin(static_cast<double>(2 * k + 1 - m) * std::numbers::pi / (2.0 * m));
  }
  const double cx = 0.5 * (x_lo + x_hi), hx = 0.5 * (x_hi - x_lo);
  const double cy = 0.5 * (y_lo + y_hi), hy = 0.5 * (y_hi - y_lo);
  std::vector<Point2D> pts;
  pts.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      pts.push_back({cx + hx * t[static_cast<std::size_t>(i)], cy + hy * t[static_cast<std::size_t>(j)]});
  return pts;
}

std::vector<Point2D> chebyshev_grid(int m, const Box2D& box) {
  return chebyshev_grid(m, box.x_lo(), box.x_hi(), box.y_lo(), box.y_hi());
}

Box2D root_box_for(std::span<const Point2D> points) {
  const Box2D unit = unit_box();
  if (std::all_of(points.begin(), points.end(), [&](const Point2D& p) { return unit.contains(p); })) return unit;
  double xlo = points[0].x, xhi = xlo, ylo = points[0].y, yhi = ylo;
  for (const auto& p : points) {
    xlo = std::min(xlo, p.x);
    xhi = std::max(xhi, p.x);
    ylo = std::min(ylo, p.y);
    yhi = std::max(yhi, p.y);
  }
  const double half = 0.5 * std::max(xhi - xlo, yhi - ylo);
  return Box2D{{0.5 * (xlo + xhi), 0.5 * (ylo + yhi)}, half > 0.0 ? half * (1.0 + 1e-12) : 1.0};
}

std::vector<Point2D> uniform_random(Index n, const Box2D& box, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("uniform_random: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(box.x_lo(), box.x_hi());
  std::uniform_real_distribution<double> uy(box.y_lo(), box.y_hi());
  std::vector<Point2D> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) {
    p.x = ux(rng);
    p.y = uy(rng);
  }
  return pts;
}

std::vector<Point2D> uniform_grid(int n, const Box2D& box) {
  if (n < 1) throw std::invalid_argument("uniform_grid: n must be >= 1");
  const double h = 2.0 * box.half_width / n;
  std::vector<Point2D> pts;
  pts.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) pts.push_back({box.x_lo() + (i + 0.5) * h, box.y_lo() + (j + 0.5) * h});
  return pts;
}

std::vector<Point2D> load_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open point file: " + path);
  std::vector<Point2D> pts;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    double x = 0.0, y = 0.0;
    std::string rest;
    if (!(fields >> x >> y) || (fields >> rest))
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected two columns x,y");
    pts.push_back({x, y});
  }
  return pts;
}

}  // namespace h2d
