#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "doctest.h"
#include "h2d/geometry.hpp"

using namespace h2d;

namespace {

Box2D square(double xlo, double ylo, double w) { return Box2D{{xlo + w / 2, ylo + w / 2}, w / 2}; }

std::set<NodeId> as_set(const std::vector<NodeId>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("classify_relation on unit squares") {
  const Box2D a = square(0, 0, 1);
  CHECK(classify_relation(a, a) == Relation::Self);
  CHECK(classify_relation(a, square(1, 0, 1)) == Relation::Edge);
  CHECK(classify_relation(a, square(1, 1, 1)) == Relation::Vertex);
  CHECK(classify_relation(a, square(3, 0, 1)) == Relation::WellSeparated);
  CHECK(classify_relation(a, square(2, 2, 1)) == Relation::WellSeparated);
  CHECK_THROWS_AS(classify_relation(a, square(1, 0, 2)), std::invalid_argument);
}

TEST_CASE("classify_relation is symmetric on grid coordinates") {
  for (int ax = 0; ax < 4; ++ax)
    for (int ay = 0; ay < 4; ++ay)
      for (int bx = 0; bx < 4; ++bx)
        for (int by = 0; by < 4; ++by) {
          GridCoord a{2, ax, ay}, b{2, bx, by};
          CHECK(classify_relation(a, b) == classify_relation(b, a));
        }
}

TEST_CASE("build_tree depth and occupancy") {
  SUBCASE("one point per quadrant") {
    auto t = build_tree({{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}, unit_box(), 1);
    CHECK(t.depth() == 1);
    for (int k = 0; k < 4; ++k) {
      const auto& leaf = t.node(t.node_at(1, k));
      REQUIRE(leaf.size() == 1);
      // counter-clockwise numbering from bottom-left
      CHECK(t.index_set(leaf.id).front() == k);
    }
  }
  SUBCASE("single point is a leaf root") {
    auto t = build_tree({{0.1, 0.2}}, unit_box(), 500);
    CHECK(t.depth() == 0);
    CHECK(t.root().is_leaf());
  }
  SUBCASE("100x100 Chebyshev grid") {
    // Brute-force occupancy count: the fullest level-3 cell (a corner) holds
    // 23^2 = 529 points, level 4 holds at most 256; the mean rule stops at 3.
    auto pts = chebyshev_grid(100, unit_box());
    CHECK(build_tree(pts, unit_box(), 500).depth() == 4);
    CHECK(build_tree(pts, unit_box(), 500, DepthRule::MeanOccupancy).depth() == 3);
    auto t = build_tree(pts, unit_box(), 529);
    CHECK(t.depth() == 3);
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(build_tree({}, unit_box(), 1), std::invalid_argument);
    CHECK_THROWS_AS(build_tree({{0, 0}}, unit_box(), 0), std::invalid_argument);
    try {
      build_tree({{0, 0}, {0.5, 0.5}, {1.5, 0}}, unit_box(), 1);
      FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
  }
}

TEST_CASE("boundary points go to the half-open child, top/right edge closed") {
  auto t = build_tree({{0, 0}, {1, 1}, {-1, -1}, {0, 1}}, unit_box(), 1, DepthRule::MeanOccupancy);
  REQUIRE(t.depth() == 1);
  // x = 0 and y = 0 belong to the upper halves; x = 1 and y = 1 stay in the box
  CHECK(t.index_set(t.node_at(1, 2)) == std::vector<Index>{0, 1, 3});
  CHECK(t.index_set(t.node_at(1, 0)) == std::vector<Index>{2});
  CHECK(t.index_set(t.node_at(1, 1)).empty());
  CHECK(t.index_set(t.node_at(1, 3)).empty());
}

TEST_CASE("index conservation and parent/child unions") {
  auto pts = uniform_random(3000, unit_box(), 11);
  auto t = build_tree(pts, unit_box(), 40);
  std::vector<Index> perm = t.permutation();
  std::sort(perm.begin(), perm.end());
  for (Index i = 0; i < static_cast<Index>(perm.size()); ++i) REQUIRE(perm[static_cast<std::size_t>(i)] == i);
  for (const auto& nd : t.nodes()) {
    CHECK(nd.size() <= (nd.is_leaf() ? 40 : 3000));
    if (nd.is_leaf()) {
      CHECK(nd.level == t.depth());
      for (Index p : t.index_set(nd.id)) CHECK(nd.box.contains(pts[static_cast<std::size_t>(p)]));
      continue;
    }
    std::vector<Index> kids;
    for (NodeId c : nd.children) {
      auto s = t.index_set(c);
      kids.insert(kids.end(), s.begin(), s.end());
    }
    CHECK(kids == t.index_set(nd.id));
  }
}

TEST_CASE("level-1 relations") {
  auto t = build_annotated_tree({{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}, unit_box(), 1);
  const auto& n0 = t.node(t.node_at(1, 0));
  CHECK(as_set(n0.edge_set) == std::set<NodeId>{t.node_at(1, 1), t.node_at(1, 3)});
  CHECK(as_set(n0.vertex_set) == std::set<NodeId>{t.node_at(1, 2)});
  CHECK(n0.interaction_list == std::vector<NodeId>{t.node_at(1, 2)});
  CHECK(n0.clan_set.size() == 3);
  CHECK(1 + n0.edge_set.size() <= 5);
  CHECK(t.root().interaction_list.empty());
}

TEST_CASE("relation invariants on a depth-4 tree") {
  auto t = build_annotated_tree(uniform_grid(64, unit_box()), unit_box(), 16);
  REQUIRE(t.depth() == 4);
  for (const auto& nd : t.nodes()) {
    if (nd.level == 0) continue;
    CHECK(nd.edge_set.size() <= 4);
    CHECK(nd.vertex_set.size() <= 4);
    CHECK(nd.clan_set.size() <= 19);
    CHECK(nd.interaction_list.size() <= 15);
    const auto clan = as_set(nd.clan_set);
    for (NodeId c : nd.interaction_list) {
      CHECK(clan.count(c) == 1);
      const auto rel = classify_relation(nd.coord, t.node(c).coord);
      CHECK((rel == Relation::Vertex || rel == Relation::WellSeparated));
    }
    // {C}, E, V, W partition the level
    const auto wells = wellsep_set(t, nd.id);
    std::vector<NodeId> all{nd.id};
    all.insert(all.end(), nd.edge_set.begin(), nd.edge_set.end());
    all.insert(all.end(), nd.vertex_set.begin(), nd.vertex_set.end());
    all.insert(all.end(), wells.begin(), wells.end());
    CHECK(all.size() == static_cast<std::size_t>(t.level_size(nd.level)));
    CHECK(as_set(all).size() == all.size());
    for (NodeId e : nd.edge_set) {
      const auto& other = t.node(e).edge_set;
      CHECK(std::find(other.begin(), other.end(), nd.id) != other.end());
    }
    for (NodeId v : nd.vertex_set) {
      const auto& other = t.node(v).vertex_set;
      CHECK(std::find(other.begin(), other.end(), nd.id) != other.end());
    }
  }
  // interior level-3 nodes (parent with four edge sharers) hit the maximum
  std::size_t biggest = 0;
  for (const auto& nd : t.nodes())
    if (nd.level == 3) biggest = std::max(biggest, nd.interaction_list.size());
  CHECK(biggest == 15);
}

TEST_CASE("chebyshev_grid") {
  auto one = chebyshev_grid(1, unit_box());
  REQUIRE(one.size() == 1);
  CHECK(one[0].x == doctest::Approx(0.0));
  CHECK(one[0].y == doctest::Approx(0.0));

  auto two = chebyshev_grid(2, unit_box());
  REQUIRE(two.size() == 4);
  const double r = 1.0 / std::sqrt(2.0);
  for (const auto& p : two) {
    CHECK(std::abs(p.x) == doctest::Approx(r).epsilon(1e-15));
    CHECK(std::abs(p.y) == doctest::Approx(r).epsilon(1e-15));
  }
  // x runs fastest
  CHECK(two[0].x < two[1].x);
  CHECK(two[0].y == two[1].y);

  auto big = chebyshev_grid(100, unit_box());
  CHECK(big.size() == 10000);
  for (const auto& p : big) CHECK((std::abs(p.x) < 1.0 && std::abs(p.y) < 1.0));
}

TEST_CASE("uniform_random") {
  CHECK(uniform_random(5, unit_box(), 7).size() == 5);
  auto a = uniform_random(5, unit_box(), 7), b = uniform_random(5, unit_box(), 7);
  for (int i = 0; i < 5; ++i) CHECK((a[i].x == b[i].x && a[i].y == b[i].y));

  auto pts = uniform_random(100000, unit_box(), 3);
  int quad[4] = {0, 0, 0, 0};
  for (const auto& p : pts) {
    CHECK(unit_box().contains(p));
    ++quad[(p.x >= 0) + 2 * (p.y >= 0)];
  }
  // binomial(n, 1/4): sigma = sqrt(n * 3/16)
  const double sigma = std::sqrt(100000 * 3.0 / 16.0);
  for (int q : quad) CHECK(std::abs(q - 25000.0) <= 3 * sigma);
}

TEST_CASE("root_box_for") {
  std::vector<Point2D> inside{{0.5, 0.5}, {-1, 1}};
  CHECK(root_box_for(inside).half_width == 1.0);
  std::vector<Point2D> wide{{0, 0}, {4, 1}};
  const auto b = root_box_for(wide);
  for (const auto& p : wide) CHECK(b.contains(p));
}

TEST_CASE("load_points_csv") {
  const std::string path = "test_points.csv";
  {
    std::ofstream f(path);
    f << "# x,y\n0.5,0.25\n\n-1 1\n";
  }
  auto pts = load_points_csv(path);
  REQUIRE(pts.size() == 2);
  CHECK(pts[1].x == -1.0);
  {
    std::ofstream f(path);
    f << "0.5,abc\n";
  }
  CHECK_THROWS_AS(load_points_csv(path), std::runtime_error);
  std::remove(path.c_str());
  CHECK_THROWS_WITH_AS(load_points_csv("definitely_missing.csv"), doctest::Contains("definitely_missing.csv"),
                       std::runtime_error);
}
