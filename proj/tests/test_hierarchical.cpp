#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "doctest.h"
#include "h2d/geometry.hpp"
#include "h2d/hierarchical.hpp"
#include "h2d/kernels.hpp"
#include "h2d/matvec.hpp"

using namespace h2d;

namespace {

template <Scalar T>
std::vector<T> random_vector(Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<T> x(static_cast<std::size_t>(n));
  for (auto& v : x) {
    if constexpr (is_complex_v<T>)
      v = T(u(rng), u(rng));
    else
      v = u(rng);
  }
  return x;
}

template <Scalar T>
double inf_norm(const std::vector<T>& v) {
  double m = 0.0;
  for (const auto& e : v) m = std::max(m, std::abs(e));
  return m;
}

template <Scalar T>
double rel_inf(const std::vector<T>& a, const std::vector<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m / inf_norm(b);
}

template <Scalar T>
double rel_2(const std::vector<T>& a, const std::vector<T>& b) {
  double d = 0.0, r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += abs2(a[i] - b[i]);
    r += abs2(b[i]);
  }
  return std::sqrt(d / r);
}

// Every ordered pair of permuted positions is covered exactly once.
template <Scalar T>
bool covers_once(const HierarchicalOperator<T>& op) {
  std::vector<unsigned char> hits(static_cast<std::size_t>(op.n * op.n), 0);
  auto mark = [&](const BlockSlot& s) {
    for (Index i = s.rows.offset; i < s.rows.end(); ++i)
      for (Index j = s.cols.offset; j < s.cols.end(); ++j) ++hits[static_cast<std::size_t>(i * op.n + j)];
  };
  for (const auto& d : op.dense) mark(d.slot);
  for (const auto& l : op.lowrank) mark(l.slot);
  return std::all_of(hits.begin(), hits.end(), [](unsigned char h) { return h == 1; });
}

const Format kFormats[] = {Format::Hodlr2d, Format::Hodlr, Format::HMatrix};

}  // namespace

TEST_CASE("HODLR2D on a 4x4 grid with one level") {
  auto tree = build_annotated_tree(uniform_grid(4, unit_box()), unit_box(), 4);
  REQUIRE(tree.depth() == 1);
  const auto plan = plan_hodlr2d(tree);
  int dense_self = 0, dense_edge = 0, low = 0;
  for (const auto& s : plan) {
    if (s.kind == BlockKind::LowRank) {
      ++low;
      CHECK(s.level == 1);
      CHECK(classify_relation(tree.node(s.owner).coord, tree.node(s.partner).coord) == Relation::Vertex);
    } else if (s.owner == s.partner) {
      ++dense_self;
    } else {
      ++dense_edge;
    }
  }
  CHECK(dense_self == 4);
  CHECK(dense_edge == 8);
  CHECK(low == 4);

  const auto op = build_hodlr2d<double>(tree, kernel_entries<double>(KernelSpec{KernelName::OneOverR, {}}, tree.points()));
  CHECK(op.n == 16);
  CHECK(covers_once(op));
}

TEST_CASE("partition coverage and block-count limits") {
  auto pts = uniform_random(900, unit_box(), 21);
  auto tree = build_annotated_tree(pts, unit_box(), 16);
  REQUIRE(tree.depth() >= 3);
  const auto entry = kernel_entries<double>(KernelSpec{KernelName::LogR, {}}, pts);

  SUBCASE("hodlr2d") {
    const auto op = build_hodlr2d<double>(tree, entry);
    CHECK(covers_once(op));
    std::map<NodeId, int> dense_per_node;
    for (const auto& d : op.dense) ++dense_per_node[d.slot.owner];
    for (const auto& [id, c] : dense_per_node) CHECK(c <= 5);
    for (const auto& l : op.lowrank) CHECK(l.slot.level >= 1);
  }
  SUBCASE("hmatrix") {
    const auto op = build_hmatrix<double>(tree, entry);
    CHECK(covers_once(op));
    std::map<NodeId, int> dense_per_node, low_per_node;
    for (const auto& d : op.dense) ++dense_per_node[d.slot.owner];
    for (const auto& l : op.lowrank) ++low_per_node[l.slot.owner];
    for (const auto& [id, c] : dense_per_node) CHECK(c <= 9);
    for (const auto& [id, c] : low_per_node) CHECK(c <= 27);
    for (const auto& l : op.lowrank) CHECK(l.slot.level >= 2);
  }
  SUBCASE("hodlr") {
    const auto op = build_hodlr<double>(pts, entry, 16);
    CHECK(covers_once(op));
  }
}

TEST_CASE("HODLR one-level shape") {
  auto pts = uniform_random(64, unit_box(), 2);
  const auto part = kd_partition(pts, 32);
  CHECK(part.depth == 1);
  const auto plan = plan_hodlr(part);
  int dense = 0, low = 0;
  for (const auto& s : plan) (s.kind == BlockKind::Dense ? dense : low)++;
  CHECK(dense == 2);
  CHECK(low == 2);
  // first split is on x at the median
  const auto& left = part.nodes[static_cast<std::size_t>(part.children[0][0])];
  CHECK(left.range.count == 32);
  double left_max = -2, right_min = 2;
  for (Index p = 0; p < 64; ++p) {
    const double x = pts[static_cast<std::size_t>(part.permutation[static_cast<std::size_t>(p)])].x;
    if (p < 32)
      left_max = std::max(left_max, x);
    else
      right_min = std::min(right_min, x);
  }
  CHECK(left_max <= right_min);
}

TEST_CASE("degenerate single-leaf operators") {
  auto pts = uniform_random(50, unit_box(), 8);
  const auto entry = kernel_entries<double>(KernelSpec{KernelName::OneOverR, {}}, pts);
  for (Format f : kFormats) {
    const auto op = build_operator<double>(f, pts, entry, 500);
    CHECK(op.depth == 0);
    REQUIRE(op.dense.size() == 1);
    CHECK(op.lowrank.empty());
    CHECK(op.dense[0].entries.size() == 2500);
    const auto rep = storage_report(op);
    CHECK(rep.compression_ratio == 1.0);
    CHECK(rep.r_m == 0);
  }
}

TEST_CASE("zero kernel gives a zero product") {
  auto pts = uniform_random(300, unit_box(), 4);
  const EntryFn<double> zero = [](Index, Index) { return 0.0; };
  const auto x = random_vector<double>(300, 1);
  for (Format f : kFormats) {
    const auto op = build_operator<double>(f, pts, zero, 20);
    for (double v : matvec<double>(op, x)) CHECK(v == 0.0);
    CHECK(storage_report(op).r_m == 0);
  }
}

TEST_CASE("matvec rejects wrong length") {
  auto pts = uniform_random(40, unit_box(), 4);
  const auto op = build_operator<double>(Format::Hodlr2d, pts,
                                         kernel_entries<double>(KernelSpec{KernelName::LogR, {}}, pts), 8);
  std::vector<double> x(39, 1.0);
  CHECK_THROWS_AS(matvec<double>(op, x), std::invalid_argument);
}

TEST_CASE("N=400 log kernel matvec against dense") {
  auto pts = uniform_random(400, unit_box(), 400);
  const auto entry = kernel_entries<double>(KernelSpec{KernelName::LogR, {}}, pts);
  const auto x = random_vector<double>(400, 7);
  const auto exact = dense_matvec<double>(entry, x);
  for (Format f : kFormats) {
    const auto op = build_operator<double>(f, pts, entry, 16);
    CHECK(op.depth >= 2);
    const double err = rel_inf(matvec<double>(op, x), exact);
    MESSAGE(to_string(f) << " rel inf err " << err);
    CHECK(err <= 1e-10);
  }
}

TEST_CASE("scatter coverage: columns of the dense matrix") {
  const double eps = 1e-12;
  auto pts = chebyshev_grid(24, unit_box());  // N = 576
  const Index n = static_cast<Index>(pts.size());
  const auto entry = kernel_entries<double>(KernelSpec{KernelName::OneOverR, {}}, pts);
  for (Format f : kFormats) {
    const auto op = build_operator<double>(f, pts, entry, 16, {eps});
    REQUIRE(op.depth >= 2);
    double worst = 0.0;
    std::vector<double> e(static_cast<std::size_t>(n), 0.0), col(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
      e[static_cast<std::size_t>(j)] = 1.0;
      const auto y = matvec<double>(op, e);
      for (Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = i == j ? 0.0 : entry(i, j);
      worst = std::max(worst, rel_inf(y, col));
      e[static_cast<std::size_t>(j)] = 0.0;
    }
    MESSAGE(to_string(f) << " worst column error " << worst);
    CHECK(worst <= 100 * eps);
  }
}

TEST_CASE("format agreement and linearity") {
  auto pts = uniform_random(1024, unit_box(), 1024);
  SUBCASE("real") {
    const auto entry = kernel_entries<double>(KernelSpec{KernelName::OneOverR, {}}, pts);
    const auto x = random_vector<double>(1024, 3), y = random_vector<double>(1024, 5);
    const auto exact = dense_matvec<double>(entry, x);
    for (Format f : kFormats) {
      const auto op = build_operator<double>(f, pts, entry, 32);
      const auto ax = matvec<double>(op, x);
      CHECK(rel_2(ax, exact) <= 1e-9);

      std::vector<double> s(x.size());
      for (std::size_t i = 0; i < s.size(); ++i) s[i] = x[i] + y[i];
      const auto as = matvec<double>(op, s), ay = matvec<double>(op, y);
      std::vector<double> sum(x.size());
      for (std::size_t i = 0; i < s.size(); ++i) sum[i] = ax[i] + ay[i];
      CHECK(rel_2(as, sum) <= 1e-12);
    }
  }
  SUBCASE("complex Hankel") {
    KernelSpec k{KernelName::Hankel0, {}};
    k.params.wavenumber = 5.0;
    const auto entry = kernel_entries<Complex>(k, pts);
    const auto x = random_vector<Complex>(1024, 9);
    const auto exact = dense_matvec<Complex>(entry, x);
    for (Format f : kFormats) {
      const auto op = build_operator<Complex>(f, pts, entry, 32);
      CHECK(rel_2(matvec<Complex>(op, x), exact) <= 1e-9);
    }
  }
}

TEST_CASE("builds are deterministic") {
  auto pts = uniform_random(700, unit_box(), 70);
  const auto entry = kernel_entries<double>(KernelSpec{KernelName::ThinPlate, {}}, pts);
  for (Format f : kFormats) {
    const auto a = build_operator<double>(f, pts, entry, 24);
    const auto b = build_operator<double>(f, pts, entry, 24);
    REQUIRE(a.lowrank.size() == b.lowrank.size());
    for (std::size_t i = 0; i < a.lowrank.size(); ++i) {
      CHECK(a.lowrank[i].block.u == b.lowrank[i].block.u);
      CHECK(a.lowrank[i].block.v == b.lowrank[i].block.v);
    }
  }
}

TEST_CASE("H-matrix admissibility") {
  const double a = 0.5;
  const Box2D c{{0.25, 0.25}, a / 2};
  CHECK(hmatrix_admissible(c, Box2D{{0.25 + 2 * a, 0.25}, a / 2}));       // one box apart: equality
  CHECK_FALSE(hmatrix_admissible(c, Box2D{{0.25 + a, 0.25}, a / 2}));     // shares an edge
  CHECK_FALSE(hmatrix_admissible(c, Box2D{{0.25 + a, 0.25 + a}, a / 2})); // shares a vertex
  CHECK(hmatrix_admissible(c, Box2D{{0.25 + 2 * a, 0.25 + 2 * a}, a / 2}));
}

TEST_CASE("storage report accounting") {
  auto pts = uniform_random(600, unit_box(), 60);
  const auto entry = kernel_entries<double>(KernelSpec{KernelName::LogR, {}}, pts);
  for (Format f : kFormats) {
    const auto op = build_operator<double>(f, pts, entry, 20);
    const auto rep = storage_report(op);
    std::int64_t scalars = 0;
    Index r_m = 0;
    for (const auto& d : op.dense) scalars += static_cast<std::int64_t>(d.entries.size());
    for (const auto& l : op.lowrank) {
      scalars += l.block.stored_scalars();
      r_m = std::max(r_m, l.block.rank);
    }
    CHECK(rep.memory_scalars == scalars);
    CHECK(rep.r_m == r_m);
    CHECK(rep.compression_ratio == doctest::Approx(scalars / 360000.0));
    CHECK(rep.dense_blocks == static_cast<std::int64_t>(op.dense.size()));
    CHECK(rep.lowrank_blocks == static_cast<std::int64_t>(op.lowrank.size()));
    CHECK_FALSE(op.any_truncated());
  }
}

TEST_CASE("format names") {
  for (Format f : kFormats) CHECK(parse_format(to_string(f)) == f);
  CHECK_FALSE(parse_format("h2").has_value());
}

TEST_CASE("unannotated tree is rejected") {
  auto pts = uniform_random(100, unit_box(), 1);
  auto tree = build_tree(pts, unit_box(), 10);
  CHECK_THROWS_AS(build_hodlr2d<double>(tree, kernel_entries<double>(KernelSpec{KernelName::LogR, {}}, pts)),
                  std::invalid_argument);
}
