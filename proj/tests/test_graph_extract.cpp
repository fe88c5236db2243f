#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "test_support.hpp"
#include "vessel/graph_extract.hpp"
#include "vessel/thinning.hpp"

using namespace vessel;
using testing_support::TestWorkspace;

namespace {

using VoxelSet = std::set<std::int64_t>;

// Graph described purely by voxel sets, so ids do not matter.
struct ShapeGraph {
  std::multiset<VoxelSet> nodes;
  // (node voxels at a, node voxels at b, run voxels); endpoints sorted.
  std::multiset<std::tuple<VoxelSet, VoxelSet, VoxelSet>> edges;
};

int neighbors(const oracle::Grid& g, Index3 p) {
  int n = 0;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) n += (dx || dy || dz) && g.at(p.x + dx, p.y + dy, p.z + dz);
  return n;
}

// Whole-volume flood-fill construction of the same graph.
ShapeGraph oracle_graph(const oracle::Grid& g) {
  const Dims d = g.dims;
  std::vector<int> cls(g.v.size(), -1);
  for (std::int64_t i = 0; i < d.voxel_count(); ++i)
    if (g.v[i]) {
      const int n = neighbors(g, d.unlinear(i));
      cls[i] = n < 2 ? 0 : n == 2 ? 1 : 2;
    }
  auto [lab, n] = oracle::label_components(
      d, true, [&](std::int64_t i) { return cls[i] >= 0; }, [&](std::int64_t a, std::int64_t b) { return cls[a] == cls[b]; });
  std::vector<VoxelSet> comp(n);
  std::vector<int> comp_cls(n);
  for (std::int64_t i = 0; i < d.voxel_count(); ++i)
    if (lab[i] >= 0) {
      comp[lab[i]].insert(i);
      comp_cls[lab[i]] = cls[i];
    }
  ShapeGraph out;
  std::map<std::int64_t, int> node_of;  // voxel -> component
  for (int c = 0; c < n; ++c)
    if (comp_cls[c] != 1) {
      out.nodes.insert(comp[c]);
      for (auto v : comp[c]) node_of[v] = c;
    }
  auto adjacent_nodes = [&](std::int64_t v) {
    std::vector<std::pair<double, int>> r;
    const Index3 p = d.unlinear(v);
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const Index3 q{p.x + dx, p.y + dy, p.z + dz};
          if ((!dx && !dy && !dz) || !d.contains(q)) continue;
          auto it = node_of.find(d.linear(q));
          if (it != node_of.end()) r.push_back({double(dx * dx + dy * dy + dz * dz), it->second});
        }
    std::sort(r.begin(), r.end());
    return r;
  };
  for (int c = 0; c < n; ++c) {
    if (comp_cls[c] != 1) continue;
    std::vector<std::int64_t> tips;
    for (auto v : comp[c]) {
      int k = 0;
      const Index3 p = d.unlinear(v);
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const Index3 q{p.x + dx, p.y + dy, p.z + dz};
            if ((dx || dy || dz) && d.contains(q) && comp[c].count(d.linear(q))) ++k;
          }
      if (k < 2) tips.push_back(v);
    }
    if (tips.empty()) {
      const auto anchor = *comp[c].begin();
      out.nodes.insert({anchor});
      VoxelSet rest = comp[c];
      rest.erase(anchor);
      out.edges.insert({{anchor}, {anchor}, rest});
      continue;
    }
    int a, b;
    if (comp[c].size() == 1) {
      auto r = adjacent_nodes(tips[0]);
      a = r.at(0).second;
      b = r.at(1).second;
    } else {
      a = adjacent_nodes(tips.front()).at(0).second;
      b = adjacent_nodes(tips.back()).at(0).second;
    }
    auto ea = comp[a], eb = comp[b];
    if (eb < ea) std::swap(ea, eb);
    out.edges.insert({ea, eb, comp[c]});
  }
  // Direct end-to-branch contacts.
  for (int c = 0; c < n; ++c) {
    if (comp_cls[c] != 0) continue;
    for (auto v : comp[c]) {
      for (auto [d2, other] : adjacent_nodes(v)) {
        if (other == c) continue;
        auto ea = comp[c], eb = comp[other];
        if (eb < ea) std::swap(ea, eb);
        out.edges.insert({ea, eb, {}});
        break;
      }
    }
  }
  return out;
}

ShapeGraph shape_of(const ProtoVesselGraph& pg, const Dims& d) {
  ShapeGraph out;
  std::map<std::uint32_t, VoxelSet> nodes;
  for (const auto& n : pg.nodes) {
    VoxelSet s;
    for (auto& v : n.voxels) s.insert(d.linear(v));
    nodes[n.id] = s;
    out.nodes.insert(s);
  }
  for (const auto& e : pg.edges) {
    VoxelSet run;
    for (auto& v : e.source_voxels) run.insert(d.linear(v));
    auto ea = nodes.at(e.a), eb = nodes.at(e.b);
    if (eb < ea) std::swap(ea, eb);
    out.edges.insert({ea, eb, run});
  }
  return out;
}

oracle::Grid line_grid(std::initializer_list<std::array<int, 3>> pts, Dims d) {
  oracle::Grid g(d);
  for (auto& p : pts) g.set(p[0], p[1], p[2]);
  return g;
}

}  // namespace

TEST(GraphExtract, ClassifiesByNeighborCount) {
  EXPECT_EQ(classify(0), SkeletonClass::end);
  EXPECT_EQ(classify(1), SkeletonClass::end);
  EXPECT_EQ(classify(2), SkeletonClass::regular);
  EXPECT_EQ(classify(3), SkeletonClass::branch);
}

TEST(GraphExtract, StraightLine) {
  TestWorkspace t;
  oracle::Grid g({14, 5, 5});
  for (int x = 2; x < 12; ++x) g.set(x, 2, 2);
  auto v = oracle::to_volume(t.ws, g, {0.5, 1, 1});
  const auto pg = extract_proto_graph(t.ws, v);
  ASSERT_EQ(pg.nodes.size(), 2u);
  ASSERT_EQ(pg.edges.size(), 1u);
  const auto& e = pg.edges[0];
  EXPECT_EQ(e.centerline.size(), 8u);
  EXPECT_EQ(e.source_voxels.front(), (Index3{3, 2, 2}));
  EXPECT_EQ(e.source_voxels.back(), (Index3{10, 2, 2}));
  EXPECT_DOUBLE_EQ(e.centerline.front().x, 1.5);
  EXPECT_DOUBLE_EQ(e.centerline.back().x, 5.0);
  EXPECT_EQ(pg.node(e.a).voxels.front(), (Index3{2, 2, 2}));
  EXPECT_EQ(pg.node(e.b).voxels.front(), (Index3{11, 2, 2}));
  EXPECT_DOUBLE_EQ(pg.node(e.a).pos.x, 1.0);
}

TEST(GraphExtract, YJunction) {
  TestWorkspace t;
  oracle::Grid g({21, 21, 3});
  const int c = 10;
  g.set(c, c, 1);
  for (int i = 1; i <= 8; ++i) {
    g.set(c - i, c, 1);      // left arm
    g.set(c + i, c + i, 1);  // diagonal arm
    g.set(c + i, c - i, 1);  // other diagonal arm
  }
  auto v = oracle::to_volume(t.ws, g);
  const auto pg = extract_proto_graph(t.ws, v);
  EXPECT_EQ(pg.nodes.size(), 4u);
  EXPECT_EQ(pg.edges.size(), 3u);
  int branches = 0, ends = 0;
  for (const auto& n : pg.nodes) {
    branches += n.kind == NodeKind::branch;
    ends += n.kind == NodeKind::end;
  }
  EXPECT_EQ(branches, 1);
  EXPECT_EQ(ends, 3);
  const auto deg = pg.degrees();
  EXPECT_EQ(std::accumulate(deg.begin(), deg.end(), 0), 6);
  EXPECT_EQ(shape_of(pg, g.dims).edges, oracle_graph(g).edges);
}

TEST(GraphExtract, ClosedLoopGetsSyntheticNode) {
  TestWorkspace t;
  auto g = line_grid({{2, 2, 2}, {3, 2, 2}, {4, 3, 2}, {4, 4, 2}, {3, 5, 2}, {2, 5, 2}, {1, 4, 2}, {1, 3, 2}},
                     {7, 8, 5});
  auto v = oracle::to_volume(t.ws, g);
  const auto pg = extract_proto_graph(t.ws, v);
  ASSERT_EQ(pg.nodes.size(), 1u);
  ASSERT_EQ(pg.edges.size(), 1u);
  EXPECT_EQ(pg.nodes[0].kind, NodeKind::loop);
  EXPECT_EQ(pg.nodes[0].voxels, (std::vector<Index3>{{2, 2, 2}}));
  EXPECT_TRUE(pg.edges[0].self_loop());
  EXPECT_EQ(pg.edges[0].centerline.size(), 7u);
  EXPECT_EQ(pg.degree(pg.nodes[0].id), 2);
}

TEST(GraphExtract, EndTouchingBranchGetsOnePointEdge) {
  TestWorkspace t;
  // Branch voxel B with two arms leaving downwards and a single voxel on top.
  oracle::Grid g({12, 9, 9});
  g.set(6, 4, 5);
  g.set(6, 4, 6);
  for (int i = 1; i <= 4; ++i) {
    g.set(6 - i, 4, 5 - i);
    g.set(6 + i, 4, 5 - i);
  }
  auto v = oracle::to_volume(t.ws, g);
  const auto pg = extract_proto_graph(t.ws, v);
  ASSERT_EQ(pg.nodes.size(), 4u);
  ASSERT_EQ(pg.edges.size(), 3u);
  const auto& spur = pg.edges.back();
  EXPECT_TRUE(spur.source_voxels.empty());
  ASSERT_EQ(spur.centerline.size(), 1u);
  EXPECT_EQ(spur.centerline[0], (Vec3{6, 4, 6}));
  EXPECT_EQ(pg.node(spur.a).kind, NodeKind::branch);
  EXPECT_EQ(pg.node(spur.b).kind, NodeKind::end);
  EXPECT_EQ(shape_of(pg, g.dims).edges, oracle_graph(g).edges);
}

TEST(GraphExtract, StreamingMatchesInMemoryOracleOnThinnedBlobs) {
  TestWorkspace t;
  std::mt19937_64 rng(404);
  int nonempty = 0;
  for (int i = 0; i < 40; ++i) {
    const Dims d{16 + static_cast<std::int64_t>(rng() % 40), 16 + static_cast<std::int64_t>(rng() % 40),
                 16 + static_cast<std::int64_t>(rng() % 24)};
    auto g = i % 2 ? oracle::random_tubes(d, 2 + i % 5, 1.0, 3.0, rng) : oracle::random_blobs(d, 4 + i % 6, 1.5, 4.5, rng);
    auto v = oracle::to_volume(t.ws, g);
    ThinningConfig cfg;
    cfg.preserve_line_ends = i % 3 != 0;
    skeletonize(t.ws, v, cfg);
    const auto skel = oracle::from_volume(v);
    const auto pg = extract_proto_graph(t.ws, v);
    pg.check();
    const auto expect = oracle_graph(skel);
    ASSERT_EQ(shape_of(pg, d).nodes, expect.nodes) << i;
    ASSERT_EQ(shape_of(pg, d).edges, expect.edges) << i;
    // Degree consistency.
    const auto deg = pg.degrees();
    ASSERT_EQ(std::accumulate(deg.begin(), deg.end(), 0), 2 * static_cast<int>(pg.edges.size()));
    // Centerline ends touch their nodes.
    for (const auto& e : pg.edges) {
      if (e.source_voxels.empty()) continue;
      auto touches = [&](const Index3& p, std::uint32_t node) {
        for (auto& nv : pg.node(node).voxels)
          if (detail::adjacent26(p, nv)) return true;
        return false;
      };
      ASSERT_TRUE(touches(e.source_voxels.front(), e.a));
      ASSERT_TRUE(touches(e.source_voxels.back(), e.b));
    }
    nonempty += !pg.edges.empty();
  }
  EXPECT_GT(nonempty, 20);
}

TEST(GraphExtract, ForestPhantomSatisfiesEuler) {
  TestWorkspace t;
  // Two disjoint tree-like skeletons.
  oracle::Grid g({30, 30, 3});
  for (int x = 2; x < 14; ++x) g.set(x, 5, 1);
  for (int y = 6; y < 12; ++y) g.set(8, y, 1);
  for (int x = 16; x < 28; ++x) g.set(x, 20, 1);
  auto v = oracle::to_volume(t.ws, g);
  const auto pg = extract_proto_graph(t.ws, v);
  EXPECT_EQ(static_cast<int>(pg.nodes.size()) - static_cast<int>(pg.edges.size()), 2);
}

TEST(Smoothing, EndpointsFixedAndLinesUnchanged) {
  std::vector<Vec3> line;
  for (int i = 0; i < 10; ++i) line.push_back({1.0 * i, 2.0 * i, 0.5 * i});
  const auto s = smooth_centerline(line);
  for (std::size_t i = 0; i < line.size(); ++i) EXPECT_LT(distance(s[i], line[i]), 1e-9);
  const std::vector<Vec3> two = {{0, 0, 0}, {1, 1, 1}};
  EXPECT_EQ(smooth_centerline(two), two);
}

TEST(Smoothing, StaircaseShrinksWithinOneVoxel) {
  std::vector<Vec3> stair;
  Vec3 p{0, 0, 0};
  for (int i = 0; i < 50; ++i) {
    stair.push_back(p);
    (i % 2 ? p.y : p.x) += 1.0;
  }
  const auto s = smooth_centerline(stair);
  EXPECT_EQ(s.front(), stair.front());
  EXPECT_EQ(s.back(), stair.back());
  EXPECT_LT(arc_length(s), arc_length(stair));
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_LE(distance(s[i], stair[i]), std::sqrt(3.0));
}

TEST(Smoothing, RandomPolylinesKeepEndpointsAndDoNotGrow) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> step(-1, 1);
  for (int k = 0; k < 200; ++k) {
    std::vector<Vec3> pts;
    Vec3 p{0, 0, 0};
    const int n = 2 + k % 30;
    for (int i = 0; i < n; ++i) {
      pts.push_back(p);
      p += Vec3{double(step(rng)), double(step(rng)), double(step(rng))};
    }
    const auto s = smooth_centerline(pts);
    ASSERT_EQ(s.size(), pts.size());
    ASSERT_EQ(s.front(), pts.front());
    ASSERT_EQ(s.back(), pts.back());
    ASSERT_LE(arc_length(s), arc_length(pts) + 1e-9);
  }
}
