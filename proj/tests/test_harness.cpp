#include <gtest/gtest.h>

#include <map>

#include "oracles.hpp"
#include "test_support.hpp"
#include "vessel/harness.hpp"
#include "vessel/pipeline.hpp"

using namespace vessel;
using namespace vessel::harness;
using testing_support::TestWorkspace;

namespace {

bool same_voxels(const oracle::Grid& a, const oracle::Grid& b) { return a.dims == b.dims && a.v == b.v; }

}  // namespace

TEST(Rng, FixedSequenceAndRanges) {
  // mt19937_64's 10000th output is fixed by the standard.
  Rng r(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = r.next();
  EXPECT_EQ(v, 9981545732273789042ull);

  Rng a(7), b(7);
  std::map<std::uint64_t, int> hist;
  for (int i = 0; i < 6000; ++i) {
    const auto x = a.uniform_below(6);
    ASSERT_EQ(x, b.uniform_below(6));
    ++hist[x];
  }
  ASSERT_EQ(hist.size(), 6u);
  for (const auto& [k, n] : hist) EXPECT_NEAR(n, 1000, 150) << k;
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  EXPECT_THROW(a.uniform_below(0), std::invalid_argument);
}

TEST(Phantom, DeterministicAndFitChecked) {
  TestWorkspace t;
  Phantom p{PhantomKind::bumpy_tube, 3, 40};
  PhantomInfo info;
  const auto a = oracle::from_volume(synth_phantom(t.ws, p, {}, {}, &info));
  const auto b = oracle::from_volume(synth_phantom(t.ws, p));
  EXPECT_TRUE(same_voxels(a, b));
  EXPECT_EQ(info.foreground, a.count());
  EXPECT_EQ(info.dims, a.dims);
  EXPECT_EQ(info.expected_nodes, 2u);
  EXPECT_EQ(info.expected_edges, 1u);
  p.seed = 2;
  EXPECT_FALSE(same_voxels(a, oracle::from_volume(synth_phantom(t.ws, p))));
  EXPECT_THROW(synth_phantom(t.ws, Phantom{PhantomKind::cylinder, 3, 40}, Dims{20, 20, 20}), std::invalid_argument);
  EXPECT_THROW(synth_phantom(t.ws, Phantom{PhantomKind::torus, 4, 1, 6}), std::invalid_argument);
  EXPECT_EQ(parse_phantom_kind("cow_like_bumps"), PhantomKind::cow_like_bumps);
  EXPECT_THROW(parse_phantom_kind("sphere"), std::invalid_argument);
}

TEST(Phantom, CylinderMatchesAnalyticCount) {
  TestWorkspace t;
  PhantomInfo info;
  synth_phantom(t.ws, Phantom{PhantomKind::cylinder, 3, 40}, {}, {}, &info);
  // 29 lattice points in a disc of radius 3, times 40 or 41 slices along the axis.
  EXPECT_TRUE(info.foreground == 29 * 40 || info.foreground == 29 * 41) << info.foreground;
}

TEST(Phantom, SpacingKeepsPhysicalShape) {
  TestWorkspace t;
  PhantomInfo iso, aniso;
  synth_phantom(t.ws, Phantom{PhantomKind::cylinder, 6, 40}, {}, {1, 1, 1}, &iso);
  synth_phantom(t.ws, Phantom{PhantomKind::cylinder, 6, 40}, {}, {1, 1, 2}, &aniso);
  // The margin is in voxels; the shape's physical extent is the same.
  EXPECT_NEAR(2.0 * double(aniso.dims.z - 7), double(iso.dims.z - 7), 2.0);
  EXPECT_NEAR(2.0 * double(aniso.foreground), double(iso.foreground), 0.08 * double(iso.foreground));
}

// Every phantom converges to the topology it was built for.
TEST(Phantom, PipelineReachesExpectedTopology) {
  TestWorkspace t;
  const std::vector<Phantom> cases = {
      {PhantomKind::cylinder, 3, 40},      {PhantomKind::y_junction, 4, 24},     {PhantomKind::torus, 3, 1, 12},
      {PhantomKind::bumpy_tube, 4, 120},   {PhantomKind::cow_like_bumps, 5, 80},
  };
  for (const auto& p : cases) {
    PhantomInfo info;
    const auto v = synth_phantom(t.ws, p, {}, {}, &info);
    const auto res = run_pipeline(t.ws, v, {});
    EXPECT_EQ(res.graph.nodes.size(), info.expected_nodes) << to_string(p.kind);
    EXPECT_EQ(res.graph.edges.size(), info.expected_edges) << to_string(p.kind);
    EXPECT_LE(res.iterations.size(), 6u) << to_string(p.kind);
  }
}

TEST(Scale, FactorOneIsIdentity) {
  TestWorkspace t;
  const auto src = synth_phantom(t.ws, Phantom{PhantomKind::y_junction, 3, 12});
  for (auto st : {ScaleStrategy::resample, ScaleStrategy::mirror}) {
    const auto out = scale_volume(t.ws, src, 1, st);
    EXPECT_TRUE(same_voxels(oracle::from_volume(src), oracle::from_volume(out)));
    EXPECT_EQ(out.spacing(), src.spacing());
  }
  EXPECT_THROW(scale_volume(t.ws, src, 0, ScaleStrategy::resample), std::invalid_argument);
  EXPECT_EQ(parse_scale_strategy("mirror"), ScaleStrategy::mirror);
  EXPECT_THROW(parse_scale_strategy("tile"), std::invalid_argument);
}

TEST(Scale, ResampleReplicatesEachVoxel) {
  TestWorkspace t;
  std::mt19937_64 rng(3);
  const auto g = oracle::random_grid({7, 5, 6}, 0.4, rng);
  const auto src = oracle::to_volume(t.ws, g, {1, 2, 3});
  for (int k : {2, 3}) {
    const auto out = scale_volume(t.ws, src, k, ScaleStrategy::resample);
    const auto o = oracle::from_volume(out);
    ASSERT_EQ(o.dims, (Dims{7 * k, 5 * k, 6 * k}));
    EXPECT_EQ(out.spacing(), (Spacing{1.0 / k, 2.0 / k, 3.0 / k}));
    for (std::int64_t z = 0; z < o.dims.z; ++z)
      for (std::int64_t y = 0; y < o.dims.y; ++y)
        for (std::int64_t x = 0; x < o.dims.x; ++x) ASSERT_EQ(o.at(x, y, z), g.at(x / k, y / k, z / k));
    EXPECT_EQ(o.count(), g.count() * k * k * k);  // foreground fraction unchanged
    EXPECT_EQ(oracle::foreground_components26(o), oracle::foreground_components26(g));
  }
}

TEST(Scale, MirrorReflectsAtSeams) {
  TestWorkspace t;
  std::mt19937_64 rng(4);
  const auto g = oracle::random_grid({6, 5, 4}, 0.5, rng);
  const auto src = oracle::to_volume(t.ws, g);
  const auto out = scale_volume(t.ws, src, 3, ScaleStrategy::mirror);
  EXPECT_EQ(out.spacing(), src.spacing());
  const auto o = oracle::from_volume(out);
  ASSERT_EQ(o.dims, (Dims{18, 15, 12}));
  // Tile 1 along each axis is the reflection of tile 0.
  for (std::int64_t z = 0; z < 4; ++z)
    for (std::int64_t y = 0; y < 5; ++y)
      for (std::int64_t x = 0; x < 6; ++x) {
        ASSERT_EQ(o.at(x, y, z), g.at(x, y, z));
        ASSERT_EQ(o.at(11 - x, y, z), g.at(x, y, z));
        ASSERT_EQ(o.at(x, 9 - y, z), g.at(x, y, z));
        ASSERT_EQ(o.at(x, y, 7 - z), g.at(x, y, z));
        ASSERT_EQ(o.at(12 + x, y, z), g.at(x, y, z));
      }
  // Boundary slabs on both sides of every internal seam are mirror images.
  for (std::int64_t seam : {6, 12})
    for (std::int64_t z = 0; z < o.dims.z; ++z)
      for (std::int64_t y = 0; y < o.dims.y; ++y) ASSERT_EQ(o.at(seam - 1, y, z), o.at(seam, y, z));
}

TEST(Scale, MirrorAddsNoComponentsForFaceTouchingShape) {
  TestWorkspace t;
  // A tube running through the whole x extent touches both x faces.
  oracle::Grid g({10, 7, 7});
  for (std::int64_t x = 0; x < 10; ++x)
    for (std::int64_t y = 2; y <= 4; ++y)
      for (std::int64_t z = 2; z <= 4; ++z) g.set(x, y, z);
  const auto out = oracle::from_volume(scale_volume(t.ws, oracle::to_volume(t.ws, g), 4, ScaleStrategy::mirror));
  // Tiles are disjoint copies across y and z (the tube does not touch
  // those faces) but fuse into single tubes along x.
  EXPECT_EQ(oracle::foreground_components26(out), 16);
}

TEST(Noise, LevelZeroAndDeterminism) {
  TestWorkspace t;
  const auto src = synth_phantom(t.ws, Phantom{PhantomKind::cylinder, 5, 30});
  NoiseReport rep;
  EXPECT_TRUE(same_voxels(oracle::from_volume(src), oracle::from_volume(add_surface_noise(t.ws, src, 0, 1, &rep))));
  EXPECT_EQ(rep.accepted_flips, 0);
  const auto a = oracle::from_volume(add_surface_noise(t.ws, src, 0.2, 9));
  const auto b = oracle::from_volume(add_surface_noise(t.ws, src, 0.2, 9));
  const auto c = oracle::from_volume(add_surface_noise(t.ws, src, 0.2, 10));
  EXPECT_TRUE(same_voxels(a, b));
  EXPECT_FALSE(same_voxels(a, c));
  EXPECT_THROW(add_surface_noise(t.ws, src, 1.5, 1), std::invalid_argument);
}

TEST(Noise, ReachesTargetAndPreservesTopology) {
  TestWorkspace t;
  std::vector<oracle::Grid> shapes;
  {
    shapes.push_back(oracle::from_volume(synth_phantom(t.ws, Phantom{PhantomKind::cylinder, 5, 30})));
    shapes.push_back(oracle::from_volume(synth_phantom(t.ws, Phantom{PhantomKind::torus, 3, 1, 8})));
    std::mt19937_64 rng(12);
    shapes.push_back(oracle::random_blobs({30, 30, 30}, 6, 2, 5, rng));
  }
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const auto& g = shapes[s];
    const auto src = oracle::to_volume(t.ws, g);
    for (double level : {0.05, 0.2}) {
      NoiseReport rep;
      const auto n = oracle::from_volume(add_surface_noise(t.ws, src, level, 100 + s, &rep));
      EXPECT_TRUE(rep.reached);
      EXPECT_EQ(rep.target_flips, static_cast<std::int64_t>(level * double(rep.surface_voxels)));
      EXPECT_EQ(rep.accepted_flips, rep.target_flips);
      EXPECT_GE(rep.attempts, rep.accepted_flips);
      std::int64_t changed = 0;
      for (std::size_t i = 0; i < g.v.size(); ++i) changed += g.v[i] != n.v[i];
      EXPECT_GT(changed, 0);
      EXPECT_LE(changed, rep.accepted_flips);
      EXPECT_EQ(oracle::foreground_components26(n), oracle::foreground_components26(g)) << s;
      EXPECT_EQ(oracle::background_components6(n), oracle::background_components6(g)) << s;
      EXPECT_EQ(oracle::euler_characteristic(n), oracle::euler_characteristic(g)) << s;
    }
  }
}

TEST(Noise, EmptyVolumeHasNoSurface) {
  TestWorkspace t;
  oracle::Grid g({5, 5, 5});
  NoiseReport rep;
  const auto out = oracle::from_volume(add_surface_noise(t.ws, oracle::to_volume(t.ws, g), 0.5, 1, &rep));
  EXPECT_EQ(rep.surface_voxels, 0);
  EXPECT_EQ(rep.target_flips, 0);
  EXPECT_TRUE(rep.reached);
  EXPECT_EQ(out.count(), 0);
}

TEST(Compare, IdenticalGraphsHaveNoDifferences) {
  TestWorkspace t;
  const auto v = synth_phantom(t.ws, Phantom{PhantomKind::y_junction, 3, 16});
  const auto g = run_pipeline(t.ws, v, {}).graph;
  const auto c = compare_graph_summaries(g, g);
  EXPECT_FALSE(c.structural_mismatch);
  EXPECT_EQ(c.node_difference, 0.0);
  EXPECT_EQ(c.edge_difference, 0.0);
  ASSERT_EQ(c.mean_difference.size(), 14u);
  for (double d : c.mean_difference) EXPECT_EQ(d, 0.0);
  for (double d : c.std_difference) EXPECT_EQ(d, 0.0);
  const auto j = comparison_json(c);
  EXPECT_EQ(j["features"]["bulge_size"]["a"]["count"], 3);
}

TEST(Compare, EmptyVersusNonEmptyIsStructuralMismatch) {
  TestWorkspace t;
  const auto v = synth_phantom(t.ws, Phantom{PhantomKind::cylinder, 3, 20});
  const auto g = run_pipeline(t.ws, v, {}).graph;
  const auto c = compare_graph_summaries(VesselGraph{}, g);
  EXPECT_TRUE(c.structural_mismatch);
  EXPECT_EQ(c.edge_difference, 1.0);
  EXPECT_EQ(c.a.features[0].count, 0u);
}

TEST(Compare, SummaryStatistics) {
  VesselGraph g;
  g.nodes.resize(3);
  for (std::uint32_t i = 0; i < 3; ++i) g.nodes[i].id = i;
  Edge e1, e2;
  e1.id = 0, e1.a = 0, e1.b = 1;
  e2.id = 1, e2.a = 1, e2.b = 2;
  e1.features.length = 2;
  e2.features.length = 6;
  e1.features.bulge_size = 3.0;
  g.edges = {e1, e2};
  const auto s = summarize_graph(g);
  EXPECT_EQ(s.features[0].name, "length");
  EXPECT_DOUBLE_EQ(s.features[0].mean, 4.0);
  EXPECT_DOUBLE_EQ(s.features[0].stddev, 2.0);  // population
  EXPECT_EQ(s.features.back().name, "bulge_size");
  EXPECT_EQ(s.features.back().count, 1u);
  EXPECT_DOUBLE_EQ(s.features.back().mean, 3.0);
}
