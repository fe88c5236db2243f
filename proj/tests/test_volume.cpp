#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "oracles.hpp"
#include "test_support.hpp"
#include "vessel/surface.hpp"
#include "vessel/volume.hpp"

using namespace vessel;
using testing_support::TestWorkspace;

TEST(Volume, BlockCountsFollowCeilingDivision) {
  TestWorkspace t;
  EXPECT_EQ(BinaryVolume::create(t.ws, {64, 64, 64}, {}).block_count(), 8);
  EXPECT_EQ(BinaryVolume::create(t.ws, {33, 32, 32}, {}).block_count(), 2);
  EXPECT_EQ(BinaryVolume::create(t.ws, {135, 160, 213}, {}).block_count(), 5 * 5 * 7);
}

TEST(Volume, FreshVolumeReadsBackgroundAndOutOfRange) {
  TestWorkspace t;
  auto v = BinaryVolume::create(t.ws, {10, 10, 10}, {1, 1, 2});
  EXPECT_EQ(v.get({3, 4, 5}), VoxelState::background);
  EXPECT_EQ(v.get({-1, 0, 0}), VoxelState::background);
  EXPECT_EQ(v.get({10, 0, 0}), VoxelState::background);
  v.set({3, 4, 5}, VoxelState::foreground);
  EXPECT_EQ(v.get({3, 4, 5}), VoxelState::foreground);

  auto l = EdgeIdVolume::create(t.ws, {10, 10, 10}, {});
  EXPECT_EQ(l.get({1, 2, 3}), kUnassigned);
  EXPECT_EQ(l.get({0, 0, -5}), kUnassigned);
  l.set({1, 2, 3}, 7);
  EXPECT_EQ(l.get({1, 2, 3}), 7u);
}

TEST(Volume, RejectsBadArguments) {
  TestWorkspace t;
  EXPECT_THROW(BinaryVolume::create(t.ws, {0, 4, 4}, {}), std::invalid_argument);
  EXPECT_THROW(BinaryVolume::create(t.ws, {4, 4, 4}, {1, 0, 1}), std::invalid_argument);
  EXPECT_THROW(BinaryVolume::create(t.ws, {std::int64_t{1} << 40, 4, 4}, {}), std::invalid_argument);
  EXPECT_THROW(Workspace("/proc/definitely/not/writable", 1 << 20), std::runtime_error);
  auto v = BinaryVolume::create(t.ws, {4, 4, 4}, {});
  EXPECT_THROW(v.set({4, 0, 0}, VoxelState::foreground), std::out_of_range);
}

TEST(Volume, BlockPackingIsBitExact) {
  TestWorkspace t;
  const auto path = t.dir.path() / "packed.vgv";
  {
    auto v = BinaryVolume::create_file(t.ws, path, {40, 32, 32}, {1, 1, 1});
    v.set({0, 0, 0}, VoxelState::foreground);        // voxel 0: bits 0-1 of byte 0
    v.set({1, 0, 0}, VoxelState::fixed_foreground);  // voxel 1: bits 2-3 of byte 0
    v.set({5, 0, 0}, VoxelState::erased);            // voxel 5: bits 2-3 of byte 1
    v.set({32, 0, 0}, VoxelState::foreground);       // second block, voxel 0
    v.flush();
  }
  std::ifstream in(path, std::ios::binary);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "VGV1 40 32 32 1 1 1 binary2bit");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  ASSERT_EQ(bytes.size(), 2u * 8192u);  // 32^3 voxels at 2 bits
  EXPECT_EQ(bytes[0], 0b1001);
  EXPECT_EQ(bytes[1], 0b1100);
  EXPECT_EQ(bytes[8192], 0b01);
}

TEST(Volume, RoundTripThroughFileUnderTinyBudget) {
  TestWorkspace t(3 * 8192);  // room for three binary blocks
  std::mt19937_64 rng(7);
  const Dims d{70, 45, 66};
  auto g = oracle::random_grid(d, 0.3, rng);
  const auto path = t.dir.path() / "rt.vgv";
  {
    auto v = BinaryVolume::create_file(t.ws, path, d, {0.5, 1.5, 2});
    auto acc = v.accessor();
    for (std::int64_t i = 0; i < d.voxel_count(); ++i) {
      if (g.v[i]) acc.set(d.unlinear(i), (i % 3) ? VoxelState::foreground : VoxelState::fixed_foreground);
    }
  }
  auto v = BinaryVolume::open(t.ws, path);
  EXPECT_EQ(v.spacing(), (Spacing{0.5, 1.5, 2}));
  auto acc = v.accessor();
  for (std::int64_t i = 0; i < d.voxel_count(); ++i) {
    const auto expect = g.v[i] ? ((i % 3) ? VoxelState::foreground : VoxelState::fixed_foreground)
                               : VoxelState::background;
    ASSERT_EQ(acc.get(d.unlinear(i)), expect) << i;
  }
  EXPECT_THROW(EdgeIdVolume::open(t.ws, path), VolumeFormatError);
}

TEST(Volume, LabelVolumePersistsUnwrittenBlocksAsUnassigned) {
  TestWorkspace t;
  const auto path = t.dir.path() / "labels.vgv";
  {
    auto v = EdgeIdVolume::create_file(t.ws, path, {40, 8, 8}, {});
    v.set({35, 1, 1}, 12);
  }
  auto v = EdgeIdVolume::open(t.ws, path);
  EXPECT_EQ(v.get({35, 1, 1}), 12u);
  EXPECT_EQ(v.get({0, 0, 0}), kUnassigned);
  EXPECT_EQ(v.get({39, 7, 7}), kUnassigned);
}

TEST(Volume, StreamSlabsVisitsEveryVoxelOnce) {
  TestWorkspace t;
  std::mt19937_64 rng(3);
  const Dims d{10, 20, 30};
  auto g = oracle::random_grid(d, 0.4, rng);
  auto v = oracle::to_volume(t.ws, g);
  for (Axis axis : {Axis::x, Axis::y, Axis::z}) {
    std::int64_t slabs = 0, fg = 0, voxels = 0, last = -1;
    stream_slabs(v, axis, [&](std::int64_t i, std::span<const VoxelState> s, std::int64_t w, std::int64_t h) {
      EXPECT_EQ(i, last + 1);
      last = i;
      ++slabs;
      EXPECT_EQ(static_cast<std::int64_t>(s.size()), w * h);
      voxels += static_cast<std::int64_t>(s.size());
      for (auto st : s) fg += is_set(st);
    });
    EXPECT_EQ(slabs, d[static_cast<int>(axis)]);
    EXPECT_EQ(voxels, d.voxel_count());
    EXPECT_EQ(fg, g.count());
  }
  auto cube = BinaryVolume::create(t.ws, {64, 64, 64}, {});
  int n = 0;
  stream_slabs(cube, Axis::z, [&](std::int64_t, std::span<const VoxelState> s, std::int64_t w, std::int64_t h) {
    EXPECT_EQ(w, 64);
    EXPECT_EQ(h, 64);
    EXPECT_EQ(s.size(), 4096u);
    ++n;
  });
  EXPECT_EQ(n, 64);
}

TEST(Volume, PeakTrackedBytesStayWithinBudgetPlusBlockAndSlab) {
  const std::size_t budget = 64 * 1024;
  TestWorkspace t(budget);
  const Dims d{96, 96, 96};
  auto v = BinaryVolume::create(t.ws, d, {});
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> u(0, 95);
  {
    auto acc = v.accessor();
    for (int i = 0; i < 20000; ++i) acc.set(u(rng), u(rng), u(rng), VoxelState::foreground);
  }
  t.ws.memory().reset_peak();
  std::int64_t fg = 0;
  stream_slabs(v, Axis::z, [&](std::int64_t, std::span<const VoxelState> s, std::int64_t, std::int64_t) {
    for (auto st : s) fg += is_set(st);
  });
  EXPECT_GT(fg, 0);
  const std::size_t slab = static_cast<std::size_t>(d.plane());
  EXPECT_LE(t.ws.memory().peak(), budget + 8192 + slab);
}

TEST(Surface, MergeExamples) {
  TestWorkspace t;
  auto prev = surface_from(t.ws, std::vector<std::uint64_t>{5, 9});
  auto m = surface_merge(t.ws, prev, {9, 2});
  EXPECT_EQ(read_all(t.ws, m), (std::vector<std::uint64_t>{2, 5, 9}));
  auto empty = surface_merge(t.ws, ActiveSurface(), {});
  EXPECT_TRUE(empty.empty());
  auto retired = surface_merge(t.ws, prev, {9, 2, 11}, {5});
  EXPECT_EQ(read_all(t.ws, retired), (std::vector<std::uint64_t>{2, 9, 11}));
}

TEST(Surface, MergeMatchesSortDedupOracle) {
  TestWorkspace t(1 << 16);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint64_t> u(0, 50000);
  std::vector<std::uint64_t> base(10000), add(10000);
  for (auto& x : base) x = u(rng);
  for (auto& x : add) x = u(rng);
  std::vector<std::uint64_t> sorted_base = base;
  std::sort(sorted_base.begin(), sorted_base.end());
  sorted_base.erase(std::unique(sorted_base.begin(), sorted_base.end()), sorted_base.end());
  auto prev = surface_from(t.ws, sorted_base);
  auto merged = surface_merge(t.ws, prev, add);

  std::vector<std::uint64_t> expect = base;
  expect.insert(expect.end(), add.begin(), add.end());
  std::sort(expect.begin(), expect.end());
  expect.erase(std::unique(expect.begin(), expect.end()), expect.end());
  EXPECT_EQ(read_all(t.ws, merged), expect);
}

TEST(Surface, WriterRejectsNonIncreasingPositions) {
  TestWorkspace t;
  SurfaceWriter w(t.ws);
  w.push(4);
  EXPECT_THROW(w.push(4), std::logic_error);
}

TEST(Volume, ImportRawBytes) {
  TestWorkspace t;
  const auto raw = t.dir.path() / "in.raw";
  {
    std::ofstream f(raw, std::ios::binary);
    for (int i = 0; i < 4 * 3 * 2; ++i) f.put(static_cast<char>(i % 5 == 0 ? 200 : 0));
  }
  auto v = import_raw(t.ws, raw, t.dir.path() / "out.vgv", {4, 3, 2}, {1, 1, 3});
  for (int i = 0; i < 24; ++i) {
    EXPECT_EQ(is_set(v.get(v.dims().unlinear(i))), i % 5 == 0) << i;
  }
  EXPECT_THROW(import_raw(t.ws, raw, t.dir.path() / "bad.vgv", {4, 3, 3}, {}), VolumeFormatError);
}
