#pragma once

// Segmentation clean-up before extraction: filling enclosed cavities and a
// binary median filter. Both stream over z-slices.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "vessel/labeling.hpp"
#include "vessel/volume.hpp"

namespace vessel {

struct CavityReport {
  std::size_t filled_components = 0;
  std::int64_t filled_voxels = 0;
};

// Background 6-components smaller than `min_size` that do not touch the
// volume boundary become foreground. Returns a new volume.
inline BinaryVolume fill_cavities(Workspace& ws, const BinaryVolume& fg, std::int64_t min_size,
                                  CavityReport* report = nullptr, const std::filesystem::path& out_path = {}) {
  if (min_size < 0) throw std::invalid_argument("fill_cavities: min_size must be >= 0");
  const Dims d = fg.dims();
  const std::size_t plane = static_cast<std::size_t>(d.plane());
  TrackedVector<VoxelState> s(ws.memory(), plane);
  std::vector<char> fill;
  CavityReport rep;
  auto map = label_stream<BoxAccumulator>(
      ws, d, Connectivity::six,
      [&](std::int64_t z, std::span<std::uint32_t> keys) {
        fg.read_slice(z, {s.data(), s.size()});
        for (std::size_t i = 0; i < plane; ++i) keys[i] = is_set(s[i]) ? kNoKey : 0;
      },
      [&](ClosedComponent<BoxAccumulator>&& c) {
        const auto& b = c.acc;
        const bool boundary = b.lo.x == 0 || b.lo.y == 0 || b.lo.z == 0 || b.hi.x == d.x - 1 ||
                              b.hi.y == d.y - 1 || b.hi.z == d.z - 1;
        if (fill.size() <= c.id) fill.resize(c.id + 1, 0);
        if (!boundary && b.count < min_size) {
          fill[c.id] = 1;
          ++rep.filled_components;
          rep.filled_voxels += b.count;
        }
      },
      true);

  auto out = make_binary(ws, out_path, d, fg.spacing());
  map->for_each_slice([&](std::int64_t z, std::span<const std::uint32_t> comp) {
    fg.read_slice(z, {s.data(), s.size()});
    for (std::size_t i = 0; i < plane; ++i)
      if (comp[i] != kNoKey && fill[comp[i]]) s[i] = VoxelState::foreground;
    out.write_slice(z, {s.data(), s.size()});
  });
  if (report) *report = rep;
  return out;
}

// Each voxel takes the majority state of its (2r+1)^3 cube; outside the
// volume counts as background. The cube size is odd, so there are no ties;
// a tie would go to foreground.
inline BinaryVolume median_filter(Workspace& ws, const BinaryVolume& fg, int radius,
                                  const std::filesystem::path& out_path = {}) {
  if (radius < 1) throw std::invalid_argument("median_filter: radius must be >= 1");
  const Dims d = fg.dims();
  const std::int64_t X = d.x, Y = d.y, r = radius, w = 2 * r + 1;
  const std::size_t plane = static_cast<std::size_t>(d.plane());
  const std::int64_t cube = w * w * w;

  // Ring of per-slice square sums: sq[z % w][x + X*y] = foreground in the w*w square of slice z.
  std::vector<TrackedVector<std::int32_t>> ring;
  for (std::int64_t i = 0; i < w; ++i) ring.emplace_back(ws.memory(), plane, 0);
  TrackedVector<VoxelState> s(ws.memory(), plane);
  TrackedVector<std::int32_t> prefix(ws.memory(), static_cast<std::size_t>((X + 1) * (Y + 1)), 0);
  TrackedVector<std::int32_t> total(ws.memory(), plane, 0);

  auto square_sums = [&](std::int64_t z, TrackedVector<std::int32_t>& dst) {
    if (z < 0 || z >= d.z) {
      std::fill(dst.begin(), dst.end(), 0);
      return;
    }
    fg.read_slice(z, {s.data(), s.size()});
    for (std::int64_t y = 0; y < Y; ++y) {
      std::int32_t row = 0;
      for (std::int64_t x = 0; x < X; ++x) {
        row += is_set(s[static_cast<std::size_t>(x + X * y)]);
        prefix[static_cast<std::size_t>((x + 1) + (X + 1) * (y + 1))] =
            prefix[static_cast<std::size_t>((x + 1) + (X + 1) * y)] + row;
      }
    }
    auto P = [&](std::int64_t x, std::int64_t y) {  // sum over [0,x) x [0,y)
      x = std::clamp<std::int64_t>(x, 0, X);
      y = std::clamp<std::int64_t>(y, 0, Y);
      return prefix[static_cast<std::size_t>(x + (X + 1) * y)];
    };
    for (std::int64_t y = 0; y < Y; ++y)
      for (std::int64_t x = 0; x < X; ++x)
        dst[static_cast<std::size_t>(x + X * y)] =
            P(x + r + 1, y + r + 1) - P(x - r, y + r + 1) - P(x + r + 1, y - r) + P(x - r, y - r);
  };
  auto slot = [&](std::int64_t z) -> TrackedVector<std::int32_t>& {
    return ring[static_cast<std::size_t>(((z % w) + w) % w)];
  };

  for (std::int64_t z = -r; z <= r; ++z) {
    square_sums(z, slot(z));
    for (std::size_t i = 0; i < plane; ++i) total[i] += slot(z)[i];
  }
  auto out = make_binary(ws, out_path, d, fg.spacing());
  for (std::int64_t z = 0; z < d.z; ++z) {
    for (std::size_t i = 0; i < plane; ++i)
      s[i] = 2 * static_cast<std::int64_t>(total[i]) >= cube ? VoxelState::foreground : VoxelState::background;
    out.write_slice(z, {s.data(), s.size()});
    // Slide the window: drop z - r, add z + r + 1.
    for (std::size_t i = 0; i < plane; ++i) total[i] -= slot(z - r)[i];
    square_sums(z + r + 1, slot(z + r + 1));
    for (std::size_t i = 0; i < plane; ++i) total[i] += slot(z + r + 1)[i];
  }
  return out;
}

}  // namespace vessel
