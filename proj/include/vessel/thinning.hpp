#pragma once

// Topology-preserving directional thinning over a disk-backed volume.
//
// Each subiteration streams the active surface once in ascending position
// order. Border voxels that are deletable get marked ERASED; a marked voxel
// is finalized (re-checked against the current state and deleted or
// restored) as soon as the sweep has passed all of its 26-neighbors, so
// every decision sees earlier deletions and unmarked later voxels exactly as
// a sequential scan would. Deleting a voxel queues its foreground neighbors
// for the next active surface, which is written slice by slice.

#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

#include "vessel/geometry.hpp"
#include "vessel/memory.hpp"
#include "vessel/surface.hpp"
#include "vessel/topology.hpp"
#include "vessel/volume.hpp"

namespace vessel {

enum class Direction : int { pos_x = 0, neg_x, pos_y, neg_y, pos_z, neg_z };

inline constexpr std::array<Direction, 6> kDirections = {Direction::pos_x, Direction::neg_x, Direction::pos_y,
                                                         Direction::neg_y, Direction::pos_z, Direction::neg_z};

inline int axis_of(Direction d) { return static_cast<int>(d) / 2; }

inline Index3 offset_of(Direction d) {
  const std::int64_t s = static_cast<int>(d) % 2 == 0 ? 1 : -1;
  switch (axis_of(d)) {
    case 0: return {s, 0, 0};
    case 1: return {0, s, 0};
    default: return {0, 0, s};
  }
}

inline const char* to_string(Direction d) {
  static constexpr const char* names[] = {"+x", "-x", "+y", "-y", "+z", "-z"};
  return names[static_cast<int>(d)];
}

// Picks the face direction whose deleted layers have the least accumulated
// physical depth, so anisotropic volumes erode at equal physical speed.
class DirectionScheduler {
 public:
  explicit DirectionScheduler(Spacing spacing) : spacing_(spacing) {}

  // Ties resolve in the order +x, -x, +y, -y, +z, -z.
  Direction next() const {
    int best = 0;
    for (int i = 1; i < 6; ++i) {
      if (depth_[i] < depth_[best]) best = i;
    }
    return static_cast<Direction>(best);
  }

  void complete(Direction d) {
    depth_[static_cast<int>(d)] += spacing_[axis_of(d)];
    ++count_[static_cast<int>(d)];
  }

  double depth(Direction d) const { return depth_[static_cast<int>(d)]; }
  std::int64_t count(Direction d) const { return count_[static_cast<int>(d)]; }

 private:
  Spacing spacing_;
  std::array<double, 6> depth_{};
  std::array<std::int64_t, 6> count_{};
};

struct ThinningConfig {
  bool preserve_line_ends = true;
  std::vector<Index3> fixed_voxels;

  void validate() const {
    if (!fixed_voxels.empty() && preserve_line_ends) {
      throw std::invalid_argument("fixed voxels require preserve_line_ends = false");
    }
  }
};

inline bool deletable(Neighborhood26 nb, const ThinningConfig& cfg) {
  if (cfg.preserve_line_ends && is_line_end(nb)) return false;
  return is_simple(nb);
}

struct SubiterationResult {
  std::int64_t deleted = 0;
  std::int64_t considered = 0;
  ActiveSurface next;
};

struct ThinningStats {
  std::array<std::int64_t, 6> subiterations{};
  std::int64_t deleted = 0;
  std::int64_t considered = 0;
  std::int64_t total_subiterations = 0;
};

namespace detail {

inline Neighborhood26 gather(BinaryVolume::Accessor& acc, const Index3& p) {
  return gather_neighborhood(
      [&](int dx, int dy, int dz) { return is_set(acc.get(p.x + dx, p.y + dy, p.z + dz)); });
}

}  // namespace detail

// Foreground voxels with at least one background face neighbor.
inline ActiveSurface initial_surface(Workspace& ws, const BinaryVolume& vol) {
  const Dims d = vol.dims();
  SliceWindow<BinaryTraits> win(vol, 1);
  SurfaceWriter out(ws);
  for (std::int64_t z = 0; z < d.z; ++z) {
    win.center_on(z);
    for (std::int64_t y = 0; y < d.y; ++y) {
      for (std::int64_t x = 0; x < d.x; ++x) {
        if (win.at(x, y, z) != VoxelState::foreground) continue;
        if (!is_set(win.at(x - 1, y, z)) || !is_set(win.at(x + 1, y, z)) || !is_set(win.at(x, y - 1, z)) ||
            !is_set(win.at(x, y + 1, z)) || !is_set(win.at(x, y, z - 1)) || !is_set(win.at(x, y, z + 1))) {
          out.push(static_cast<std::uint64_t>(d.linear({x, y, z})));
        }
      }
    }
  }
  return out.finish();
}

inline SubiterationResult subiteration(Workspace& ws, BinaryVolume& vol, Direction dir, const ActiveSurface& surf,
                                       const ThinningConfig& cfg) {
  const Dims d = vol.dims();
  const std::uint64_t plane = static_cast<std::uint64_t>(d.plane());
  const std::uint64_t lag = plane + static_cast<std::uint64_t>(d.x) + 1;
  const Index3 step = offset_of(dir);

  auto acc = vol.accessor();
  auto probe = vol.accessor();
  SurfaceReader reader(ws, surf);
  SurfaceBuilder builder(ws);
  std::deque<std::uint64_t> pending;
  SubiterationResult res;

  auto keep = [&](std::uint64_t pos) { return probe.get(d.unlinear(static_cast<std::int64_t>(pos))) == VoxelState::foreground; };

  auto finalize = [&](std::uint64_t q) {
    const Index3 p = d.unlinear(static_cast<std::int64_t>(q));
    const Neighborhood26 nb = detail::gather(acc, p);
    // Re-check both conditions: a marked voxel may have become a line end
    // through an earlier deletion in this pass.
    if (!is_simple(nb) || (cfg.preserve_line_ends && is_line_end(nb))) {
      acc.set(p, VoxelState::foreground);
      return;
    }
    acc.set(p, VoxelState::background);
    ++res.deleted;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!(nb & (1u << neighbor_bit(dx, dy, dz))) || (dx == 0 && dy == 0 && dz == 0)) continue;
          const Index3 n{p.x + dx, p.y + dy, p.z + dz};
          if (acc.get(n) == VoxelState::fixed_foreground) continue;
          builder.add(static_cast<std::uint64_t>(d.linear(n)));
        }
  };

  std::uint64_t pos;
  while (reader.next(pos)) {
    while (!pending.empty() && pending.front() + lag < pos) {
      finalize(pending.front());
      pending.pop_front();
    }
    const std::uint64_t lower = pending.empty() ? pos : pending.front();
    const std::uint64_t lz = lower / plane;
    builder.flush_below(lz == 0 ? 0 : (lz - 1) * plane, keep);

    const Index3 p = d.unlinear(static_cast<std::int64_t>(pos));
    if (acc.get(p) != VoxelState::foreground) continue;  // fixed, or no longer present
    const Neighborhood26 nb = detail::gather(acc, p);
    if ((nb & kFaceMask) == kFaceMask) continue;  // interior: re-added if a face neighbor goes
    if (is_set(acc.get(p + step))) {
      builder.add(pos);  // not a border voxel for this direction
      continue;
    }
    ++res.considered;
    if (deletable(nb, cfg)) {
      acc.set(p, VoxelState::erased);
      pending.push_back(pos);
    }
  }
  while (!pending.empty()) {
    finalize(pending.front());
    pending.pop_front();
  }
  acc.release();
  res.next = builder.finish(keep);
  return res;
}

// Thin `vol` in place until six consecutive subiterations, one per
// direction, delete nothing. Fixed voxels are written as FIXED_FOREGROUND
// and survive unchanged.
inline ThinningStats skeletonize(Workspace& ws, BinaryVolume& vol, const ThinningConfig& cfg) {
  cfg.validate();
  {
    auto acc = vol.accessor();
    for (const auto& f : cfg.fixed_voxels) {
      if (!vol.dims().contains(f)) throw std::out_of_range("fixed voxel outside volume");
      acc.set(f, VoxelState::fixed_foreground);
    }
  }
  ThinningStats stats;
  DirectionScheduler sched(vol.spacing());
  std::array<bool, 6> idle{};
  ActiveSurface surf = initial_surface(ws, vol);
  while (!std::all_of(idle.begin(), idle.end(), [](bool b) { return b; })) {
    const Direction dir = sched.next();
    SubiterationResult r = subiteration(ws, vol, dir, surf, cfg);
    sched.complete(dir);
    ++stats.subiterations[static_cast<int>(dir)];
    ++stats.total_subiterations;
    stats.deleted += r.deleted;
    stats.considered += r.considered;
    if (r.deleted > 0) idle.fill(false);
    idle[static_cast<int>(dir)] = r.deleted == 0;
    surf = std::move(r.next);
  }
  return stats;
}

}  // namespace vessel
