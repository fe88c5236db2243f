#pragma once

// Voxel-to-branch assignment in four streaming steps:
//   1. every foreground voxel takes the edge of its nearest centerline point;
//   2. 26-components of equal edge id that do not contain their edge's
//      sample point are cut off (set UNASSIGNED);
//   3. the cut-off regions are collected with their bounding boxes;
//   4. each region is copied into a padded subvolume and flooded from its
//      labeled boundary, approximating L1 Voronoi cells.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "vessel/graph.hpp"
#include "vessel/interval_tree.hpp"
#include "vessel/labeling.hpp"
#include "vessel/point_index.hpp"
#include "vessel/volume.hpp"

namespace vessel {

struct CutoffRegion {
  std::uint32_t region_id = 0;
  Index3 lo, hi;  // inclusive
  std::int64_t voxel_count = 0;
  Index3 seed;  // first voxel in raster order
};

inline EdgeIdVolume voronoi_map(Workspace& ws, const BinaryVolume& fg, const VesselGraph& g) {
  std::vector<IndexedPoint> pts;
  for (const Edge& e : g.edges)
    for (std::size_t i = 0; i < e.centerline.size(); ++i)
      pts.push_back({e.centerline[i], (static_cast<std::uint64_t>(e.id) << 32) | i});
  if (pts.empty()) throw std::invalid_argument("voronoi_map: graph has no centerline points");
  // Payload order is (edge id, point index), which is the tie-break we want.
  const StaticPointIndex index(ws, std::move(pts));

  const Dims d = fg.dims();
  const Spacing sp = fg.spacing();
  EdgeIdVolume ids = EdgeIdVolume::create(ws, d, sp);
  auto in = fg.accessor();
  auto out = ids.accessor();
  for (std::int64_t bz = 0; bz < d.z; bz += kBlockEdge)
    for (std::int64_t by = 0; by < d.y; by += kBlockEdge)
      for (std::int64_t bx = 0; bx < d.x; bx += kBlockEdge) {
        const std::int64_t z1 = std::min(d.z, bz + kBlockEdge), y1 = std::min(d.y, by + kBlockEdge),
                           x1 = std::min(d.x, bx + kBlockEdge);
        for (std::int64_t z = bz; z < z1; ++z)
          for (std::int64_t y = by; y < y1; ++y)
            for (std::int64_t x = bx; x < x1; ++x) {
              if (!is_set(in.get(x, y, z))) continue;
              const auto r = index.nearest(to_physical(Index3{x, y, z}, sp));
              out.set(x, y, z, static_cast<std::uint32_t>(r.payload >> 32));
            }
      }
  return ids;
}

// Voxel of physical point p under spacing s (round half up).
inline Index3 nearest_voxel(const Vec3& p, const Spacing& s) {
  return {static_cast<std::int64_t>(std::floor(p.x / s[0] + 0.5)),
          static_cast<std::int64_t>(std::floor(p.y / s[1] + 0.5)),
          static_cast<std::int64_t>(std::floor(p.z / s[2] + 0.5))};
}

// The voxel that represents edge e's region: its middle centerline point,
// or the closest 26-neighbor carrying e when that voxel is not e's.
template <class Get>
std::optional<Index3> edge_sample(const Edge& e, const Dims& d, const Spacing& s, Get&& id_at) {
  if (e.centerline.empty()) return std::nullopt;
  const Vec3 c = e.centerline[e.centerline.size() / 2];
  const Index3 v = nearest_voxel(c, s);
  if (d.contains(v) && id_at(v) == e.id) return v;
  std::optional<Index3> best;
  double best_d2 = 0;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const Index3 q{v.x + dx, v.y + dy, v.z + dz};
        if ((!dx && !dy && !dz) || !d.contains(q) || id_at(q) != e.id) continue;
        const double d2 = squared_distance(to_physical(q, s), c);
        if (!best || d2 < best_d2 || (d2 == best_d2 && d.linear(q) < d.linear(*best))) {
          best = q;
          best_d2 = d2;
        }
      }
  return best;
}

struct RemapReport {
  std::size_t components = 0;
  std::size_t kept = 0;
  std::vector<std::uint32_t> unsampled_edges;  // edges whose sample found no voxel
};

// In place: components of equal id keep it only if they hold their edge's sample.
inline RemapReport remap_components(Workspace& ws, EdgeIdVolume& ids, const VesselGraph& g) {
  const Dims d = ids.dims();
  RemapReport rep;
  auto map = label_stream<NullAccumulator>(
      ws, d, Connectivity::twenty_six,
      [&](std::int64_t z, std::span<std::uint32_t> keys) { ids.read_slice(z, keys); },
      [&](ClosedComponent<NullAccumulator>&&) { ++rep.components; }, true);

  std::vector<std::uint32_t> table(rep.components, kUnassigned);
  auto acc = ids.accessor();
  for (const Edge& e : g.edges) {
    const auto s = edge_sample(e, d, g.spacing, [&](const Index3& p) { return acc.get(p); });
    if (!s) {
      rep.unsampled_edges.push_back(e.id);
      continue;
    }
    table[map->at(*s)] = e.id;
  }
  acc.release();
  for (auto t : table) rep.kept += t != kUnassigned;

  TrackedVector<std::uint32_t> out(ws.memory(), static_cast<std::size_t>(d.plane()));
  map->for_each_slice([&](std::int64_t z, std::span<const std::uint32_t> comp) {
    for (std::size_t i = 0; i < comp.size(); ++i) out[i] = comp[i] == kNoKey ? kUnassigned : table[comp[i]];
    ids.write_slice(z, {out.data(), out.size()});
  });
  return rep;
}

// 26-components of foreground voxels without an edge id, in one sweep.
inline std::vector<CutoffRegion> identify_cutoff_regions(Workspace& ws, const BinaryVolume& fg,
                                                         const EdgeIdVolume& ids) {
  const Dims d = fg.dims();
  std::vector<CutoffRegion> out;
  TrackedVector<VoxelState> f(ws.memory(), static_cast<std::size_t>(d.plane()));
  label_stream<BoxAccumulator>(
      ws, d, Connectivity::twenty_six,
      [&](std::int64_t z, std::span<std::uint32_t> keys) {
        fg.read_slice(z, {f.data(), f.size()});
        ids.read_slice(z, keys);
        for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = is_set(f[i]) && keys[i] == kUnassigned ? 1 : kNoKey;
      },
      [&](ClosedComponent<BoxAccumulator>&& c) {
        out.push_back({c.id, c.acc.lo, c.acc.hi, c.acc.count, c.acc.seed});
      });
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.region_id < b.region_id; });
  return out;
}

namespace detail {

// Majority label among `labels` (ascending sort), ties to the smallest id.
inline std::uint32_t majority(std::uint32_t* labels, int n) {
  std::sort(labels, labels + n);
  std::uint32_t best = kUnassigned;
  int best_count = 0;
  for (int i = 0; i < n;) {
    int j = i;
    while (j < n && labels[j] == labels[i]) ++j;
    if (j - i > best_count) {
      best_count = j - i;
      best = labels[i];
    }
    i = j;
  }
  return best;
}

struct RegionBox {
  std::size_t region;  // index into the regions list
  Index3 lo, hi;       // padded and clipped
  Dims dims;
  std::size_t offset;  // into the batch buffers
  std::size_t index(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return offset + static_cast<std::size_t>((x - lo.x) + dims.x * ((y - lo.y) + dims.y * (z - lo.z)));
  }
};

enum : std::uint8_t { kOutside = 0, kCandidate = 1, kMember = 2 };

// Flood one region in place. `label` holds boundary ids (kUnassigned
// elsewhere); `state` marks region members.
inline void flood_box(const RegionBox& b, std::span<std::uint32_t> label, std::span<std::uint8_t> state) {
  const Dims& bd = b.dims;
  auto idx = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
    return b.offset + static_cast<std::size_t>(x + bd.x * (y + bd.y * z));
  };
  auto local = [&](std::size_t i) { return bd.unlinear(static_cast<std::int64_t>(i - b.offset)); };

  std::vector<std::size_t> pending;
  for (std::int64_t z = 0; z < bd.z; ++z)
    for (std::int64_t y = 0; y < bd.y; ++y)
      for (std::int64_t x = 0; x < bd.x; ++x)
        if (state[idx(x, y, z)] == kMember) pending.push_back(idx(x, y, z));

  static constexpr int k6[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
  auto evaluate = [&](std::size_t i, bool full) {
    std::uint32_t seen[26];
    int n = 0;
    const Index3 p = local(i);
    auto look = [&](int dx, int dy, int dz) {
      const Index3 q{p.x + dx, p.y + dy, p.z + dz};
      if (!bd.contains(q)) return;
      const std::uint32_t l = label[idx(q.x, q.y, q.z)];
      if (l != kUnassigned) seen[n++] = l;
    };
    if (full) {
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            if (dx || dy || dz) look(dx, dy, dz);
    } else {
      for (const auto& o : k6) look(o[0], o[1], o[2]);
    }
    return n ? majority(seen, n) : kUnassigned;
  };

  // Frontier rounds: a voxel needs re-evaluation only once a 6-neighbor changed.
  std::vector<std::size_t> candidates = pending, next;
  std::vector<std::pair<std::size_t, std::uint32_t>> updates;
  std::vector<char> queued(static_cast<std::size_t>(bd.voxel_count()), 0);
  for (;;) {
    updates.clear();
    for (std::size_t i : candidates) {
      if (label[i] != kUnassigned) continue;
      const auto l = evaluate(i, false);
      if (l != kUnassigned) updates.emplace_back(i, l);
    }
    if (updates.empty()) {
      // 6-rounds stalled: let diagonal contacts seed one round.
      pending.erase(std::remove_if(pending.begin(), pending.end(), [&](std::size_t i) { return label[i] != kUnassigned; }),
                    pending.end());
      for (std::size_t i : pending) {
        const auto l = evaluate(i, true);
        if (l != kUnassigned) updates.emplace_back(i, l);
      }
      if (updates.empty()) break;
    }
    next.clear();
    for (const auto& [i, l] : updates) label[i] = l;
    for (const auto& [i, l] : updates) {
      const Index3 p = local(i);
      for (const auto& o : k6) {
        const Index3 q{p.x + o[0], p.y + o[1], p.z + o[2]};
        if (!bd.contains(q)) continue;
        const std::size_t j = idx(q.x, q.y, q.z);
        if (state[j] == kMember && label[j] == kUnassigned && !queued[j - b.offset]) {
          queued[j - b.offset] = 1;
          next.push_back(j);
        }
      }
    }
    for (std::size_t j : next) queued[j - b.offset] = 0;
    candidates.swap(next);
  }
}

}  // namespace detail

struct FloodReport {
  std::size_t regions = 0;
  std::size_t flooded_regions = 0;  // regions that received at least one label
  std::int64_t flooded_voxels = 0;
  std::int64_t unassigned_voxels = 0;  // left without a label (no labeled boundary)
  std::size_t batches = 0;
};

// In place. Regions are processed in batches whose padded subvolumes fit in
// a quarter of the memory budget; each batch costs one collection pass and
// one write-back pass over its z-range.
inline FloodReport flood_cutoff_regions(Workspace& ws, const BinaryVolume& fg, EdgeIdVolume& ids,
                                        const std::vector<CutoffRegion>& regions) {
  const Dims d = fg.dims();
  FloodReport rep;
  rep.regions = regions.size();
  const std::size_t plane = static_cast<std::size_t>(d.plane());
  const std::size_t batch_bytes = std::max<std::size_t>(ws.memory().budget() / 4, 1);

  std::size_t next = 0;
  while (next < regions.size()) {
    std::vector<detail::RegionBox> boxes;
    std::size_t total = 0;
    while (next < regions.size()) {
      const auto& r = regions[next];
      detail::RegionBox b;
      b.region = next;
      b.lo = {std::max<std::int64_t>(r.lo.x - 1, 0), std::max<std::int64_t>(r.lo.y - 1, 0),
              std::max<std::int64_t>(r.lo.z - 1, 0)};
      b.hi = {std::min(r.hi.x + 1, d.x - 1), std::min(r.hi.y + 1, d.y - 1), std::min(r.hi.z + 1, d.z - 1)};
      b.dims = {b.hi.x - b.lo.x + 1, b.hi.y - b.lo.y + 1, b.hi.z - b.lo.z + 1};
      const std::size_t n = static_cast<std::size_t>(b.dims.voxel_count());
      if (!boxes.empty() && (total + n) * 5 > batch_bytes) break;
      b.offset = total;
      total += n;
      boxes.push_back(b);
      ++next;
    }
    ++rep.batches;

    TrackedVector<std::uint32_t> label(ws.memory(), total, kUnassigned);
    TrackedVector<std::uint8_t> state(ws.memory(), total, detail::kOutside);

    std::vector<Interval> zs;
    std::int64_t z0 = d.z, z1 = -1;
    for (std::size_t k = 0; k < boxes.size(); ++k) {
      zs.push_back({boxes[k].lo.z, boxes[k].hi.z, static_cast<std::uint32_t>(k)});
      z0 = std::min(z0, boxes[k].lo.z);
      z1 = std::max(z1, boxes[k].hi.z);
    }
    const IntervalTree ztree(std::move(zs));

    // Visit every (box, row) of slice z intersecting the batch: z stab, then
    // y stab over the boxes active in z; the x extent is a contiguous run.
    std::vector<std::uint32_t> active, last_active, rows;
    IntervalTree ytree;
    auto for_rows = [&](std::int64_t z, auto&& fn) {
      active.clear();
      ztree.stab_into(z, active);
      if (active.empty()) return false;
      std::sort(active.begin(), active.end());
      if (active != last_active) {
        std::vector<Interval> ys;
        for (auto k : active) ys.push_back({boxes[k].lo.y, boxes[k].hi.y, k});
        ytree = IntervalTree(std::move(ys));
        last_active = active;
      }
      for (std::int64_t y = 0; y < d.y; ++y) {
        rows.clear();
        ytree.stab_into(y, rows);
        for (auto k : rows) fn(boxes[k], y);
      }
      return true;
    };

    TrackedVector<VoxelState> fslice(ws.memory(), plane);
    TrackedVector<std::uint32_t> islice(ws.memory(), plane);
    for (std::int64_t z = z0; z <= z1; ++z) {
      bool loaded = false;
      for_rows(z, [&](const detail::RegionBox& b, std::int64_t y) {
        if (!loaded) {
          fg.read_slice(z, {fslice.data(), fslice.size()});
          ids.read_slice(z, {islice.data(), islice.size()});
          loaded = true;
        }
        for (std::int64_t x = b.lo.x; x <= b.hi.x; ++x) {
          const std::size_t s = static_cast<std::size_t>(x + d.x * y);
          const std::size_t i = b.index(x, y, z);
          label[i] = islice[s];
          if (is_set(fslice[s]) && islice[s] == kUnassigned) state[i] = detail::kCandidate;
        }
      });
    }

    for (const auto& b : boxes) {
      // Members: the seed's 26-component among unassigned foreground in the box.
      const CutoffRegion& r = regions[b.region];
      std::vector<std::size_t> stack{b.index(r.seed.x, r.seed.y, r.seed.z)};
      state[stack.back()] = detail::kMember;
      std::int64_t members = 0;
      while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        ++members;
        const Index3 p = b.dims.unlinear(static_cast<std::int64_t>(i - b.offset));
        for (int dz = -1; dz <= 1; ++dz)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const Index3 q{p.x + dx, p.y + dy, p.z + dz};
              if (!b.dims.contains(q)) continue;
              const std::size_t j = b.offset + static_cast<std::size_t>(b.dims.linear(q));
              if (state[j] == detail::kCandidate) {
                state[j] = detail::kMember;
                stack.push_back(j);
              }
            }
      }
      if (members != r.voxel_count) throw std::logic_error("cut-off region membership mismatch");
      detail::flood_box(b, {label.data(), label.size()}, {state.data(), state.size()});
    }

    for (const auto& b : boxes) {
      std::int64_t got = 0;
      for (std::size_t i = b.offset; i < b.offset + static_cast<std::size_t>(b.dims.voxel_count()); ++i)
        if (state[i] == detail::kMember && label[i] != kUnassigned) ++got;
      rep.flooded_voxels += got;
      rep.unassigned_voxels += regions[b.region].voxel_count - got;
      rep.flooded_regions += got > 0;
    }

    for (std::int64_t z = z0; z <= z1; ++z) {
      bool loaded = false;
      const bool any = for_rows(z, [&](const detail::RegionBox& b, std::int64_t y) {
        if (!loaded) {
          ids.read_slice(z, {islice.data(), islice.size()});
          loaded = true;
        }
        for (std::int64_t x = b.lo.x; x <= b.hi.x; ++x) {
          const std::size_t i = b.index(x, y, z);
          if (state[i] == detail::kMember) islice[static_cast<std::size_t>(x + d.x * y)] = label[i];
        }
      });
      if (any && loaded) ids.write_slice(z, {islice.data(), islice.size()});
    }
  }
  return rep;
}

struct AssignmentReport {
  RemapReport remap;
  FloodReport flood;
};

inline EdgeIdVolume assign_branches(Workspace& ws, const BinaryVolume& fg, const VesselGraph& g,
                                    AssignmentReport* report = nullptr) {
  EdgeIdVolume ids = voronoi_map(ws, fg, g);
  AssignmentReport rep;
  rep.remap = remap_components(ws, ids, g);
  const auto regions = identify_cutoff_regions(ws, fg, ids);
  rep.flood = flood_cutoff_regions(ws, fg, ids, regions);
  if (report) *report = std::move(rep);
  return ids;
}

}  // namespace vessel
