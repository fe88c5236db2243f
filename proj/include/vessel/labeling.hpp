#pragma once

// Streaming connected-component labeling over z-slices.
//
// The sweep holds two slices of provisional labels at a time. Voxels carry
// a key (kNoKey for non-members); neighbors join iff their keys are equal.
// Components that touch slice z get a per-slice "global" id; a component of
// slice z-1 either continues into slice z (its id links forward) or is
// closed, at which point its final id and accumulated statistics are
// emitted. Resolving the forward links backwards yields the final id of
// every per-slice id, so a second sweep can relabel voxels without ever
// holding more than a slice of labels in memory.

#include <cstdint>
#include <algorithm>
#include <tuple>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "vessel/geometry.hpp"
#include "vessel/memory.hpp"
#include "vessel/volume.hpp"

namespace vessel {

inline constexpr std::uint32_t kNoKey = 0xFFFFFFFFu;

enum class Connectivity { six = 6, twenty_six = 26 };

template <class Acc>
struct ClosedComponent {
  std::uint32_t id;   // final id, in closing order
  std::uint32_t key;
  Acc acc;
};

// Accumulators used by the labeler must provide add(Index3) and merge(Acc&&).
struct NullAccumulator {
  void add(const Index3&) {}
  void merge(NullAccumulator&&) {}
};

struct CountAccumulator {
  std::int64_t count = 0;
  void add(const Index3&) { ++count; }
  void merge(CountAccumulator&& o) { count += o.count; }
};

// Voxel count, inclusive bounding box and the first voxel in raster order.
struct BoxAccumulator {
  std::int64_t count = 0;
  Index3 lo{INT64_MAX, INT64_MAX, INT64_MAX};
  Index3 hi{INT64_MIN, INT64_MIN, INT64_MIN};
  Index3 seed{INT64_MAX, INT64_MAX, INT64_MAX};

  void add(const Index3& p) {
    ++count;
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    if (std::tie(p.z, p.y, p.x) < std::tie(seed.z, seed.y, seed.x)) seed = p;
  }
  void merge(BoxAccumulator&& o) {
    if (o.count == 0) return;
    count += o.count;
    lo = {std::min(lo.x, o.lo.x), std::min(lo.y, o.lo.y), std::min(lo.z, o.lo.z)};
    hi = {std::max(hi.x, o.hi.x), std::max(hi.y, o.hi.y), std::max(hi.z, o.hi.z)};
    if (std::tie(o.seed.z, o.seed.y, o.seed.x) < std::tie(seed.z, seed.y, seed.x)) seed = o.seed;
  }
};

// Every member voxel, in no particular order.
struct VoxelListAccumulator {
  std::vector<Index3> voxels;
  void add(const Index3& p) { voxels.push_back(p); }
  void merge(VoxelListAccumulator&& o) {
    if (o.voxels.size() > voxels.size()) voxels.swap(o.voxels);
    voxels.insert(voxels.end(), o.voxels.begin(), o.voxels.end());
    std::vector<Index3>().swap(o.voxels);
  }
};

// Per-voxel final ids produced by a labeling sweep.
class ComponentMap {
 public:
  ComponentMap(EdgeIdVolume slice_ids, TrackedVector<std::uint32_t> finals)
      : ids_(std::move(slice_ids)), finals_(std::move(finals)) {}

  std::uint32_t at(const Index3& p) const {
    const std::uint32_t g = ids_.get(p);
    return g == kNoKey ? kNoKey : finals_[g];
  }

  // fn(z, span of final ids, kNoKey for non-members) for every slice.
  template <class Fn>
  void for_each_slice(Fn&& fn) const {
    const Dims d = ids_.dims();
    TrackedVector<std::uint32_t> s(ids_.tracker(), static_cast<std::size_t>(d.plane()));
    for (std::int64_t z = 0; z < d.z; ++z) {
      ids_.read_slice(z, {s.data(), s.size()});
      for (auto& v : s) v = v == kNoKey ? kNoKey : finals_[v];
      fn(z, std::span<const std::uint32_t>(s.data(), s.size()));
    }
  }

 private:
  EdgeIdVolume ids_;
  TrackedVector<std::uint32_t> finals_;
};

// One labeling sweep.
//   source(z, span<uint32_t> keys) fills the keys of slice z;
//   on_close(ClosedComponent<Acc>&&) receives every component once.
// With `keep_map`, returns a ComponentMap for relabeling.
template <class Acc, class Source, class OnClose>
std::optional<ComponentMap> label_stream(Workspace& ws, Dims dims, Connectivity conn, Source&& source,
                                         OnClose&& on_close, bool keep_map = false) {
  constexpr std::uint32_t kClosed = 0x80000000u;
  const std::int64_t X = dims.x, Y = dims.y;
  const std::size_t plane = static_cast<std::size_t>(dims.plane());
  MemoryTracker& mem = ws.memory();

  std::optional<EdgeIdVolume> slice_ids;
  if (keep_map) slice_ids.emplace(EdgeIdVolume::create(ws, dims, {}));

  TrackedVector<std::uint32_t> keys(mem, plane, kNoKey);
  TrackedVector<std::uint32_t> cur(mem, plane, kNoKey);   // provisional node, then dense id
  TrackedVector<std::uint32_t> prev(mem, plane, kNoKey);  // dense ids of the previous slice
  TrackedVector<std::uint32_t> prev_keys(mem, plane, kNoKey);
  TrackedVector<std::uint32_t> gout(mem, keep_map ? plane : 0, kNoKey);
  TrackedVector<std::uint32_t> link(mem);  // per-slice id -> next per-slice id, or final | kClosed

  std::vector<std::uint32_t> parent, node_key, dense_of;
  std::vector<Acc> acc, prev_acc;
  std::vector<std::uint32_t> prev_comp_key;
  std::uint32_t prev_base = 0, prev_count = 0, next_final = 0;

  auto find = [&](std::uint32_t a) {
    std::uint32_t r = a;
    while (parent[r] != r) r = parent[r];
    while (parent[a] != r) {
      const std::uint32_t n = parent[a];
      parent[a] = r;
      a = n;
    }
    return r;
  };
  auto unite = [&](std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
    acc[a].merge(std::move(acc[b]));
  };

  const bool full = conn == Connectivity::twenty_six;
  // Previously visited neighbors in the current slice, and all neighbors in the previous slice.
  std::vector<std::pair<int, int>> in_slice = full ? std::vector<std::pair<int, int>>{{-1, -1}, {0, -1}, {1, -1}, {-1, 0}}
                                                   : std::vector<std::pair<int, int>>{{0, -1}, {-1, 0}};
  std::vector<std::pair<int, int>> below;
  if (full) {
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) below.push_back({dx, dy});
  } else {
    below.push_back({0, 0});
  }

  for (std::int64_t z = 0; z < dims.z; ++z) {
    source(z, std::span<std::uint32_t>(keys.data(), keys.size()));

    parent.resize(prev_count);
    acc.resize(prev_count);
    node_key.resize(prev_count);
    for (std::uint32_t i = 0; i < prev_count; ++i) {
      parent[i] = i;
      acc[i] = std::move(prev_acc[i]);
      node_key[i] = prev_comp_key[i];
    }

    for (std::int64_t y = 0; y < Y; ++y) {
      for (std::int64_t x = 0; x < X; ++x) {
        const std::size_t i = static_cast<std::size_t>(x + X * y);
        const std::uint32_t k = keys[i];
        if (k == kNoKey) {
          cur[i] = kNoKey;
          continue;
        }
        std::uint32_t label = kNoKey;
        for (auto [dx, dy] : in_slice) {
          const std::int64_t nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= X) continue;
          const std::size_t j = static_cast<std::size_t>(nx + X * ny);
          if (keys[j] != k) continue;
          if (label == kNoKey) label = cur[j];
          else unite(label, cur[j]);
        }
        if (label == kNoKey) {
          label = static_cast<std::uint32_t>(parent.size());
          parent.push_back(label);
          node_key.push_back(k);
          acc.emplace_back();
        }
        cur[i] = label;
        if (z > 0) {
          for (auto [dx, dy] : below) {
            const std::int64_t nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= X || ny >= Y) continue;
            const std::size_t j = static_cast<std::size_t>(nx + X * ny);
            if (prev[j] != kNoKey && prev_keys[j] == k) unite(label, prev[j]);
          }
        }
        acc[find(label)].add({x, y, z});
      }
    }

    // Dense ids for the components present in this slice, in raster order of first voxel.
    dense_of.assign(parent.size(), kNoKey);
    std::uint32_t count = 0;
    for (std::size_t i = 0; i < plane; ++i) {
      if (cur[i] == kNoKey) continue;
      const std::uint32_t r = find(cur[i]);
      if (dense_of[r] == kNoKey) dense_of[r] = count++;
      cur[i] = dense_of[r];
    }
    const std::uint32_t base = static_cast<std::uint32_t>(link.size()) ;
    // Components of the previous slice either continue or close here.
    for (std::uint32_t j = 0; j < prev_count; ++j) {
      const std::uint32_t r = find(j);
      if (dense_of[r] != kNoKey) {
        link[prev_base + j] = base + dense_of[r];
      } else {
        link[prev_base + j] = next_final | kClosed;
        on_close(ClosedComponent<Acc>{next_final++, node_key[j], std::move(acc[j])});
      }
    }
    prev_acc.clear();
    prev_acc.resize(count);
    prev_comp_key.assign(count, kNoKey);
    for (std::uint32_t r = 0; r < parent.size(); ++r) {
      if (dense_of[r] == kNoKey) continue;
      prev_acc[dense_of[r]] = std::move(acc[r]);
      prev_comp_key[dense_of[r]] = node_key[r];
    }
    for (std::uint32_t c = 0; c < count; ++c) link.push_back(kNoKey);
    if (keep_map) {
      for (std::size_t i = 0; i < plane; ++i) gout[i] = cur[i] == kNoKey ? kNoKey : base + cur[i];
      slice_ids->write_slice(z, {gout.data(), gout.size()});
    }
    std::swap(prev, cur);
    std::swap(prev_keys, keys);
    prev_base = base;
    prev_count = count;
  }
  for (std::uint32_t j = 0; j < prev_count; ++j) {
    link[prev_base + j] = next_final | kClosed;
    on_close(ClosedComponent<Acc>{next_final++, prev_comp_key[j], std::move(prev_acc[j])});
  }
  if (!keep_map) return std::nullopt;

  // Links always point forward, so one backward pass resolves every id.
  for (std::size_t g = link.size(); g-- > 0;) {
    link[g] = (link[g] & kClosed) ? (link[g] & ~kClosed) : link[link[g]];
  }
  return ComponentMap(std::move(*slice_ids), std::move(link));
}

}  // namespace vessel
