#pragma once

// Topology-preserving surface noise: random voxels on either side of the
// object boundary are flipped when the flip keeps the voxel simple.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "vessel/harness/rng.hpp"
#include "vessel/topology.hpp"
#include "vessel/volume.hpp"

namespace vessel::harness {

struct NoiseReport {
  std::int64_t surface_voxels = 0;  // foreground voxels with a background face neighbor, before noise
  std::int64_t target_flips = 0;
  std::int64_t accepted_flips = 0;
  std::int64_t attempts = 0;
  double achieved_level = 0;
  bool reached = true;
};

namespace detail {

constexpr int kFace[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

// Candidate set with O(1) insert, erase and uniform draw.
class IndexedSet {
 public:
  void insert(std::int64_t v) {
    if (pos_.emplace(v, items_.size()).second) items_.push_back(v);
  }
  void erase(std::int64_t v) {
    auto it = pos_.find(v);
    if (it == pos_.end()) return;
    const std::size_t i = it->second;
    pos_.erase(it);
    if (i + 1 != items_.size()) {
      items_[i] = items_.back();
      pos_[items_[i]] = i;
    }
    items_.pop_back();
  }
  std::size_t size() const { return items_.size(); }
  std::int64_t operator[](std::size_t i) const { return items_[i]; }

 private:
  std::vector<std::int64_t> items_;
  std::unordered_map<std::int64_t, std::size_t> pos_;
};

}  // namespace detail

// Noise level = accepted flips / initial surface voxels. Candidates are drawn
// with replacement from the current set of voxels with a face neighbor of the
// opposite state; a flip is accepted iff the voxel is simple.
inline BinaryVolume add_surface_noise(Workspace& ws, const BinaryVolume& src, double level, std::uint64_t seed,
                                      NoiseReport* report = nullptr, const std::filesystem::path& out = {}) {
  if (!(level >= 0 && level <= 1)) throw std::invalid_argument("noise level must be in [0, 1]");
  const Dims d = src.dims();
  auto vol = make_binary(ws, out, d, src.spacing());
  {
    TrackedVector<VoxelState> s(ws.memory(), static_cast<std::size_t>(d.plane()));
    for (std::int64_t z = 0; z < d.z; ++z) {
      src.read_slice(z, {s.data(), s.size()});
      vol.write_slice(z, {s.data(), s.size()});
    }
  }
  NoiseReport rep;
  {
    auto acc = vol.accessor();
    auto fg = [&](std::int64_t x, std::int64_t y, std::int64_t z) { return is_set(acc.get(x, y, z)); };
    // Out-of-volume neighbors are background but never candidates themselves.
    auto boundary = [&](const Index3& p) {
      const bool self = fg(p.x, p.y, p.z);
      for (auto& o : detail::kFace)
        if (fg(p.x + o[0], p.y + o[1], p.z + o[2]) != self) return true;
      return false;
    };
  
    detail::IndexedSet cand;
    for (std::int64_t i = 0; i < d.voxel_count(); ++i) {
      const Index3 p = d.unlinear(i);
      if (!boundary(p)) continue;
      cand.insert(i);
      rep.surface_voxels += fg(p.x, p.y, p.z);
    }
    rep.target_flips = static_cast<std::int64_t>(std::floor(level * static_cast<double>(rep.surface_voxels)));
    const std::int64_t max_attempts = 100 * rep.target_flips;
  
    Rng rng(seed);
    while (rep.accepted_flips < rep.target_flips && rep.attempts < max_attempts && cand.size()) {
      ++rep.attempts;
      const std::int64_t i = cand[rng.uniform_below(cand.size())];
      const Index3 p = d.unlinear(i);
      const Neighborhood26 nb =
          gather_neighborhood([&](int dx, int dy, int dz) { return fg(p.x + dx, p.y + dy, p.z + dz); });
      if (!is_simple(nb)) continue;
      acc.set(p, fg(p.x, p.y, p.z) ? VoxelState::background : VoxelState::foreground);
      ++rep.accepted_flips;
      for (int k = -1; k < 6; ++k) {
        const Index3 q = k < 0 ? p : p + Index3{detail::kFace[k][0], detail::kFace[k][1], detail::kFace[k][2]};
        if (!d.contains(q)) continue;
        if (boundary(q)) cand.insert(d.linear(q));
        else cand.erase(d.linear(q));
      }
    }
  }  // accessor released before the volume is handed out
  rep.reached = rep.accepted_flips == rep.target_flips;
  rep.achieved_level =
      rep.surface_voxels ? static_cast<double>(rep.accepted_flips) / static_cast<double>(rep.surface_voxels) : 0.0;
  if (report) *report = rep;
  return vol;
}

}  // namespace vessel::harness
