#pragma once

// Enlarging a volume by an integer factor: nearest-neighbor resampling (finer
// sampling of the same object) or mirrored tiling (more of the object).

#include <filesystem>
#include <stdexcept>
#include <string>

#include "vessel/volume.hpp"

namespace vessel::harness {

enum class ScaleStrategy { resample, mirror };

inline ScaleStrategy parse_scale_strategy(const std::string& s) {
  if (s == "resample") return ScaleStrategy::resample;
  if (s == "mirror") return ScaleStrategy::mirror;
  throw std::invalid_argument("unknown scale strategy \"" + s + "\"");
}

namespace detail {

// Source coordinate of output coordinate c along an axis of source length n.
inline std::int64_t source_coord(std::int64_t c, std::int64_t n, int scale, ScaleStrategy st) {
  if (st == ScaleStrategy::resample) return c / scale;
  const std::int64_t tile = c / n, local = c % n;
  return tile % 2 ? n - 1 - local : local;  // every second tile is reflected
}

}  // namespace detail

inline BinaryVolume scale_volume(Workspace& ws, const BinaryVolume& src, int scale, ScaleStrategy st,
                                 const std::filesystem::path& out = {}) {
  if (scale < 1) throw std::invalid_argument("scale must be >= 1");
  const Dims s = src.dims();
  const Dims d{s.x * scale, s.y * scale, s.z * scale};
  Spacing sp = src.spacing();
  if (st == ScaleStrategy::resample) sp = {sp.x / scale, sp.y / scale, sp.z / scale};
  auto dst = make_binary(ws, out, d, sp);

  TrackedVector<VoxelState> in(ws.memory(), static_cast<std::size_t>(s.plane()));
  TrackedVector<VoxelState> plane(ws.memory(), static_cast<std::size_t>(d.plane()));
  std::int64_t loaded = -1;
  for (std::int64_t z = 0; z < d.z; ++z) {
    const std::int64_t sz = detail::source_coord(z, s.z, scale, st);
    if (sz != loaded) {
      src.read_slice(sz, {in.data(), in.size()});
      for (std::int64_t y = 0; y < d.y; ++y) {
        const std::int64_t sy = detail::source_coord(y, s.y, scale, st);
        for (std::int64_t x = 0; x < d.x; ++x)
          plane[static_cast<std::size_t>(x + d.x * y)] =
              in[static_cast<std::size_t>(detail::source_coord(x, s.x, scale, st) + s.x * sy)];
      }
      loaded = sz;
    }
    dst.write_slice(z, {plane.data(), plane.size()});
  }
  return dst;
}

}  // namespace vessel::harness
