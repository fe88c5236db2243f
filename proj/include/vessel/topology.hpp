#pragma once

// Local topology in the 3x3x3 neighborhood of a voxel.
//
// A Neighborhood26 is a 27-bit occupancy mask; bit (dx+1) + 3(dy+1) + 9(dz+1)
// holds the voxel at offset (dx,dy,dz). The center bit is ignored by every
// predicate here.
//
// Simplicity uses the topological numbers of Bertrand and Malandain:
// deleting the center preserves topology iff the foreground 26-neighbors form
// exactly one 26-component, and the background voxels of the 18-neighborhood
// form exactly one 6-component that touches a face neighbor.

#include <array>
#include <bit>
#include <cstdint>
#include <cstdlib>

namespace vessel {

using Neighborhood26 = std::uint32_t;

inline constexpr int kCenterBit = 13;

constexpr int neighbor_bit(int dx, int dy, int dz) { return (dx + 1) + 3 * (dy + 1) + 9 * (dz + 1); }

namespace detail {

struct NeighborTables {
  std::array<std::uint32_t, 27> adj26{};  // 26-adjacent cube positions, center excluded
  std::array<std::uint32_t, 27> adj6{};   // 6-adjacent positions within the 18-neighborhood
  std::uint32_t n18 = 0;
  std::uint32_t n6 = 0;
};

constexpr NeighborTables make_tables() {
  NeighborTables t{};
  auto coord = [](int b, int axis) { return (axis == 0 ? b % 3 : axis == 1 ? (b / 3) % 3 : b / 9) - 1; };
  for (int b = 0; b < 27; ++b) {
    const int x = coord(b, 0), y = coord(b, 1), z = coord(b, 2);
    const int nz = (x != 0) + (y != 0) + (z != 0);
    if (nz == 1) t.n6 |= 1u << b;
    if (nz == 1 || nz == 2) t.n18 |= 1u << b;
  }
  for (int a = 0; a < 27; ++a) {
    for (int b = 0; b < 27; ++b) {
      if (a == b || a == kCenterBit || b == kCenterBit) continue;
      const int dx = coord(a, 0) - coord(b, 0), dy = coord(a, 1) - coord(b, 1), dz = coord(a, 2) - coord(b, 2);
      const int ax = dx < 0 ? -dx : dx, ay = dy < 0 ? -dy : dy, az = dz < 0 ? -dz : dz;
      if (ax <= 1 && ay <= 1 && az <= 1) t.adj26[a] |= 1u << b;
      if (ax + ay + az == 1) t.adj6[a] |= 1u << b;
    }
  }
  for (int a = 0; a < 27; ++a) t.adj6[a] &= t.n18;
  return t;
}

inline constexpr NeighborTables kTables = make_tables();

// Grow `seed` to its connected component inside `set`.
inline std::uint32_t grow(std::uint32_t seed, std::uint32_t set, const std::array<std::uint32_t, 27>& adj) {
  std::uint32_t comp = seed, frontier = seed;
  while (frontier) {
    std::uint32_t next = 0;
    for (std::uint32_t f = frontier; f; f &= f - 1) next |= adj[std::countr_zero(f)];
    next &= set & ~comp;
    comp |= next;
    frontier = next;
  }
  return comp;
}

}  // namespace detail

inline constexpr std::uint32_t kCubeMask = (1u << 27) - 1;
inline constexpr std::uint32_t kFaceMask = detail::kTables.n6;

inline int foreground_neighbor_count(Neighborhood26 nb) {
  return std::popcount(nb & kCubeMask & ~(1u << kCenterBit));
}

// Number of 26-components of foreground in the 26-neighborhood.
inline int foreground_components(Neighborhood26 nb) {
  std::uint32_t fg = nb & kCubeMask & ~(1u << kCenterBit);
  int n = 0;
  while (fg) {
    fg &= ~detail::grow(fg & -fg, fg, detail::kTables.adj26);
    ++n;
  }
  return n;
}

// Number of 6-components of background in the 18-neighborhood that contain a face neighbor.
inline int background_components(Neighborhood26 nb) {
  std::uint32_t bg = ~nb & detail::kTables.n18;
  int n = 0;
  std::uint32_t faces = bg & kFaceMask;
  while (faces) {
    const std::uint32_t comp = detail::grow(faces & -faces, bg, detail::kTables.adj6);
    faces &= ~comp;
    bg &= ~comp;
    ++n;
  }
  return n;
}

inline bool is_simple(Neighborhood26 nb) {
  return foreground_components(nb) == 1 && background_components(nb) == 1;
}

inline bool is_line_end(Neighborhood26 nb) { return foreground_neighbor_count(nb) < 2; }

// Gather a neighborhood through any callable `occupied(dx,dy,dz) -> bool`.
template <class Occupied>
Neighborhood26 gather_neighborhood(Occupied&& occupied) {
  Neighborhood26 nb = 1u << kCenterBit;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        if (occupied(dx, dy, dz)) nb |= 1u << neighbor_bit(dx, dy, dz);
      }
  return nb;
}

}  // namespace vessel
