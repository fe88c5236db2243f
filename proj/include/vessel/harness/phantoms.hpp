#pragma once

// Synthetic vessel phantoms. Geometry is described in physical units and
// rasterized at voxel centers, one z-slice at a time, so anisotropic spacing
// samples the same shape more coarsely along an axis.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "vessel/geometry.hpp"
#include "vessel/harness/rng.hpp"
#include "vessel/volume.hpp"

namespace vessel::harness {

enum class PhantomKind { cylinder, y_junction, torus, bumpy_tube, cow_like_bumps, bump };

inline const char* to_string(PhantomKind k) {
  switch (k) {
    case PhantomKind::cylinder: return "cylinder";
    case PhantomKind::y_junction: return "y_junction";
    case PhantomKind::torus: return "torus";
    case PhantomKind::bumpy_tube: return "bumpy_tube";
    case PhantomKind::cow_like_bumps: return "cow_like_bumps";
    case PhantomKind::bump: return "bump";
  }
  return "?";
}

inline PhantomKind parse_phantom_kind(const std::string& s) {
  for (auto k : {PhantomKind::cylinder, PhantomKind::y_junction, PhantomKind::torus, PhantomKind::bumpy_tube,
                 PhantomKind::cow_like_bumps, PhantomKind::bump})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown phantom kind \"" + s + "\"");
}

// All lengths in physical units (voxels at unit spacing).
struct Phantom {
  PhantomKind kind = PhantomKind::cylinder;
  double radius = 3;         // vessel radius
  double length = 40;        // tube length; arm length for y_junction
  double major_radius = 12;  // torus
  int bump_count = 20;       // bumpy_tube
  double bump_radius = 0;    // bumpy_tube; 0 means 0.6 * radius
  double bump_height = 1;    // bump: height above the vessel wall, in vessel diameters
  double bump_width = 2;     // bump: extent along the vessel, in vessel diameters
  bool round_bump = false;   // bump: a round-capped stub on a round-capped tube instead
  std::uint64_t seed = 1;
  double margin = 3;         // empty border around the shape, in voxels
};

struct PhantomInfo {
  Dims dims;
  Spacing spacing;
  std::int64_t foreground = 0;
  // Topology the pipeline should converge to at the default threshold.
  std::size_t expected_nodes = 0, expected_edges = 0;
};

namespace detail {

struct Box {
  Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  void add(Vec3 p, double pad) {
    lo = {std::min(lo.x, p.x - pad), std::min(lo.y, p.y - pad), std::min(lo.z, p.z - pad)};
    hi = {std::max(hi.x, p.x + pad), std::max(hi.y, p.y + pad), std::max(hi.z, p.z + pad)};
  }
  void add(const Box& b) {
    add(b.lo, 0);
    add(b.hi, 0);
  }
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

// Segment a-b swept by a ball (round caps) or a disc (flat caps).
struct Capsule {
  Vec3 a, b;
  double r;
  bool round_caps;
  bool inside(Vec3 p) const {
    const Vec3 v = b - a;
    const double vv = dot(v, v);
    double t = vv > 0 ? dot(p - a, v) / vv : 0;
    if (!round_caps && (t < 0 || t > 1)) return false;
    t = std::clamp(t, 0.0, 1.0);
    return squared_distance(p, a + t * v) <= r * r;
  }
  Box box() const {
    Box bx;
    bx.add(a, r);
    bx.add(b, r);
    return bx;
  }
};

// Axis-aligned ellipsoid, optionally cut to the half where dot(p - c, clip) >= 0.
struct Ellipsoid {
  Vec3 c, semi, clip;
  bool inside(Vec3 p) const {
    const Vec3 q = p - c;
    if (dot(q, clip) < 0) return false;
    const double u = q.x / semi.x, v = q.y / semi.y, w = q.z / semi.z;
    return u * u + v * v + w * w <= 1;
  }
  Box box() const {
    Box bx;
    bx.lo = c - semi;
    bx.hi = c + semi;
    // An axis-aligned cut shrinks the box to the kept half.
    for (int a = 0; a < 3; ++a) {
      const bool only_axis = clip[a] != 0 && clip[(a + 1) % 3] == 0 && clip[(a + 2) % 3] == 0;
      if (!only_axis) continue;
      double& lo = a == 0 ? bx.lo.x : a == 1 ? bx.lo.y : bx.lo.z;
      double& hi = a == 0 ? bx.hi.x : a == 1 ? bx.hi.y : bx.hi.z;
      (clip[a] > 0 ? lo : hi) = c[a];
    }
    return bx;
  }
};

// Torus around the z axis through c.
struct Torus {
  Vec3 c;
  double R, r;
  bool inside(Vec3 p) const {
    const Vec3 q = p - c;
    const double rho = std::hypot(q.x, q.y) - R;
    return rho * rho + q.z * q.z <= r * r;
  }
  Box box() const {
    Box bx;
    bx.lo = c - Vec3{R + r, R + r, r};
    bx.hi = c + Vec3{R + r, R + r, r};
    return bx;
  }
};

struct Shape {
  std::vector<Capsule> capsules;
  std::vector<Ellipsoid> ellipsoids;
  std::vector<Torus> tori;
  std::size_t nodes = 0, edges = 0;

  Box box() const {
    Box b;
    for (auto& c : capsules) b.add(c.box());
    for (auto& e : ellipsoids) b.add(e.box());
    for (auto& t : tori) b.add(t.box());
    return b;
  }
};

inline Vec3 unit(Vec3 v) { return (1.0 / std::sqrt(dot(v, v))) * v; }

inline Shape build_shape(const Phantom& p) {
  if (!(p.radius > 0) || !(p.length > 0)) throw std::invalid_argument("phantom radius and length must be positive");
  Shape s;
  const double R = p.radius, L = p.length;
  switch (p.kind) {
    case PhantomKind::cylinder:
      s.capsules.push_back({{0, 0, 0}, {L, 0, 0}, R, false});
      s.nodes = 2, s.edges = 1;
      break;
    case PhantomKind::y_junction:
      for (double deg : {90.0, 210.0, 330.0}) {
        const double a = deg * std::numbers::pi / 180;
        s.capsules.push_back({{0, 0, 0}, {L * std::cos(a), L * std::sin(a), 0}, R, true});
      }
      s.nodes = 4, s.edges = 3;
      break;
    case PhantomKind::torus:
      if (!(p.major_radius > 2 * R)) throw std::invalid_argument("torus major radius must exceed twice the radius");
      s.tori.push_back({{0, 0, 0}, p.major_radius, R});
      s.nodes = 1, s.edges = 1;
      break;
    case PhantomKind::bumpy_tube: {
      if (p.bump_count < 0) throw std::invalid_argument("bump_count must be >= 0");
      const double rho = p.bump_radius > 0 ? p.bump_radius : 0.6 * R;
      s.capsules.push_back({{0, 0, 0}, {L, 0, 0}, R, false});
      Rng rng(p.seed);
      for (int i = 0; i < p.bump_count; ++i) {
        const double x = L * (i + 0.5) / p.bump_count;
        const double a = 2 * std::numbers::pi * rng.uniform01();
        s.ellipsoids.push_back({{x, R * std::cos(a), R * std::sin(a)}, {rho, rho, rho}, {0, 0, 0}});
      }
      s.nodes = 2, s.edges = 1;
      break;
    }
    case PhantomKind::cow_like_bumps: {
      // A body with four staggered legs and a row of shallow teats underneath.
      s.capsules.push_back({{0, 0, 0}, {L, 0, 0}, R, true});
      const double fx[4] = {0.25, 0.4, 0.6, 0.75};
      for (int i = 0; i < 4; ++i) {
        const Vec3 dir = unit({0, -1, i % 2 ? 0.35 : -0.35});
        const Vec3 hip{L * fx[i], 0, 0};
        s.capsules.push_back({hip, hip + (3.2 * R) * dir, 0.5 * R, false});
      }
      for (double f : {0.47, 0.5, 0.53})
        s.ellipsoids.push_back({{L * f, -R, 0}, {0.3 * R, 0.3 * R, 0.3 * R}, {0, 0, 0}});
      s.nodes = 10, s.edges = 9;
      break;
    }
    case PhantomKind::bump: {
      // A tube with one bump: the upper half of an ellipsoid on the axis,
      // bump_width diameters long, as thick as the tube, rising bump_height
      // diameters above the wall.
      if (!(p.bump_height > 0)) throw std::invalid_argument("bump_height must be positive");
      if (!(p.bump_width > 0)) throw std::invalid_argument("bump_width must be positive");
      const double D = 2 * R;
      if (p.round_bump) {
        // The stub's cap reaches the same height; round ends everywhere give
        // medial axes that end at cap centers at any resolution.
        s.capsules.push_back({{0, 0, 0}, {L, 0, 0}, R, true});
        s.capsules.push_back({{L / 2, 0, 0}, {L / 2, p.bump_height * D, 0}, R, true});
      } else {
        s.capsules.push_back({{0, 0, 0}, {L, 0, 0}, R, false});
        s.ellipsoids.push_back({{L / 2, 0, 0}, {p.bump_width * R, R + p.bump_height * D, R}, {0, 1, 0}});
      }
      s.nodes = 4, s.edges = 3;
      break;
    }
  }
  return s;
}

}  // namespace detail

// Dims that hold the phantom plus its margin at the given spacing.
inline Dims fitted_dims(const Phantom& p, Spacing sp = {}) {
  const auto b = detail::build_shape(p).box();
  Dims d;
  for (int a = 0; a < 3; ++a) {
    const auto n = static_cast<std::int64_t>(std::ceil((b.hi[a] - b.lo[a]) / sp[a])) + 1 +
                   2 * static_cast<std::int64_t>(std::ceil(p.margin));
    (a == 0 ? d.x : a == 1 ? d.y : d.z) = n;
  }
  return d;
}

// Rasterize `p` centered in a volume of `dims` (fitted dims when absent).
inline BinaryVolume synth_phantom(Workspace& ws, const Phantom& p, std::optional<Dims> dims = {}, Spacing sp = {},
                                  PhantomInfo* info = nullptr, const std::filesystem::path& out = {}) {
  if (!sp.valid()) throw std::invalid_argument("spacing must be positive");
  const detail::Shape shape = detail::build_shape(p);
  const detail::Box box = shape.box();
  const Dims need = fitted_dims(p, sp);
  const Dims d = dims.value_or(need);
  for (int a = 0; a < 3; ++a) {
    if (d[a] < need[a] - 2 * static_cast<std::int64_t>(std::ceil(p.margin))) {
      throw std::invalid_argument(std::string("phantom ") + to_string(p.kind) + " does not fit: needs " +
                                  std::to_string(need.x) + "x" + std::to_string(need.y) + "x" +
                                  std::to_string(need.z) + " voxels");
    }
  }
  // Voxel i of axis a sits at origin[a] + i * sp[a]; the shape is centered.
  double origin[3];
  for (int a = 0; a < 3; ++a) origin[a] = 0.5 * (box.lo[a] + box.hi[a]) - 0.5 * static_cast<double>(d[a] - 1) * sp[a];

  auto vol = make_binary(ws, out, d, sp);
  TrackedVector<VoxelState> slice(ws.memory(), static_cast<std::size_t>(d.plane()));
  std::int64_t fg = 0;

  auto index_range = [&](int a, double lo, double hi) {
    const auto i0 = static_cast<std::int64_t>(std::floor((lo - origin[a]) / sp[a]));
    const auto i1 = static_cast<std::int64_t>(std::ceil((hi - origin[a]) / sp[a]));
    return std::pair{std::max<std::int64_t>(0, i0), std::min<std::int64_t>(d[a] - 1, i1)};
  };
  auto paint = [&](std::int64_t z, const detail::Box& b, auto&& inside) {
    const double pz = origin[2] + static_cast<double>(z) * sp.z;
    if (pz < b.lo.z - sp.z || pz > b.hi.z + sp.z) return;
    const auto [y0, y1] = index_range(1, b.lo.y, b.hi.y);
    const auto [x0, x1] = index_range(0, b.lo.x, b.hi.x);
    for (std::int64_t y = y0; y <= y1; ++y)
      for (std::int64_t x = x0; x <= x1; ++x) {
        auto& v = slice[static_cast<std::size_t>(x + d.x * y)];
        if (v == VoxelState::background &&
            inside(Vec3{origin[0] + static_cast<double>(x) * sp.x, origin[1] + static_cast<double>(y) * sp.y, pz})) {
          v = VoxelState::foreground;
          ++fg;
        }
      }
  };
  for (std::int64_t z = 0; z < d.z; ++z) {
    std::fill(slice.begin(), slice.end(), VoxelState::background);
    for (auto& c : shape.capsules) paint(z, c.box(), [&](Vec3 q) { return c.inside(q); });
    for (auto& e : shape.ellipsoids) paint(z, e.box(), [&](Vec3 q) { return e.inside(q); });
    for (auto& t : shape.tori) paint(z, t.box(), [&](Vec3 q) { return t.inside(q); });
    vol.write_slice(z, {slice.data(), slice.size()});
  }
  if (info) *info = {d, sp, fg, shape.nodes, shape.edges};
  return vol;
}

}  // namespace vessel::harness
