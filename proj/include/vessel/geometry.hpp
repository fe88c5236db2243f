#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace vessel {

// Integer voxel coordinate. Signed so that neighbor offsets may step outside
// the volume.
struct Index3 {
  std::int64_t x = 0, y = 0, z = 0;

  friend bool operator==(const Index3&, const Index3&) = default;
  friend Index3 operator+(Index3 a, Index3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Index3 operator-(Index3 a, Index3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
};

struct Dims {
  std::int64_t x = 0, y = 0, z = 0;

  friend bool operator==(const Dims&, const Dims&) = default;

  std::int64_t operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
  std::int64_t voxel_count() const { return x * y * z; }
  std::int64_t plane() const { return x * y; }

  bool contains(const Index3& p) const {
    return p.x >= 0 && p.y >= 0 && p.z >= 0 && p.x < x && p.y < y && p.z < z;
  }
  // Row-major linearization, x fastest.
  std::int64_t linear(const Index3& p) const { return p.x + x * (p.y + y * p.z); }
  Index3 unlinear(std::int64_t i) const {
    const std::int64_t pl = x * y;
    const std::int64_t zz = i / pl;
    const std::int64_t r = i - zz * pl;
    return {r % x, r / x, zz};
  }
};

struct Spacing {
  double x = 1.0, y = 1.0, z = 1.0;

  friend bool operator==(const Spacing&, const Spacing&) = default;

  double operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
  double voxel_volume() const { return x * y * z; }
  bool valid() const { return x > 0 && y > 0 && z > 0 && std::isfinite(x * y * z); }
};

// Physical-space point.
struct Vec3 {
  double x = 0, y = 0, z = 0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  Vec3& operator+=(Vec3 o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  double operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
};

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

inline double distance(const Vec3& a, const Vec3& b) { return std::sqrt(squared_distance(a, b)); }

inline Vec3 to_physical(const Index3& p, const Spacing& s) {
  return {static_cast<double>(p.x) * s.x, static_cast<double>(p.y) * s.y,
          static_cast<double>(p.z) * s.z};
}

// Nearest voxel to a physical point.
inline Index3 to_voxel(const Vec3& p, const Spacing& s) {
  return {std::llround(p.x / s.x), std::llround(p.y / s.y), std::llround(p.z / s.z)};
}

}  // namespace vessel
