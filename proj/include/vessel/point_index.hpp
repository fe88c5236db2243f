#pragma once

// Static k-d trees over 3-D points with 64-bit payloads, stored in a
// scratch file and memory-mapped read-only.
//
// A tree over entries [lo, hi) is implicit: the median entry sits at
// mid = (lo + hi) / 2 and splits on the axis of largest extent of its
// subset. Each subtree root also stores the tight bounding box of its
// subtree; axes and boxes follow the entries in the file. Centerlines are
// nearly collinear, so splitting planes alone bound cells only along the
// run and a query a radius away would visit every point within a radius
// along it; the boxes prune those too.
// Several independent
// trees ("segments") can share one file; segment s spans entries
// [offset[s], offset[s+1]).

#include <sys/mman.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <stdexcept>
#include <system_error>
#include <vector>

#include "vessel/geometry.hpp"
#include "vessel/memory.hpp"
#include "vessel/volume.hpp"

namespace vessel {

struct IndexedPoint {
  Vec3 pos;
  std::uint64_t payload = 0;
};

struct NearestResult {
  double d2 = std::numeric_limits<double>::infinity();
  std::uint64_t payload = 0;
  Vec3 pos;
  bool found() const { return d2 != std::numeric_limits<double>::infinity(); }
};

class StaticPointIndex {
 public:
  StaticPointIndex() = default;

  // Single tree.
  StaticPointIndex(Workspace& ws, std::vector<IndexedPoint> points)
      : StaticPointIndex(ws, std::move(points), {0}) {}

  // `starts[s]` is the first entry of segment s; segments are contiguous.
  StaticPointIndex(Workspace& ws, std::vector<IndexedPoint> points, std::vector<std::size_t> starts) {
    offsets_ = std::move(starts);
    offsets_.push_back(points.size());
    std::vector<std::uint8_t> axes(points.size(), 0);
    std::vector<Bounds> bounds(points.size());
    for (std::size_t s = 0; s + 1 < offsets_.size(); ++s) {
      if (offsets_[s] > offsets_[s + 1]) throw std::invalid_argument("segment offsets must be ascending");
      build(points, axes, bounds, offsets_[s], offsets_[s + 1]);
    }
    count_ = points.size();
    if (count_ == 0) return;
    path_ = ws.temp_path("kdtree");
    {
      detail::FileHandle f(path_, O_RDWR | O_CREAT | O_TRUNC);
      const std::size_t point_bytes = count_ * sizeof(IndexedPoint);
      const std::size_t bound_bytes = count_ * sizeof(Bounds);
      f.write_at(points.data(), point_bytes, 0);
      f.write_at(bounds.data(), bound_bytes, point_bytes);
      f.write_at(axes.data(), count_, point_bytes + bound_bytes);
      map_bytes_ = point_bytes + bound_bytes + count_;
      void* p = ::mmap(nullptr, map_bytes_, PROT_READ, MAP_SHARED, f.fd(), 0);
      if (p == MAP_FAILED) throw std::system_error(errno, std::generic_category(), "mmap");
      data_ = static_cast<const IndexedPoint*>(p);
      bounds_ = reinterpret_cast<const Bounds*>(data_ + count_);
      axes_ = reinterpret_cast<const std::uint8_t*>(bounds_ + count_);
    }
  }

  StaticPointIndex(const StaticPointIndex&) = delete;
  StaticPointIndex& operator=(const StaticPointIndex&) = delete;
  StaticPointIndex(StaticPointIndex&& o) noexcept { *this = std::move(o); }
  StaticPointIndex& operator=(StaticPointIndex&& o) noexcept {
    if (this != &o) {
      unmap();
      data_ = std::exchange(o.data_, nullptr);
      axes_ = std::exchange(o.axes_, nullptr);
      bounds_ = std::exchange(o.bounds_, nullptr);
      count_ = std::exchange(o.count_, 0);
      map_bytes_ = std::exchange(o.map_bytes_, 0);
      offsets_ = std::move(o.offsets_);
      path_ = std::move(o.path_);
      o.path_.clear();
    }
    return *this;
  }
  ~StaticPointIndex() { unmap(); }

  std::size_t size() const { return count_; }
  std::size_t segments() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t segment_size(std::size_t s) const { return offsets_[s + 1] - offsets_[s]; }

  // Nearest entry; among equidistant entries the smallest payload wins.
  NearestResult nearest(const Vec3& q, std::size_t segment = 0) const {
    NearestResult best;
    if (segment >= segments()) return best;
    if (segment_size(segment) > 0) nearest_rec(q, offsets_[segment], offsets_[segment + 1], best);
    return best;
  }

  // All entries at exactly the minimum distance, ordered by payload.
  std::vector<IndexedPoint> nearest_all(const Vec3& q, std::size_t segment = 0) const {
    std::vector<IndexedPoint> out;
    const NearestResult best = nearest(q, segment);
    if (!best.found()) return out;
    ball_rec(q, best.d2, offsets_[segment], offsets_[segment + 1], out);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.payload < b.payload; });
    return out;
  }

  // Entries inside the closed box [lo, hi].
  std::vector<IndexedPoint> box(const Vec3& lo, const Vec3& hi, std::size_t segment = 0) const {
    std::vector<IndexedPoint> out;
    if (segment < segments()) box_rec(lo, hi, offsets_[segment], offsets_[segment + 1], out);
    return out;
  }

 private:
  static double coord(const Vec3& v, int axis) { return axis == 0 ? v.x : axis == 1 ? v.y : v.z; }

  struct Bounds {
    Vec3 lo, hi;
  };

  // Squared distance from q to the box, summed in the same axis order as
  // squared_distance so it never exceeds the distance to a point inside.
  static double box_d2(const Vec3& q, const Bounds& b) {
    auto gap = [](double v, double lo, double hi) { return v < lo ? lo - v : v > hi ? v - hi : 0.0; };
    const double dx = gap(q.x, b.lo.x, b.hi.x), dy = gap(q.y, b.lo.y, b.hi.y), dz = gap(q.z, b.lo.z, b.hi.z);
    return dx * dx + dy * dy + dz * dz;
  }

  static void build(std::vector<IndexedPoint>& pts, std::vector<std::uint8_t>& axes, std::vector<Bounds>& bounds,
                    std::size_t lo, std::size_t hi) {
    if (lo >= hi) return;
    Vec3 mn = pts[lo].pos, mx = pts[lo].pos;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const Vec3& p = pts[i].pos;
      mn = {std::min(mn.x, p.x), std::min(mn.y, p.y), std::min(mn.z, p.z)};
      mx = {std::max(mx.x, p.x), std::max(mx.y, p.y), std::max(mx.z, p.z)};
    }
    const Vec3 ext = mx - mn;
    const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : ext.y >= ext.z ? 1 : 2;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(pts.begin() + static_cast<std::ptrdiff_t>(lo), pts.begin() + static_cast<std::ptrdiff_t>(mid),
                     pts.begin() + static_cast<std::ptrdiff_t>(hi), [axis](const auto& a, const auto& b) {
                       return coord(a.pos, axis) < coord(b.pos, axis);
                     });
    axes[mid] = static_cast<std::uint8_t>(axis);
    bounds[mid] = {mn, mx};
    build(pts, axes, bounds, lo, mid);
    build(pts, axes, bounds, mid + 1, hi);
  }

  // Subtree [lo, hi) may hold an entry within d2 of q (ties included).
  bool reachable(const Vec3& q, std::size_t lo, std::size_t hi, double d2) const {
    return lo < hi && box_d2(q, bounds_[lo + (hi - lo) / 2]) <= d2;
  }

  void nearest_rec(const Vec3& q, std::size_t lo, std::size_t hi, NearestResult& best) const {
    const std::size_t mid = lo + (hi - lo) / 2;
    const IndexedPoint& e = data_[mid];
    const double d2 = squared_distance(q, e.pos);
    if (d2 < best.d2 || (d2 == best.d2 && e.payload < best.payload)) best = {d2, e.payload, e.pos};
    const int axis = axes_[mid];
    const bool left_first = coord(q, axis) < coord(e.pos, axis);
    const std::size_t a_lo = left_first ? lo : mid + 1, a_hi = left_first ? mid : hi;
    const std::size_t b_lo = left_first ? mid + 1 : lo, b_hi = left_first ? hi : mid;
    // Equal-distance entries may sit anywhere, so only strictly farther boxes prune.
    if (reachable(q, a_lo, a_hi, best.d2)) nearest_rec(q, a_lo, a_hi, best);
    if (reachable(q, b_lo, b_hi, best.d2)) nearest_rec(q, b_lo, b_hi, best);
  }

  void ball_rec(const Vec3& q, double r2, std::size_t lo, std::size_t hi, std::vector<IndexedPoint>& out) const {
    const std::size_t mid = lo + (hi - lo) / 2;
    const IndexedPoint& e = data_[mid];
    if (squared_distance(q, e.pos) <= r2) out.push_back(e);
    if (reachable(q, lo, mid, r2)) ball_rec(q, r2, lo, mid, out);
    if (reachable(q, mid + 1, hi, r2)) ball_rec(q, r2, mid + 1, hi, out);
  }

  void box_rec(const Vec3& lo_q, const Vec3& hi_q, std::size_t lo, std::size_t hi,
               std::vector<IndexedPoint>& out) const {
    if (lo >= hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const IndexedPoint& e = data_[mid];
    const Vec3& p = e.pos;
    if (p.x >= lo_q.x && p.x <= hi_q.x && p.y >= lo_q.y && p.y <= hi_q.y && p.z >= lo_q.z && p.z <= hi_q.z) {
      out.push_back(e);
    }
    const int axis = axes_[mid];
    const double c = coord(p, axis);
    if (coord(lo_q, axis) <= c) box_rec(lo_q, hi_q, lo, mid, out);
    if (coord(hi_q, axis) >= c) box_rec(lo_q, hi_q, mid + 1, hi, out);
  }

  void unmap() {
    if (data_) ::munmap(const_cast<IndexedPoint*>(data_), map_bytes_);
    data_ = nullptr;
    if (!path_.empty()) {
      std::error_code ec;
      std::filesystem::remove(path_, ec);
    }
  }

  const IndexedPoint* data_ = nullptr;
  const Bounds* bounds_ = nullptr;
  const std::uint8_t* axes_ = nullptr;
  std::size_t count_ = 0;
  std::size_t map_bytes_ = 0;
  std::vector<std::size_t> offsets_;
  std::filesystem::path path_;
};

}  // namespace vessel
