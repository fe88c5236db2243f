#pragma once

// Skeleton to centerline graph.
//
// One labeling sweep over the skeleton finds the components of END, REGULAR
// and BRANCH voxels separately. END/BRANCH components become nodes; each
// REGULAR component is a line whose tips are matched to nodes through a
// point index over all node voxels. A REGULAR component without tips is a
// closed loop and gets a synthetic anchor node.

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "vessel/graph.hpp"
#include "vessel/labeling.hpp"
#include "vessel/point_index.hpp"
#include "vessel/volume.hpp"

namespace vessel {

enum class SkeletonClass : std::uint32_t { end = 0, regular = 1, branch = 2 };

inline SkeletonClass classify(int neighbor_count) {
  return neighbor_count < 2 ? SkeletonClass::end : neighbor_count == 2 ? SkeletonClass::regular : SkeletonClass::branch;
}

class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Class keys of slice z (kNoKey for background); `win` must be centered on z.
inline void classify_slice(const SliceWindow<BinaryTraits>& win, Dims d, std::int64_t z, std::span<std::uint32_t> out) {
  for (std::int64_t y = 0; y < d.y; ++y) {
    for (std::int64_t x = 0; x < d.x; ++x) {
      std::uint32_t& k = out[static_cast<std::size_t>(x + d.x * y)];
      if (!is_set(win.at(x, y, z))) {
        k = kNoKey;
        continue;
      }
      int n = 0;
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) n += (dx || dy || dz) && is_set(win.at(x + dx, y + dy, z + dz));
      k = static_cast<std::uint32_t>(classify(n));
    }
  }
}

// Quadratic Bezier at t = 1/2 over (mid(p[i-1],p[i]), p[i], mid(p[i],p[i+1])),
// i.e. (p[i-1] + 6 p[i] + p[i+1]) / 8, with both endpoints kept.
inline std::vector<Vec3> smooth_centerline(const std::vector<Vec3>& pts) {
  std::vector<Vec3> out = pts;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    out[i] = 0.125 * (pts[i - 1] + 6.0 * pts[i] + pts[i + 1]);
  }
  return out;
}

namespace detail {

inline Vec3 voxel_point(const Index3& p) {
  return {static_cast<double>(p.x), static_cast<double>(p.y), static_cast<double>(p.z)};
}

inline bool adjacent26(const Index3& a, const Index3& b) {
  const auto d = a - b;
  return !(a == b) && std::abs(d.x) <= 1 && std::abs(d.y) <= 1 && std::abs(d.z) <= 1;
}

struct TipMatch {
  double d2;
  std::uint32_t node;
  std::int64_t pos;
};

// Node voxels 26-adjacent to `tip`, nearest first (physical distance, then node id, then position).
inline std::vector<TipMatch> node_candidates(const StaticPointIndex& index, const Index3& tip, const Dims& d,
                                             const Spacing& s) {
  const Vec3 c = voxel_point(tip);
  std::vector<TipMatch> out;
  for (const auto& e : index.box(c - Vec3{1, 1, 1}, c + Vec3{1, 1, 1})) {
    const Index3 v{static_cast<std::int64_t>(e.pos.x), static_cast<std::int64_t>(e.pos.y),
                   static_cast<std::int64_t>(e.pos.z)};
    if (v == tip) continue;
    out.push_back({squared_distance(to_physical(v, s), to_physical(tip, s)), static_cast<std::uint32_t>(e.payload),
                   d.linear(v)});
  }
  std::sort(out.begin(), out.end(), [](const TipMatch& a, const TipMatch& b) {
    return std::tie(a.d2, a.node, a.pos) < std::tie(b.d2, b.node, b.pos);
  });
  return out;
}

}  // namespace detail

struct ExtractOptions {
  bool smooth = true;
};

inline ProtoVesselGraph extract_proto_graph(Workspace& ws, const BinaryVolume& skel, ExtractOptions opt = {}) {
  const Dims d = skel.dims();
  const Spacing sp = skel.spacing();
  ProtoVesselGraph g;
  g.spacing = sp;

  std::vector<std::vector<Index3>> runs;
  SliceWindow<BinaryTraits> win(skel, 1);
  label_stream<VoxelListAccumulator>(
      ws, d, Connectivity::twenty_six,
      [&](std::int64_t z, std::span<std::uint32_t> keys) {
        win.center_on(z);
        classify_slice(win, d, z, keys);
      },
      [&](ClosedComponent<VoxelListAccumulator>&& c) {
        auto& vox = c.acc.voxels;
        std::sort(vox.begin(), vox.end(), [&](const Index3& a, const Index3& b) { return d.linear(a) < d.linear(b); });
        if (c.key == static_cast<std::uint32_t>(SkeletonClass::regular)) {
          runs.push_back(std::move(vox));
          return;
        }
        Node n;
        n.id = static_cast<std::uint32_t>(g.nodes.size());
        n.kind = c.key == static_cast<std::uint32_t>(SkeletonClass::end) ? NodeKind::end : NodeKind::branch;
        n.voxels = std::move(vox);
        g.nodes.push_back(std::move(n));
      });

  std::vector<IndexedPoint> node_points;
  for (const Node& n : g.nodes)
    for (const Index3& v : n.voxels) node_points.push_back({detail::voxel_point(v), n.id});
  const StaticPointIndex index(ws, std::move(node_points));

  auto add_edge = [&](std::uint32_t a, std::uint32_t b, std::vector<Index3> voxels) {
    Edge e;
    e.id = static_cast<std::uint32_t>(g.edges.size());
    e.a = a;
    e.b = b;
    for (const Index3& v : voxels) e.centerline.push_back(to_physical(v, sp));
    e.source_voxels = std::move(voxels);
    g.edges.push_back(std::move(e));
  };

  for (auto& run : runs) {
    std::unordered_map<std::int64_t, std::size_t> at;
    at.reserve(run.size() * 2);
    for (std::size_t i = 0; i < run.size(); ++i) at.emplace(d.linear(run[i]), i);
    auto run_neighbors = [&](std::size_t i) {
      std::vector<std::size_t> nb;
      const Index3 p = run[i];
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (!dx && !dy && !dz) continue;
            const Index3 q{p.x + dx, p.y + dy, p.z + dz};
            if (!d.contains(q)) continue;
            auto it = at.find(d.linear(q));
            if (it != at.end()) nb.push_back(it->second);
          }
      std::sort(nb.begin(), nb.end());  // run is sorted, so this is ascending position
      return nb;
    };
    auto walk = [&](std::size_t start, std::vector<char>& seen) {
      std::vector<Index3> path;
      std::size_t cur = start;
      for (;;) {
        seen[cur] = 1;
        path.push_back(run[cur]);
        std::size_t next = run.size();
        for (std::size_t n : run_neighbors(cur))
          if (!seen[n]) {
            next = n;
            break;
          }
        if (next == run.size()) break;
        cur = next;
      }
      return path;
    };

    std::vector<std::size_t> tips;
    for (std::size_t i = 0; i < run.size(); ++i)
      if (run_neighbors(i).size() < 2) tips.push_back(i);

    std::vector<char> seen(run.size(), 0);
    if (tips.empty()) {
      // Closed loop: anchor at the smallest voxel, centerline is the rest of the cycle.
      Node n;
      n.id = static_cast<std::uint32_t>(g.nodes.size());
      n.kind = NodeKind::loop;
      n.voxels = {run[0]};
      g.nodes.push_back(n);
      seen[0] = 1;
      const auto nb = run_neighbors(0);
      if (nb.empty()) throw StructuralError("degenerate loop at voxel " + std::to_string(d.linear(run[0])));
      add_edge(n.id, n.id, walk(nb.front(), seen));
      continue;
    }

    std::vector<Index3> path = walk(tips.front(), seen);
    if (path.size() != run.size()) {
      throw StructuralError("voxel run starting at " + std::to_string(d.linear(run[tips.front()])) +
                            " is not a simple line");
    }
    const auto first = detail::node_candidates(index, path.front(), d, sp);
    const auto last = detail::node_candidates(index, path.back(), d, sp);
    std::uint32_t a, b;
    if (path.size() == 1) {
      if (first.size() < 2) {
        throw StructuralError("dangling tip at voxel " + std::to_string(d.linear(path.front())));
      }
      a = first[0].node;
      b = first[1].node;
    } else {
      if (first.empty() || last.empty()) {
        const Index3 bad = first.empty() ? path.front() : path.back();
        throw StructuralError("dangling tip at voxel " + std::to_string(d.linear(bad)));
      }
      a = first[0].node;
      b = last[0].node;
    }
    add_edge(a, b, std::move(path));
  }

  // An end voxel touching a branch component directly has no regular voxels
  // in between; link it with a one-point edge placed at the end voxel.
  const std::size_t node_count = g.nodes.size();
  for (std::size_t i = 0; i < node_count; ++i) {
    const Node& n = g.nodes[i];
    if (n.kind != NodeKind::end) continue;
    for (const Index3& v : n.voxels) {
      const auto cand = detail::node_candidates(index, v, d, sp);
      for (const auto& c : cand) {
        if (c.node == n.id) continue;
        Edge e;
        e.id = static_cast<std::uint32_t>(g.edges.size());
        e.a = c.node;
        e.b = n.id;
        e.centerline = {to_physical(v, sp)};
        g.edges.push_back(std::move(e));
        break;
      }
    }
  }

  for (Node& n : g.nodes) {
    Vec3 sum;
    for (const Index3& v : n.voxels) sum += to_physical(v, sp);
    n.pos = (1.0 / static_cast<double>(n.voxels.size())) * sum;
    n.voxel_count = static_cast<std::int64_t>(n.voxels.size());
  }
  if (opt.smooth) {
    for (Edge& e : g.edges) e.centerline = smooth_centerline(e.centerline);
  }
  return g;
}

}  // namespace vessel
