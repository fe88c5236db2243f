#pragma once

// Per-point attributes gathered from the edge id volume, and per-edge
// features aggregated from them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "vessel/graph.hpp"
#include "vessel/point_index.hpp"
#include "vessel/volume.hpp"

namespace vessel {

class FeatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline bool is_surface(BinaryVolume::Accessor& fg, std::int64_t x, std::int64_t y, std::int64_t z) {
  return !is_set(fg.get(x - 1, y, z)) || !is_set(fg.get(x + 1, y, z)) || !is_set(fg.get(x, y - 1, z)) ||
         !is_set(fg.get(x, y + 1, z)) || !is_set(fg.get(x, y, z - 1)) || !is_set(fg.get(x, y, z + 1));
}

}  // namespace detail

// Fills edge.points for every edge (resetting previous values) and the
// junction-contact flags used by classify_inner_outer. Voxels without an
// edge id (unflooded cut-off regions) are skipped.
inline void accumulate_point_attributes(Workspace& ws, const BinaryVolume& fg, const EdgeIdVolume& ids,
                                        VesselGraph& g) {
  std::vector<IndexedPoint> pts;
  std::vector<std::size_t> starts;
  std::unordered_map<std::uint32_t, std::size_t> seg_of;
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    Edge& e = g.edges[k];
    seg_of.emplace(e.id, k);
    starts.push_back(pts.size());
    e.points.assign(e.centerline.size(), PointAttributes{});
    for (std::size_t i = 0; i < e.centerline.size(); ++i) pts.push_back({e.centerline[i], i});
  }
  const StaticPointIndex index(ws, std::move(pts), std::move(starts));

  const Dims d = fg.dims();
  const Spacing sp = fg.spacing();
  const double voxel_volume = sp.x * sp.y * sp.z;
  auto f = fg.accessor();
  auto fn = fg.accessor();  // neighborhood probes, kept apart from the block sweep
  auto l = ids.accessor();
  auto ln = ids.accessor();

  auto collect_contacts = [&](std::int64_t x, std::int64_t y, std::int64_t z, std::uint32_t own,
                              std::vector<std::uint32_t>& out) {
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy && !dz) continue;
          const std::int64_t qx = x + dx, qy = y + dy, qz = z + dz;
          if (!is_set(fn.get(qx, qy, qz))) continue;
          const std::uint32_t o = ln.get(qx, qy, qz);
          if (o == kUnassigned || o == own) continue;
          if (std::find(out.begin(), out.end(), o) != out.end()) continue;
          if (detail::is_surface(fn, qx, qy, qz)) out.insert(std::upper_bound(out.begin(), out.end(), o), o);
        }
  };

  for (std::int64_t bz = 0; bz < d.z; bz += kBlockEdge)
    for (std::int64_t by = 0; by < d.y; by += kBlockEdge)
      for (std::int64_t bx = 0; bx < d.x; bx += kBlockEdge) {
        const std::int64_t z1 = std::min(d.z, bz + kBlockEdge), y1 = std::min(d.y, by + kBlockEdge),
                           x1 = std::min(d.x, bx + kBlockEdge);
        for (std::int64_t z = bz; z < z1; ++z)
          for (std::int64_t y = by; y < y1; ++y)
            for (std::int64_t x = bx; x < x1; ++x) {
              if (!is_set(f.get(x, y, z))) continue;
              const std::uint32_t id = l.get(x, y, z);
              if (id == kUnassigned) continue;
              auto it = seg_of.find(id);
              if (it == seg_of.end()) {
                throw FeatureError("voxel (" + std::to_string(x) + "," + std::to_string(y) + "," +
                                   std::to_string(z) + ") labeled with unknown edge " + std::to_string(id));
              }
              Edge& e = g.edges[it->second];
              const Vec3 q = to_physical(Index3{x, y, z}, sp);
              const auto ties = index.nearest_all(q, it->second);
              if (ties.empty()) throw FeatureError("edge " + std::to_string(id) + " has no centerline points");
              const double share = voxel_volume / static_cast<double>(ties.size());
              for (const auto& t : ties) e.points[t.payload].volume += share;
              if (!detail::is_surface(fn, x, y, z)) continue;
              // nearest_all is sorted by point index: the first tie wins.
              PointAttributes& p = e.points[ties.front().payload];
              const double dist = distance(q, ties.front().pos);
              p.min_dist = std::min(p.min_dist, dist);
              p.max_dist = std::max(p.max_dist, dist);
              p.sum_dist += dist;
              ++p.surface_voxels;
              collect_contacts(x, y, z, id, p.contacts);
              p.junction_contact = !p.contacts.empty();
            }
      }
}

// A point is inner when it owns no surface voxel or one of its surface
// voxels touches a surface voxel of another edge. Contacts are re-checked
// against the current edge set, so after refinement a point touching only a
// pruned spur or a piece of its own merged edge is no longer inner.
inline void classify_inner_outer(VesselGraph& g) {
  for (Edge& e : g.edges)
    for (PointAttributes& p : e.points) {
      if (!p.contacts.empty())
        p.junction_contact = std::any_of(p.contacts.begin(), p.contacts.end(),
                                         [&](std::uint32_t c) { return c != e.id && g.has_edge(c); });
      p.inner = !p.has_distances() || p.junction_contact;
    }
}

inline std::optional<double> bulge_size_formula(double length, double inner_length_branch, std::optional<double> tip_radius_leaf,
                                                double avg_radius_mean) {
  if (!tip_radius_leaf || !(avg_radius_mean > 0)) return std::nullopt;
  return (length - inner_length_branch + *tip_radius_leaf) / avg_radius_mean;
}

namespace detail {

struct MeanStd {
  double mean = 0, std = 0;
};

inline MeanStd population_stats(const std::vector<double>& v) {
  if (v.empty()) return {};
  double s = 0;
  for (double x : v) s += x;
  const double m = s / static_cast<double>(v.size());
  double q = 0;
  for (double x : v) q += (x - m) * (x - m);
  return {m, std::sqrt(q / static_cast<double>(v.size()))};
}

// Arc length from node position `node` through the run of leading inner
// points of `pts` (taken in the given order).
template <class It>
double inner_run_length(const Vec3& node, It c_begin, It c_end, const std::vector<PointAttributes>& attrs,
                        bool reversed) {
  double len = 0;
  Vec3 prev = node;
  std::size_t k = 0;
  const std::size_t n = attrs.size();
  for (It c = c_begin; c != c_end; ++c, ++k) {
    const auto& a = attrs[reversed ? n - 1 - k : k];
    if (!a.inner) break;
    len += distance(prev, *c);
    prev = *c;
  }
  return len;
}

inline std::optional<double> tip_radius_at(const Vec3& node, const Edge& e) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < e.centerline.size(); ++i) {
    const double d2 = squared_distance(node, e.centerline[i]);
    if (d2 < bd) {
      bd = d2;
      best = i;
    }
  }
  if (e.points.size() != e.centerline.size() || !e.points[best].has_distances()) return std::nullopt;
  return e.points[best].min_dist;
}

}  // namespace detail

// Geometric and morphological features of one edge from its points and the
// positions of its end nodes. bulge_size is left to compute_graph_features,
// which knows node degrees.
inline EdgeFeatures compute_edge_features(const Edge& e, const Vec3& pa, const Vec3& pb) {
  EdgeFeatures f;
  const auto& c = e.centerline;
  if (!c.empty()) f.length = distance(pa, c.front()) + arc_length(c) + distance(c.back(), pb);
  f.distance = e.self_loop() ? 0.0 : distance(pa, pb);
  if (f.length > 0) {
    f.straightness = std::min(1.0, f.distance / f.length);
  } else {
    f.straightness = 1.0;
    f.zero_length = true;
  }
  std::vector<double> mins, maxs, avgs, rounds;
  for (const auto& p : e.points) {
    f.volume += p.volume;
    if (!p.has_distances()) continue;
    mins.push_back(p.min_dist);
    maxs.push_back(p.max_dist);
    avgs.push_back(p.avg_dist());
    rounds.push_back(p.roundness());
  }
  f.avg_cross_section = f.length > 0 ? f.volume / f.length : 0.0;
  const auto mn = detail::population_stats(mins), mx = detail::population_stats(maxs),
             av = detail::population_stats(avgs), rd = detail::population_stats(rounds);
  f.minRadiusMean = mn.mean;
  f.minRadiusStd = mn.std;
  f.maxRadiusMean = mx.mean;
  f.maxRadiusStd = mx.std;
  f.avgRadiusMean = av.mean;
  f.avgRadiusStd = av.std;
  f.roundnessMean = rd.mean;
  f.roundnessStd = rd.std;
  if (e.points.size() == c.size()) {
    f.inner_length_a = detail::inner_run_length(pa, c.begin(), c.end(), e.points, false);
    f.inner_length_b = detail::inner_run_length(pb, c.rbegin(), c.rend(), e.points, true);
  }
  f.tip_radius_a = detail::tip_radius_at(pa, e);
  f.tip_radius_b = detail::tip_radius_at(pb, e);
  return f;
}

// A bulging edge joins a leaf (degree 1) and a branching node (degree > 2).
inline bool is_bulging(const VesselGraph& g, const Edge& e, const std::vector<int>& deg) {
  if (e.self_loop()) return false;
  const int da = deg[g.node_index(e.a)], db = deg[g.node_index(e.b)];
  return (da == 1 && db > 2) || (db == 1 && da > 2);
}

inline void classify_inner_outer(VesselGraph& g);

inline void compute_graph_features(VesselGraph& g) {
  classify_inner_outer(g);
  const auto deg = g.degrees();
  for (Edge& e : g.edges) {
    e.features = compute_edge_features(e, g.node(e.a).pos, g.node(e.b).pos);
    if (!is_bulging(g, e, deg)) continue;
    const bool leaf_is_b = deg[g.node_index(e.b)] == 1;
    const double inner_branch = leaf_is_b ? e.features.inner_length_a : e.features.inner_length_b;
    const auto tip_leaf = leaf_is_b ? e.features.tip_radius_b : e.features.tip_radius_a;
    e.features.bulge_size =
        bulge_size_formula(e.features.length, inner_branch, tip_leaf, e.features.avgRadiusMean);
  }
}

// Full feature pass: attributes, inner/outer flags, per-edge features.
inline void extract_features(Workspace& ws, const BinaryVolume& fg, const EdgeIdVolume& ids, VesselGraph& g) {
  accumulate_point_attributes(ws, fg, ids, g);
  compute_graph_features(g);
}

}  // namespace vessel
