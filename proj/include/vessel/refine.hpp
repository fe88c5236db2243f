#pragma once

// Graph refinement: prune bulging edges whose bulge size is below the
// threshold while keeping two edges at every node, drop orphaned nodes and
// merge degree-2 chains, until nothing more is pruned.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "vessel/features.hpp"
#include "vessel/graph.hpp"

namespace vessel {

struct RefinementConfig {
  double threshold = 1.5;

  void validate() const {
    if (!(threshold >= 0)) throw std::invalid_argument("refinement threshold must be >= 0");
  }
};

struct RefineReport {
  int passes = 0;
  std::size_t pruned = 0;
  std::size_t merged = 0;  // degree-2 nodes removed
  std::size_t orphans = 0;
};

// Removes every degree-2 node that is not the anchor of a self-loop by
// joining its two edges: centerlines are concatenated with the node's
// position as the junction point, point attributes likewise (the junction
// owns no voxels). The merged edge keeps the smaller id. When anything was
// merged, features are recomputed for the whole graph; point contacts follow
// the surviving ids so pieces of one edge no longer count as junctions.
inline std::size_t merge_degree2(VesselGraph& g) {
  std::map<std::uint32_t, Edge> edges;
  std::map<std::uint32_t, Node> nodes;
  std::map<std::uint32_t, std::vector<std::uint32_t>> inc;
  for (auto& n : g.nodes) {
    inc[n.id];
    nodes.emplace(n.id, std::move(n));
  }
  for (auto& e : g.edges) {
    inc[e.a].push_back(e.id);
    inc[e.b].push_back(e.id);
    edges.emplace(e.id, std::move(e));
  }
  std::vector<std::uint32_t> work;
  for (const auto& [id, list] : inc)
    if (list.size() == 2) work.push_back(id);

  std::map<std::uint32_t, std::uint32_t> renamed;  // absorbed id -> surviving id
  std::size_t merged = 0;
  for (std::uint32_t n : work) {
    auto& list = inc[n];
    if (list.size() != 2 || list[0] == list[1]) continue;
    const std::uint32_t i1 = std::min(list[0], list[1]), i2 = std::max(list[0], list[1]);
    Edge e1 = std::move(edges.at(i1));
    Edge e2 = std::move(edges.at(i2));
    edges.erase(i1);
    edges.erase(i2);
    // Orient e1 to end at n and e2 to start at n.
    auto flip = [](Edge& e) {
      std::swap(e.a, e.b);
      std::reverse(e.centerline.begin(), e.centerline.end());
      std::reverse(e.points.begin(), e.points.end());
      std::reverse(e.source_voxels.begin(), e.source_voxels.end());
    };
    if (e1.b != n) flip(e1);
    if (e2.a != n) flip(e2);
    const Node& mid = nodes.at(n);
    Edge m;
    m.id = i1;
    m.a = e1.a;
    m.b = e2.b;
    m.centerline = std::move(e1.centerline);
    m.centerline.push_back(mid.pos);
    m.centerline.insert(m.centerline.end(), e2.centerline.begin(), e2.centerline.end());
    if (e1.points.size() + e2.points.size() + 1 == m.centerline.size()) {
      m.points = std::move(e1.points);
      PointAttributes junction;
      junction.inner = true;
      m.points.push_back(junction);
      m.points.insert(m.points.end(), e2.points.begin(), e2.points.end());
    }
    m.source_voxels = std::move(e1.source_voxels);
    m.source_voxels.insert(m.source_voxels.end(), mid.voxels.begin(), mid.voxels.end());
    m.source_voxels.insert(m.source_voxels.end(), e2.source_voxels.begin(), e2.source_voxels.end());

    auto relink = [&](std::uint32_t node, std::uint32_t old_id) {
      auto& l = inc[node];
      *std::find(l.begin(), l.end(), old_id) = m.id;
    };
    relink(m.a, i1);
    relink(m.b, i2);
    inc.erase(n);
    nodes.erase(n);
    edges.emplace(m.id, std::move(m));
    renamed[i2] = i1;
    ++merged;
  }

  // Contacts still name absorbed edges; follow the renames to the survivor.
  if (!renamed.empty()) {
    auto survivor = [&](std::uint32_t id) {
      for (auto it = renamed.find(id); it != renamed.end(); it = renamed.find(id)) id = it->second;
      return id;
    };
    for (auto& [id, e] : edges)
      for (PointAttributes& p : e.points) {
        for (auto& c : p.contacts) c = survivor(c);
        std::sort(p.contacts.begin(), p.contacts.end());
        p.contacts.erase(std::unique(p.contacts.begin(), p.contacts.end()), p.contacts.end());
      }
  }

  g.nodes.clear();
  g.edges.clear();
  for (auto& [id, n] : nodes) g.nodes.push_back(std::move(n));
  for (auto& [id, e] : edges) g.edges.push_back(std::move(e));
  if (merged) compute_graph_features(g);
  return merged;
}

// Edges of one pass's deletion set, following the pruning algorithm with
// incidence degree (a self-loop counts twice at its node).
inline std::set<std::uint32_t> pruning_set(const VesselGraph& g, double t) {
  const auto deg = g.degrees();
  std::vector<std::vector<std::uint32_t>> inc(g.nodes.size());
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    const Edge& e = g.edges[k];
    inc[g.node_index(e.a)].push_back(static_cast<std::uint32_t>(k));
    if (e.b != e.a) inc[g.node_index(e.b)].push_back(static_cast<std::uint32_t>(k));
  }
  std::set<std::uint32_t> D;
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    std::vector<const Edge*> P;
    for (auto k : inc[n]) {
      const Edge& e = g.edges[k];
      if (is_bulging(g, e, deg) && e.features.bulge_size && *e.features.bulge_size < t) P.push_back(&e);
    }
    // Retain two edges: give back the largest bulge sizes (smaller id first on ties).
    while (!P.empty() && deg[n] - static_cast<int>(P.size()) < 2) {
      auto it = std::max_element(P.begin(), P.end(), [](const Edge* x, const Edge* y) {
        if (*x->features.bulge_size != *y->features.bulge_size) return *x->features.bulge_size < *y->features.bulge_size;
        return x->id > y->id;
      });
      P.erase(it);
    }
    for (const Edge* e : P) D.insert(e->id);
  }
  return D;
}

inline RefineReport refine(VesselGraph& g, const RefinementConfig& cfg) {
  cfg.validate();
  RefineReport rep;
  for (;;) {
    ++rep.passes;
    const auto D = pruning_set(g, cfg.threshold);
    if (D.empty()) {
      // Degree-2 nodes straight from extraction are merged too; a merged
      // edge may become prunable, so that counts as progress.
      const std::size_t m = merge_degree2(g);
      rep.merged += m;
      if (m == 0) break;
      continue;
    }
    std::erase_if(g.edges, [&](const Edge& e) { return D.count(e.id) != 0; });
    rep.pruned += D.size();
    const auto deg = g.degrees();
    std::vector<Node> kept;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (deg[i] == 0) ++rep.orphans;
      else kept.push_back(std::move(g.nodes[i]));
    }
    g.nodes = std::move(kept);
    const std::size_t m = merge_degree2(g);
    rep.merged += m;
    if (!m) compute_graph_features(g);  // degrees changed
  }
  return rep;
}

}  // namespace vessel
