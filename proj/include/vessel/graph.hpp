#pragma once

// Centerline graph data model shared by extraction, features and refinement.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vessel/geometry.hpp"

namespace vessel {

enum class NodeKind { end, branch, loop };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::end: return "end";
    case NodeKind::branch: return "branch";
    default: return "loop";
  }
}

struct Node {
  std::uint32_t id = 0;
  NodeKind kind = NodeKind::end;
  Vec3 pos;
  std::vector<Index3> voxels;
  std::int64_t voxel_count = 0;  // survives serialization, which drops the voxel list
};

// Per-centerline-point measurements gathered from the labeled volume.
struct PointAttributes {
  double volume = 0.0;
  double min_dist = std::numeric_limits<double>::infinity();
  double max_dist = 0.0;
  double sum_dist = 0.0;
  std::int64_t surface_voxels = 0;
  bool junction_contact = false;  // a surface voxel touches another edge's surface
  std::vector<std::uint32_t> contacts;  // ids of the edges touched, sorted
  bool inner = false;

  bool has_distances() const { return surface_voxels > 0; }
  double avg_dist() const { return surface_voxels > 0 ? sum_dist / static_cast<double>(surface_voxels) : 0.0; }
  double roundness() const { return max_dist > 0 ? min_dist / max_dist : 1.0; }
};

struct EdgeFeatures {
  double length = 0, distance = 0, straightness = 0, volume = 0, avg_cross_section = 0;
  double minRadiusMean = 0, minRadiusStd = 0, maxRadiusMean = 0, maxRadiusStd = 0;
  double avgRadiusMean = 0, avgRadiusStd = 0, roundnessMean = 0, roundnessStd = 0;
  std::optional<double> bulge_size;
  double inner_length_a = 0, inner_length_b = 0;
  std::optional<double> tip_radius_a, tip_radius_b;
  bool zero_length = false;
};

struct Edge {
  std::uint32_t id = 0;
  std::uint32_t a = 0, b = 0;
  std::vector<Vec3> centerline;
  std::vector<Index3> source_voxels;
  std::vector<PointAttributes> points;  // parallel to centerline once features are computed
  EdgeFeatures features;

  bool self_loop() const { return a == b; }
};

struct VesselGraph {
  Spacing spacing;
  std::vector<Node> nodes;  // sorted by id
  std::vector<Edge> edges;  // sorted by id

  const Node& node(std::uint32_t id) const { return *find_node(id); }
  Node& node(std::uint32_t id) { return const_cast<Node&>(*std::as_const(*this).find_node(id)); }
  const Edge& edge(std::uint32_t id) const { return *find_edge(id); }
  Edge& edge(std::uint32_t id) { return const_cast<Edge&>(*std::as_const(*this).find_edge(id)); }
  bool has_edge(std::uint32_t id) const {
    auto it = std::lower_bound(edges.begin(), edges.end(), id, [](const Edge& e, std::uint32_t v) { return e.id < v; });
    return it != edges.end() && it->id == id;
  }

  // Incidence degree: a self-loop counts twice.
  std::vector<int> degrees() const {
    std::vector<int> deg(nodes.size(), 0);
    for (const Edge& e : edges) {
      ++deg[node_index(e.a)];
      ++deg[node_index(e.b)];
    }
    return deg;
  }
  int degree(std::uint32_t id) const { return degrees()[node_index(id)]; }

  std::size_t node_index(std::uint32_t id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id, [](const Node& n, std::uint32_t v) { return n.id < v; });
    if (it == nodes.end() || it->id != id) throw std::out_of_range("no node " + std::to_string(id));
    return static_cast<std::size_t>(it - nodes.begin());
  }

  // Throws if an edge references a missing node or ids are not sorted and unique.
  void check() const {
    for (std::size_t i = 1; i < nodes.size(); ++i)
      if (nodes[i - 1].id >= nodes[i].id) throw std::logic_error("node ids not ascending");
    for (std::size_t i = 1; i < edges.size(); ++i)
      if (edges[i - 1].id >= edges[i].id) throw std::logic_error("edge ids not ascending");
    for (const Edge& e : edges) {
      node_index(e.a);
      node_index(e.b);
    }
  }

 private:
  const Node* find_node(std::uint32_t id) const { return &nodes[node_index(id)]; }
  const Edge* find_edge(std::uint32_t id) const {
    auto it = std::lower_bound(edges.begin(), edges.end(), id, [](const Edge& e, std::uint32_t v) { return e.id < v; });
    if (it == edges.end() || it->id != id) throw std::out_of_range("no edge " + std::to_string(id));
    return &*it;
  }
};

using ProtoVesselGraph = VesselGraph;

inline double arc_length(const std::vector<Vec3>& pts) {
  double s = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) s += distance(pts[i - 1], pts[i]);
  return s;
}

}  // namespace vessel
