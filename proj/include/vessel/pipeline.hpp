#pragma once

// The extraction-refinement cycle. Each iteration thins a fresh copy of the
// segmentation, extracts the graph, assigns voxels to branches, computes
// features and refines. From the second iteration on, the voxels of leaf
// nodes (and loop anchors) from the previous refined graph are fixed so the
// new skeleton reproduces the refined topology without the pruned spurs.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "vessel/branch_assign.hpp"
#include "vessel/features.hpp"
#include "vessel/graph_extract.hpp"
#include "vessel/refine.hpp"
#include "vessel/thinning.hpp"
#include "vessel/volume.hpp"

namespace vessel {

struct PipelineConfig {
  double bulge_threshold = 1.5;
  std::optional<int> max_iterations;
  bool smoothing_enabled = true;

  void validate() const {
    RefinementConfig{bulge_threshold}.validate();
    if (max_iterations && *max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  }
};

struct StageTimes {
  double skeletonization = 0, extraction = 0, assignment = 0, features = 0, refinement = 0;
};

struct IterationStats {
  int iteration = 0;
  std::size_t node_count = 0, edge_count = 0;                // after refinement
  std::size_t proto_node_count = 0, proto_edge_count = 0;    // before refinement
  std::size_t fixed_voxels = 0;
  std::size_t cutoff_regions = 0;
  std::int64_t unassigned_voxels = 0;
  std::array<std::int64_t, 6> subiterations{};  // per direction: +x, -x, +y, -y, +z, -z
  std::size_t peak_tracked_bytes = 0;
  StageTimes seconds;
};

struct PipelineResult {
  VesselGraph graph;
  std::vector<IterationStats> iterations;
  std::vector<std::string> warnings;
};

// Deterministic fields only; wall times go through timings_json.
inline nlohmann::json stats_json(const IterationStats& s) {
  nlohmann::json j = nlohmann::json::object();
  j["iteration"] = s.iteration;
  j["node_count"] = s.node_count;
  j["edge_count"] = s.edge_count;
  j["proto_node_count"] = s.proto_node_count;
  j["proto_edge_count"] = s.proto_edge_count;
  j["fixed_voxels"] = s.fixed_voxels;
  j["cutoff_regions"] = s.cutoff_regions;
  j["unassigned_voxels"] = s.unassigned_voxels;
  j["subiterations"] = s.subiterations;
  j["peak_tracked_bytes"] = s.peak_tracked_bytes;
  return j;
}

inline nlohmann::json timings_json(const IterationStats& s) {
  nlohmann::json j = nlohmann::json::object();
  j["iteration"] = s.iteration;
  j["skeletonization_s"] = s.seconds.skeletonization;
  j["extraction_s"] = s.seconds.extraction;
  j["assignment_s"] = s.seconds.assignment;
  j["features_s"] = s.seconds.features;
  j["refinement_s"] = s.seconds.refinement;
  return j;
}

// Voxels to keep fixed in the next iteration: all voxels of degree-1 nodes
// plus the anchor of every self-loop.
inline std::vector<Index3> fixed_voxels_for(const VesselGraph& g) {
  std::vector<Index3> out;
  const auto deg = g.degrees();
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const Node& n = g.nodes[i];
    if (deg[i] == 1) out.insert(out.end(), n.voxels.begin(), n.voxels.end());
  }
  for (const Edge& e : g.edges)
    if (e.self_loop()) {
      const Node& n = g.node(e.a);
      if (!n.voxels.empty()) out.push_back(n.voxels.front());
    }
  std::sort(out.begin(), out.end(), [](const Index3& a, const Index3& b) {
    return std::tie(a.z, a.y, a.x) < std::tie(b.z, b.y, b.x);
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Called after each iteration with that iteration's refined graph.
using IterationObserver = std::function<void(const IterationStats&, const VesselGraph&)>;

inline PipelineResult run_pipeline(Workspace& ws, const BinaryVolume& fg, const PipelineConfig& cfg,
                                   const IterationObserver& observe = {}) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  PipelineResult res;
  std::vector<Index3> fixed;
  std::optional<std::size_t> last_edges;
  for (int it = 1;; ++it) {
    IterationStats st;
    st.iteration = it;
    ws.memory().reset_peak();

    auto t0 = clock::now();
    BinaryVolume skel = copy_volume(ws, fg);
    ThinningConfig tc;
    tc.preserve_line_ends = it == 1;
    tc.fixed_voxels = fixed;
    st.fixed_voxels = fixed.size();
    const ThinningStats ts = skeletonize(ws, skel, tc);
    st.subiterations = ts.subiterations;
    st.seconds.skeletonization = seconds_since(t0);

    t0 = clock::now();
    VesselGraph g = extract_proto_graph(ws, skel, {cfg.smoothing_enabled});
    st.seconds.extraction = seconds_since(t0);
    st.proto_node_count = g.nodes.size();
    st.proto_edge_count = g.edges.size();

    if (!g.edges.empty()) {
      t0 = clock::now();
      AssignmentReport ar;
      EdgeIdVolume ids = assign_branches(ws, fg, g, &ar);
      st.cutoff_regions = ar.flood.regions;
      st.unassigned_voxels = ar.flood.unassigned_voxels;
      for (auto e : ar.remap.unsampled_edges)
        res.warnings.push_back("iteration " + std::to_string(it) + ": edge " + std::to_string(e) +
                               " has no centerline sample in its own region");
      st.seconds.assignment = seconds_since(t0);

      t0 = clock::now();
      extract_features(ws, fg, ids, g);
      st.seconds.features = seconds_since(t0);

      t0 = clock::now();
      refine(g, RefinementConfig{cfg.bulge_threshold});
      st.seconds.refinement = seconds_since(t0);
    }
    st.node_count = g.nodes.size();
    st.edge_count = g.edges.size();
    st.peak_tracked_bytes = ws.memory().peak();
    res.iterations.push_back(st);
    if (observe) observe(st, g);

    const bool fixed_point = last_edges && *last_edges == g.edges.size();
    const bool limit = cfg.max_iterations && it >= *cfg.max_iterations;
    last_edges = g.edges.size();
    fixed = fixed_voxels_for(g);
    res.graph = std::move(g);
    if (res.graph.edges.empty() || fixed_point || limit) break;
  }
  return res;
}

inline void write_stats_jsonl(std::ostream& out, const std::vector<IterationStats>& stats) {
  for (const auto& s : stats) out << stats_json(s).dump() << "\n";
}

inline void write_timings_jsonl(std::ostream& out, const std::vector<IterationStats>& stats) {
  for (const auto& s : stats) out << timings_json(s).dump() << "\n";
}

}  // namespace vessel
