#pragma once

// Summary comparison of two graphs: counts plus mean/std of every edge
// feature, with relative differences.

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "vessel/graph.hpp"

namespace vessel::harness {

struct FeatureSummary {
  std::string name;
  std::size_t count = 0;  // edges where the feature is defined
  double mean = 0, stddev = 0;
};

struct GraphSummary {
  std::size_t nodes = 0, edges = 0;
  std::vector<FeatureSummary> features;
};

namespace detail {

template <class Get>
FeatureSummary summarize(const std::string& name, const VesselGraph& g, Get get) {
  FeatureSummary f{name};
  double sum = 0, sq = 0;
  for (const Edge& e : g.edges) {
    const std::optional<double> v = get(e.features);
    if (!v) continue;
    ++f.count;
    sum += *v;
  }
  if (!f.count) return f;
  f.mean = sum / static_cast<double>(f.count);
  for (const Edge& e : g.edges)
    if (const std::optional<double> v = get(e.features)) sq += (*v - f.mean) * (*v - f.mean);
  f.stddev = std::sqrt(sq / static_cast<double>(f.count));
  return f;
}

// |a - b| relative to the larger magnitude; 0 when both are 0.
inline double relative_difference(double a, double b) {
  const double m = std::max(std::abs(a), std::abs(b));
  return m == 0 ? 0.0 : std::abs(a - b) / m;
}

}  // namespace detail

inline GraphSummary summarize_graph(const VesselGraph& g) {
  GraphSummary s{g.nodes.size(), g.edges.size(), {}};
#define VESSEL_FEATURE(field) \
  s.features.push_back(detail::summarize(#field, g, [](const EdgeFeatures& f) { return std::optional<double>(f.field); }))
  VESSEL_FEATURE(length);
  VESSEL_FEATURE(distance);
  VESSEL_FEATURE(straightness);
  VESSEL_FEATURE(volume);
  VESSEL_FEATURE(avg_cross_section);
  VESSEL_FEATURE(minRadiusMean);
  VESSEL_FEATURE(minRadiusStd);
  VESSEL_FEATURE(maxRadiusMean);
  VESSEL_FEATURE(maxRadiusStd);
  VESSEL_FEATURE(avgRadiusMean);
  VESSEL_FEATURE(avgRadiusStd);
  VESSEL_FEATURE(roundnessMean);
  VESSEL_FEATURE(roundnessStd);
#undef VESSEL_FEATURE
  s.features.push_back(detail::summarize("bulge_size", g, [](const EdgeFeatures& f) { return f.bulge_size; }));
  return s;
}

struct GraphComparison {
  GraphSummary a, b;
  bool structural_mismatch = false;  // node or edge counts differ
  double node_difference = 0, edge_difference = 0;
  std::vector<double> mean_difference, std_difference;  // per feature, relative
};

inline GraphComparison compare_graph_summaries(const VesselGraph& a, const VesselGraph& b) {
  GraphComparison c;
  c.a = summarize_graph(a);
  c.b = summarize_graph(b);
  c.structural_mismatch = c.a.nodes != c.b.nodes || c.a.edges != c.b.edges;
  c.node_difference = detail::relative_difference(double(c.a.nodes), double(c.b.nodes));
  c.edge_difference = detail::relative_difference(double(c.a.edges), double(c.b.edges));
  for (std::size_t i = 0; i < c.a.features.size(); ++i) {
    c.mean_difference.push_back(detail::relative_difference(c.a.features[i].mean, c.b.features[i].mean));
    c.std_difference.push_back(detail::relative_difference(c.a.features[i].stddev, c.b.features[i].stddev));
  }
  return c;
}

inline nlohmann::json comparison_json(const GraphComparison& c) {
  using nlohmann::json;
  json j = json::object();
  j["nodes"] = {c.a.nodes, c.b.nodes};
  j["edges"] = {c.a.edges, c.b.edges};
  j["structural_mismatch"] = c.structural_mismatch;
  j["node_difference"] = c.node_difference;
  j["edge_difference"] = c.edge_difference;
  json f = json::object();
  for (std::size_t i = 0; i < c.a.features.size(); ++i) {
    const auto &x = c.a.features[i], &y = c.b.features[i];
    f[x.name] = {{"a", {{"count", x.count}, {"mean", x.mean}, {"std", x.stddev}}},
                 {"b", {{"count", y.count}, {"mean", y.mean}, {"std", y.stddev}}},
                 {"mean_difference", c.mean_difference[i]},
                 {"std_difference", c.std_difference[i]}};
  }
  j["features"] = std::move(f);
  return j;
}

}  // namespace vessel::harness
