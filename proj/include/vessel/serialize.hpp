#pragma once

// Graph files: strict JSON, physical coordinates. Unknown or missing fields
// are errors that name the field.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "vessel/graph.hpp"

namespace vessel {

class GraphFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

inline json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

inline json features_json(const EdgeFeatures& f) {
  json j = json::object();
  j["length"] = f.length;
  j["distance"] = f.distance;
  j["straightness"] = f.straightness;
  j["volume"] = f.volume;
  j["avg_cross_section"] = f.avg_cross_section;
  j["minRadiusMean"] = f.minRadiusMean;
  j["minRadiusStd"] = f.minRadiusStd;
  j["maxRadiusMean"] = f.maxRadiusMean;
  j["maxRadiusStd"] = f.maxRadiusStd;
  j["avgRadiusMean"] = f.avgRadiusMean;
  j["avgRadiusStd"] = f.avgRadiusStd;
  j["roundnessMean"] = f.roundnessMean;
  j["roundnessStd"] = f.roundnessStd;
  j["bulge_size"] = f.bulge_size ? json(*f.bulge_size) : json(nullptr);
  return j;
}

// Checks that `j` is an object holding exactly `keys`.
inline void expect_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw GraphFormatError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* s) { return k == s; })) {
      throw GraphFormatError(where + ": unknown field \"" + k + "\"");
    }
  }
  for (const char* k : keys)
    if (!j.contains(k)) throw GraphFormatError(where + ": missing field \"" + std::string(k) + "\"");
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw GraphFormatError(where + ": expected a number");
  return j.get<double>();
}

inline std::uint32_t id_value(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0 || j.get<std::int64_t>() > 0xFFFFFFFE) {
    throw GraphFormatError(where + ": expected a non-negative 32-bit integer");
  }
  return static_cast<std::uint32_t>(j.get<std::int64_t>());
}

inline Vec3 vec_value(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw GraphFormatError(where + ": expected [x, y, z]");
  return {number(j[0], where), number(j[1], where), number(j[2], where)};
}

}  // namespace detail

inline nlohmann::json graph_to_json(const VesselGraph& g) {
  using detail::json;
  json j = json::object();
  j["version"] = 1;
  j["spacing"] = json::array({g.spacing.x, g.spacing.y, g.spacing.z});
  json nodes = json::array();
  for (const Node& n : g.nodes) {
    json o = json::object();
    o["id"] = n.id;
    o["pos"] = detail::vec_json(n.pos);
    o["kind"] = to_string(n.kind);
    o["voxel_count"] = n.voxel_count;
    nodes.push_back(std::move(o));
  }
  json edges = json::array();
  for (const Edge& e : g.edges) {
    json o = json::object();
    o["id"] = e.id;
    o["a"] = e.a;
    o["b"] = e.b;
    json c = json::array();
    for (const Vec3& p : e.centerline) c.push_back(detail::vec_json(p));
    o["centerline"] = std::move(c);
    o["features"] = detail::features_json(e.features);
    edges.push_back(std::move(o));
  }
  j["nodes"] = std::move(nodes);
  j["edges"] = std::move(edges);
  return j;
}

inline VesselGraph graph_from_json(const nlohmann::json& j) {
  using detail::expect_keys;
  using detail::number;
  detail::expect_keys(j, {"version", "spacing", "nodes", "edges"}, "graph");
  if (j["version"] != 1) throw GraphFormatError("graph: unsupported version " + j["version"].dump());
  VesselGraph g;
  const Vec3 s = detail::vec_value(j["spacing"], "graph.spacing");
  g.spacing = {s.x, s.y, s.z};
  if (!j["nodes"].is_array()) throw GraphFormatError("graph.nodes: expected an array");
  if (!j["edges"].is_array()) throw GraphFormatError("graph.edges: expected an array");
  for (std::size_t i = 0; i < j["nodes"].size(); ++i) {
    const auto& o = j["nodes"][i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    expect_keys(o, {"id", "pos", "kind", "voxel_count"}, where);
    Node n;
    n.id = detail::id_value(o["id"], where + ".id");
    n.pos = detail::vec_value(o["pos"], where + ".pos");
    const auto& k = o["kind"];
    if (k == "end") n.kind = NodeKind::end;
    else if (k == "branch") n.kind = NodeKind::branch;
    else if (k == "loop") n.kind = NodeKind::loop;
    else throw GraphFormatError(where + ".kind: expected \"end\", \"branch\" or \"loop\"");
    if (!o["voxel_count"].is_number_integer()) throw GraphFormatError(where + ".voxel_count: expected an integer");
    n.voxel_count = o["voxel_count"].get<std::int64_t>();
    g.nodes.push_back(std::move(n));
  }
  for (std::size_t i = 0; i < j["edges"].size(); ++i) {
    const auto& o = j["edges"][i];
    const std::string where = "edges[" + std::to_string(i) + "]";
    expect_keys(o, {"id", "a", "b", "centerline", "features"}, where);
    Edge e;
    e.id = detail::id_value(o["id"], where + ".id");
    e.a = detail::id_value(o["a"], where + ".a");
    e.b = detail::id_value(o["b"], where + ".b");
    if (!o["centerline"].is_array()) throw GraphFormatError(where + ".centerline: expected an array");
    for (const auto& p : o["centerline"]) e.centerline.push_back(detail::vec_value(p, where + ".centerline"));
    const auto& f = o["features"];
    const std::string fw = where + ".features";
    expect_keys(f,
                {"length", "distance", "straightness", "volume", "avg_cross_section", "minRadiusMean", "minRadiusStd",
                 "maxRadiusMean", "maxRadiusStd", "avgRadiusMean", "avgRadiusStd", "roundnessMean", "roundnessStd",
                 "bulge_size"},
                fw);
    EdgeFeatures& x = e.features;
    x.length = number(f["length"], fw + ".length");
    x.distance = number(f["distance"], fw + ".distance");
    x.straightness = number(f["straightness"], fw + ".straightness");
    x.volume = number(f["volume"], fw + ".volume");
    x.avg_cross_section = number(f["avg_cross_section"], fw + ".avg_cross_section");
    x.minRadiusMean = number(f["minRadiusMean"], fw + ".minRadiusMean");
    x.minRadiusStd = number(f["minRadiusStd"], fw + ".minRadiusStd");
    x.maxRadiusMean = number(f["maxRadiusMean"], fw + ".maxRadiusMean");
    x.maxRadiusStd = number(f["maxRadiusStd"], fw + ".maxRadiusStd");
    x.avgRadiusMean = number(f["avgRadiusMean"], fw + ".avgRadiusMean");
    x.avgRadiusStd = number(f["avgRadiusStd"], fw + ".avgRadiusStd");
    x.roundnessMean = number(f["roundnessMean"], fw + ".roundnessMean");
    x.roundnessStd = number(f["roundnessStd"], fw + ".roundnessStd");
    if (!f["bulge_size"].is_null()) x.bulge_size = number(f["bulge_size"], fw + ".bulge_size");
    g.edges.push_back(std::move(e));
  }
  std::sort(g.nodes.begin(), g.nodes.end(), [](const Node& a, const Node& b) { return a.id < b.id; });
  std::sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) { return a.id < b.id; });
  try {
    g.check();
  } catch (const std::exception& ex) {
    throw GraphFormatError(std::string("graph: ") + ex.what());
  }
  return g;
}

inline std::string serialize_graph(const VesselGraph& g) { return graph_to_json(g).dump() + "\n"; }

// Parses a graph document; syntax errors report line and column.
inline VesselGraph deserialize_graph(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t off = std::min(e.byte > 0 ? e.byte - 1 : 0, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(off), '\n');
    const auto nl = text.rfind('\n', off == 0 ? 0 : off - 1);
    const std::size_t col = nl == std::string::npos || off == 0 ? off + 1 : off - nl;
    throw GraphFormatError("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                           " (byte " + std::to_string(e.byte) + ")");
  }
  return graph_from_json(j);
}

inline void write_graph_file(const VesselGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize_graph(g);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline VesselGraph read_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize_graph(ss.str());
  } catch (const GraphFormatError& e) {
    throw GraphFormatError(path.string() + ": " + e.what());
  }
}

}  // namespace vessel
