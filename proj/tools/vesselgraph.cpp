// vesselgraph: command-line front end for the volume tools and the
// extraction pipeline. Volumes are VGV1 files, graphs are JSON.

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vessel/harness.hpp"
#include "vessel/pipeline.hpp"
#include "vessel/preprocess.hpp"
#include "vessel/serialize.hpp"
#include "vessel/volume.hpp"

namespace fs = std::filesystem;
using namespace vessel;
using nlohmann::json;

namespace {

// Scratch and budget options shared by every subcommand.
struct Env {
  std::string scratch;
  std::uint64_t budget = std::uint64_t{256} << 20;
  std::uint64_t disk_quota = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--scratch", scratch, "Directory for temporary files (default: a fresh temp dir)");
    cmd->add_option("--memory-budget", budget, "Tracked buffer budget, e.g. 268435456 or 256MB")
        ->transform(CLI::AsSizeValue(false))
        ->capture_default_str();
    cmd->add_option("--disk-quota", disk_quota, "Refuse to create volume files beyond this size (0: none)")
        ->transform(CLI::AsSizeValue(false));
  }
};

// Owns a default scratch directory for the lifetime of the command.
class Scratch {
 public:
  explicit Scratch(const Env& env) {
    if (!env.scratch.empty()) {
      dir_ = env.scratch;
      return;
    }
    dir_ = fs::temp_directory_path() / ("vesselgraph-" + std::to_string(::getpid()));
    owned_ = true;
  }
  ~Scratch() {
    if (owned_) {
      std::error_code ec;
      fs::remove_all(dir_, ec);
    }
  }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  bool owned_ = false;
};

void finish(BinaryVolume& v, const std::string& out) {
  v.flush();
  std::cerr << "wrote " << out << " (" << v.dims().x << "x" << v.dims().y << "x" << v.dims().z << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Out-of-core vessel graph extraction from binary volumes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vesselgraph 1.0");

  // synth
  Env synth_env;
  harness::Phantom ph;
  std::string kind = "cylinder", synth_out;
  std::vector<std::int64_t> synth_dims;
  std::vector<double> synth_spacing{1, 1, 1};
  auto* synth = app.add_subcommand("synth", "Rasterize a phantom");
  synth->add_option("--kind", kind, "cylinder|y_junction|torus|bumpy_tube|cow_like_bumps|bump")->capture_default_str();
  synth->add_option("--radius", ph.radius, "Vessel radius (physical units)")->capture_default_str();
  synth->add_option("--length", ph.length, "Tube length, or arm length for y_junction")->capture_default_str();
  synth->add_option("--major-radius", ph.major_radius, "Torus ring radius")->capture_default_str();
  synth->add_option("--bump-count", ph.bump_count, "Bumps on a bumpy_tube")->capture_default_str();
  synth->add_option("--bump-radius", ph.bump_radius, "Bump sphere radius (0: 0.6 x radius)")->capture_default_str();
  synth->add_option("--bump-height", ph.bump_height, "bump: height above the wall in diameters")->capture_default_str();
  synth->add_option("--bump-width", ph.bump_width, "bump: extent along the vessel in diameters")->capture_default_str();
  synth->add_flag("--round-bump", ph.round_bump, "bump: round-capped stub instead of a half ellipsoid");
  synth->add_option("--seed", ph.seed, "Random seed")->capture_default_str();
  synth->add_option("--margin", ph.margin, "Empty border in voxels")->capture_default_str();
  synth->add_option("--dims", synth_dims, "Volume size X Y Z (default: fitted)")->expected(3);
  synth->add_option("--spacing", synth_spacing, "Voxel spacing X Y Z")->expected(3);
  synth->add_option("-o,--out", synth_out, "Output volume")->required();
  synth_env.add_to(synth);

  // import
  Env import_env;
  std::string raw_in, import_out;
  std::vector<std::int64_t> import_dims;
  std::vector<double> import_spacing{1, 1, 1};
  auto* imp = app.add_subcommand("import", "Convert a raw byte-per-voxel volume (nonzero = foreground)");
  imp->add_option("input", raw_in, "Raw file")->required()->check(CLI::ExistingFile);
  imp->add_option("--dims", import_dims, "Volume size X Y Z")->required()->expected(3);
  imp->add_option("--spacing", import_spacing, "Voxel spacing X Y Z")->expected(3);
  imp->add_option("-o,--out", import_out, "Output volume")->required();
  import_env.add_to(imp);

  // scale
  Env scale_env;
  std::string scale_in, scale_out, strategy = "resample";
  int factor = 2;
  auto* scale = app.add_subcommand("scale", "Enlarge a volume by resampling or mirrored tiling");
  scale->add_option("input", scale_in, "Input volume")->required()->check(CLI::ExistingFile);
  scale->add_option("--factor", factor, "Scale factor per axis")->check(CLI::PositiveNumber)->capture_default_str();
  scale->add_option("--strategy", strategy, "resample|mirror")->capture_default_str();
  scale->add_option("-o,--out", scale_out, "Output volume")->required();
  scale_env.add_to(scale);

  // noise
  Env noise_env;
  std::string noise_in, noise_out;
  double level = 0.1;
  std::uint64_t noise_seed = 1;
  auto* noise = app.add_subcommand("noise", "Flip surface voxels without changing topology");
  noise->add_option("input", noise_in, "Input volume")->required()->check(CLI::ExistingFile);
  noise->add_option("--level", level, "Fraction of the surface voxel count to flip")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  noise->add_option("--seed", noise_seed, "Random seed")->capture_default_str();
  noise->add_option("-o,--out", noise_out, "Output volume")->required();
  noise_env.add_to(noise);

  // preprocess
  Env pre_env;
  std::string pre_in, pre_out;
  std::int64_t cavity_size = 0;
  int median_radius = 0;
  auto* pre = app.add_subcommand("preprocess", "Fill small cavities and/or median-filter a volume");
  pre->add_option("input", pre_in, "Input volume")->required()->check(CLI::ExistingFile);
  pre->add_option("--fill-cavities", cavity_size, "Fill enclosed background components smaller than N voxels")
      ->check(CLI::NonNegativeNumber);
  pre->add_option("--median", median_radius, "Median filter radius R (cube of side 2R+1)")->check(CLI::NonNegativeNumber);
  pre->add_option("-o,--out", pre_out, "Output volume")->required();
  pre_env.add_to(pre);

  // extract
  Env ex_env;
  std::string ex_in, ex_out, stats_path, timings_path;
  PipelineConfig cfg;
  int max_iter = 0;
  bool no_smoothing = false;
  auto* ex = app.add_subcommand("extract", "Extract and refine the vessel graph");
  ex->add_option("input", ex_in, "Binary volume")->required()->check(CLI::ExistingFile);
  ex->add_option("--bulge-size", cfg.bulge_threshold, "Pruning threshold")->check(CLI::NonNegativeNumber)->capture_default_str();
  ex->add_option("--max-iter", max_iter, "Stop after K iterations (default: until the edge count is stable)")
      ->check(CLI::PositiveNumber);
  ex->add_flag("--no-smoothing", no_smoothing, "Keep raw voxel centerlines");
  ex->add_option("--stats", stats_path, "Write per-iteration statistics (JSON lines)");
  ex->add_option("--timings", timings_path, "Write per-iteration stage wall times (JSON lines)");
  ex->add_option("-o,--out", ex_out, "Output graph (JSON)")->required();
  ex_env.add_to(ex);

  // compare
  std::string cmp_a, cmp_b, cmp_out;
  auto* cmp = app.add_subcommand("compare", "Compare feature summaries of two graphs");
  cmp->add_option("a", cmp_a, "First graph")->required()->check(CLI::ExistingFile);
  cmp->add_option("b", cmp_b, "Second graph")->required()->check(CLI::ExistingFile);
  cmp->add_option("-o,--out", cmp_out, "Write the report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      Scratch s(synth_env);
      Workspace ws(s.dir(), synth_env.budget, synth_env.disk_quota);
      ph.kind = harness::parse_phantom_kind(kind);
      harness::PhantomInfo info;
      std::optional<Dims> d;
      if (!synth_dims.empty()) d = Dims{synth_dims[0], synth_dims[1], synth_dims[2]};
      auto v = harness::synth_phantom(ws, ph, d, {synth_spacing[0], synth_spacing[1], synth_spacing[2]}, &info,
                                      synth_out);
      finish(v, synth_out);
      std::cout << json{{"dims", {info.dims.x, info.dims.y, info.dims.z}},
                        {"foreground", info.foreground},
                        {"expected_nodes", info.expected_nodes},
                        {"expected_edges", info.expected_edges}}
                       .dump()
                << "\n";
    } else if (*imp) {
      Scratch s(import_env);
      Workspace ws(s.dir(), import_env.budget, import_env.disk_quota);
      auto v = import_raw(ws, raw_in, import_out, {import_dims[0], import_dims[1], import_dims[2]},
                          {import_spacing[0], import_spacing[1], import_spacing[2]});
      finish(v, import_out);
    } else if (*scale) {
      Scratch s(scale_env);
      Workspace ws(s.dir(), scale_env.budget, scale_env.disk_quota);
      const auto in = BinaryVolume::open(ws, scale_in);
      auto v = harness::scale_volume(ws, in, factor, harness::parse_scale_strategy(strategy), scale_out);
      finish(v, scale_out);
    } else if (*noise) {
      Scratch s(noise_env);
      Workspace ws(s.dir(), noise_env.budget, noise_env.disk_quota);
      const auto in = BinaryVolume::open(ws, noise_in);
      harness::NoiseReport rep;
      auto v = harness::add_surface_noise(ws, in, level, noise_seed, &rep, noise_out);
      finish(v, noise_out);
      if (!rep.reached)
        std::cerr << "warning: stopped after " << rep.attempts << " attempts; achieved level " << rep.achieved_level
                  << "\n";
      std::cout << json{{"surface_voxels", rep.surface_voxels},   {"target_flips", rep.target_flips},
                        {"accepted_flips", rep.accepted_flips},   {"attempts", rep.attempts},
                        {"achieved_level", rep.achieved_level},   {"reached", rep.reached}}
                       .dump()
                << "\n";
    } else if (*pre) {
      Scratch s(pre_env);
      Workspace ws(s.dir(), pre_env.budget, pre_env.disk_quota);
      const auto in = BinaryVolume::open(ws, pre_in);
      if (cavity_size <= 0 && median_radius <= 0) throw std::invalid_argument("nothing to do: give --fill-cavities and/or --median");
      json report = json::object();
      std::optional<BinaryVolume> filled;
      if (cavity_size > 0) {
        CavityReport cr;
        filled = fill_cavities(ws, in, cavity_size, &cr, median_radius > 0 ? fs::path{} : fs::path{pre_out});
        report["filled_components"] = cr.filled_components;
        report["filled_voxels"] = cr.filled_voxels;
      }
      if (median_radius > 0) {
        auto v = median_filter(ws, filled ? *filled : in, median_radius, pre_out);
        finish(v, pre_out);
      } else {
        finish(*filled, pre_out);
      }
      std::cout << report.dump() << "\n";
    } else if (*ex) {
      Scratch s(ex_env);
      Workspace ws(s.dir(), ex_env.budget, ex_env.disk_quota);
      if (max_iter > 0) cfg.max_iterations = max_iter;
      cfg.smoothing_enabled = !no_smoothing;
      const auto in = BinaryVolume::open(ws, ex_in);
      const auto res = run_pipeline(ws, in, cfg, [](const IterationStats& st, const VesselGraph&) {
        std::cerr << "iteration " << st.iteration << ": " << st.proto_edge_count << " -> " << st.edge_count
                  << " edges\n";
      });
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
      write_graph_file(res.graph, ex_out);
      if (!stats_path.empty()) {
        std::ofstream f(stats_path, std::ios::binary);
        write_stats_jsonl(f, res.iterations);
        if (!f) throw std::runtime_error("cannot write " + stats_path);
      }
      if (!timings_path.empty()) {
        std::ofstream f(timings_path, std::ios::binary);
        write_timings_jsonl(f, res.iterations);
        if (!f) throw std::runtime_error("cannot write " + timings_path);
      }
      std::cout << json{{"nodes", res.graph.nodes.size()},
                        {"edges", res.graph.edges.size()},
                        {"iterations", res.iterations.size()}}
                       .dump()
                << "\n";
    } else if (*cmp) {
      const auto c = harness::compare_graph_summaries(read_graph_file(cmp_a), read_graph_file(cmp_b));
      const std::string text = harness::comparison_json(c).dump(2) + "\n";
      if (cmp_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream f(cmp_out, std::ios::binary);
        f << text;
        if (!f) throw std::runtime_error("cannot write " + cmp_out);
      }
      return c.structural_mismatch ? 3 : 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
