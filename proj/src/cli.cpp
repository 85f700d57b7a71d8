#include "depthedge/cli.hpp"

#include "depthedge/annotation.hpp"
#include "depthedge/annotation_server.hpp"
#include "depthedge/edge_loss.hpp"
#include "depthedge/evaluate.hpp"
#include "depthedge/image_io.hpp"
#include "depthedge/json_format.hpp"
#include "depthedge/lidar.hpp"
#include "depthedge/panoptic_io.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <optional>
#include <thread>

namespace depthedge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Usage and configuration problems; reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::string out_dir;
  std::string threads = "1";
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  json config = json::object();
};

void load_config(Globals& g, const std::string& section) {
  if (g.config_path.empty()) return;
  json j;
  try {
    const Bytes b = read_file_bytes(g.config_path);
    j = json::parse(b.begin(), b.end());
  } catch (const std::exception& e) {
    throw UsageError("cannot load config " + g.config_path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError("config " + g.config_path + ": expected a JSON object");
  g.config = j;
  if (j.contains(section) && j.at(section).is_object()) {
    for (const auto& [k, v] : j.at(section).items()) g.config[k] = v;
  }
}

// Flag value if given, else config value, else default.
template <typename T>
T pick(const CLI::Option* opt, const T& flag, const json& cfg, const char* key, T def) {
  if (opt && opt->count() > 0) return flag;
  if (cfg.contains(key)) {
    try {
      return cfg.at(key).get<T>();
    } catch (const json::exception& e) {
      throw UsageError(std::string("config key '") + key + "': " + e.what());
    }
  }
  return def;
}

int resolve_threads(const Globals& g) {
  std::string t = g.threads;
  if (!(g.threads_opt && g.threads_opt->count() > 0) && g.config.contains("threads")) {
    const json& v = g.config.at("threads");
    t = v.is_string() ? v.get<std::string>() : std::to_string(v.get<int>());
  }
  if (t == "auto") return 0;
  try {
    const int n = std::stoi(t);
    if (n < 0) throw std::invalid_argument("negative");
    return n;
  } catch (const std::exception&) {
    throw UsageError("--threads must be a non-negative integer or 'auto', got '" + t + "'");
  }
}

std::optional<std::uint64_t> resolve_seed(const Globals& g) {
  if (g.seed_opt && g.seed_opt->count() > 0) return g.seed;
  if (g.config.contains("seed")) return g.config.at("seed").get<std::uint64_t>();
  if (g.config.contains("ord") && g.config.at("ord").contains("seed")) {
    return g.config.at("ord").at("seed").get<std::uint64_t>();
  }
  return std::nullopt;
}

fs::path out_path(const Globals& g, const std::string& p) {
  fs::path path(p);
  if (!g.out_dir.empty() && path.is_relative()) path = fs::path(g.out_dir) / path;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  return path;
}

void write_text(const fs::path& p, const std::string& s) {
  write_file_bytes(p, ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

EvalRegion parse_region(const std::string& name) {
  if (name == "bottom_60") return EvalRegion::bottom_60();
  if (name == "full") return EvalRegion::full_frame();
  if (name == "garg") return EvalRegion::garg();
  throw UsageError("unknown region '" + name + "' (expected bottom_60, full or garg)");
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " not found: " + path);
}

// ---------------------------------------------------------------------------

struct ExtractEdges {
  std::string depth, out;
  double th_low = 4.0, th_high = 5.0, sigma = 0.0;
  CLI::Option *o_low, *o_high, *o_sigma;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("extract-edges", "Canny depth edges (thresholds in m/px) from a dense depth map");
    s->add_option("--depth", depth, "Depth map (KITTI PNG16 or PFM)")->required();
    s->add_option("--out", out, "Output edge map (PNG8)")->required();
    o_low = s->add_option("--th-low", th_low, "Low threshold, m/px");
    o_high = s->add_option("--th-high", th_high, "High threshold, m/px");
    o_sigma = s->add_option("--sigma", sigma, "Pre-smoothing sigma, px");
  }

  int run(const Globals& g, std::ostream& out_s) {
    const json c = g.config.value("canny", g.config);
    CannyConfig cfg{pick(o_low, th_low, c, "th_low", 4.0), pick(o_high, th_high, c, "th_high", 5.0),
                    pick(o_sigma, sigma, c, "smoothing_sigma", 0.0)};
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    require_file(depth, "depth map");
    const EdgeMap edges = canny_depth_edges(read_depth_any(read_file_bytes(depth)), cfg);
    write_file_bytes(out_path(g, out), write_edge_png8(edges));
    out_s << edges.count() << " edge pixels\n";
    return kExitOk;
  }
};

struct GtFromPanoptic {
  std::string panoptic, exclusions, out;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("gt-from-panoptic", "Initial edge proposal from a panoptic map");
    s->add_option("--panoptic", panoptic, "2-channel 16-bit PNG (segment id, class id)")->required();
    s->add_option("--exclusions", exclusions, "JSON list of excluded class pairs");
    s->add_option("--out", out, "Output edge map (PNG8)")->required();
  }

  int run(const Globals& g, std::ostream& out_s) {
    require_file(panoptic, "panoptic map");
    std::string excl;
    if (!exclusions.empty()) {
      require_file(exclusions, "exclusion list");
      const Bytes b = read_file_bytes(exclusions);
      excl.assign(b.begin(), b.end());
    }
    const EdgeMap edges = gt_from_panoptic(read_panoptic(read_file_bytes(panoptic), excl));
    write_file_bytes(out_path(g, out), write_edge_png8(edges));
    out_s << edges.count() << " edge pixels\n";
    return kExitOk;
  }
};

struct DeePostprocess {
  std::string probs, orient, out;
  double low = 0.85, high = 0.9;
  CLI::Option *o_low, *o_high;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("dee-postprocess", "NMS and hysteresis on an edge-probability map");
    s->add_option("--probs", probs, "Edge probabilities (PNG16, value / 65535)")->required();
    s->add_option("--orient", orient, "Edge-normal angle in radians (PFM)")->required();
    s->add_option("--out", out, "Output edge map (PNG8)")->required();
    o_low = s->add_option("--low", low, "Hysteresis low threshold");
    o_high = s->add_option("--high", high, "Hysteresis high threshold");
  }

  int run(const Globals& g, std::ostream& out_s) {
    const json c = g.config.value("hysteresis", g.config);
    HysteresisConfig cfg{pick(o_low, low, c, "low", 0.85), pick(o_high, high, c, "high", 0.9)};
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    require_file(probs, "probability map");
    require_file(orient, "orientation field");
    const EdgeProbMap p = read_prob_png16(read_file_bytes(probs));
    const ImageD o = read_pfm_field(read_file_bytes(orient)).cast<double>();
    const EdgeMap edges = dee_postprocess(p, o, cfg);
    write_file_bytes(out_path(g, out), write_edge_png8(edges));
    out_s << edges.count() << " edge pixels\n";
    return kExitOk;
  }
};

struct Loss {
  std::vector<std::string> preds;
  std::string gt_depth, gt_edges, out, grad_out;
  double alpha = 0.1, t_grad = 4.0, sigma = 2.0;
  int scales = 1;
  CLI::Option *o_alpha, *o_tgrad, *o_sigma, *o_scales;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("loss", "Depth loss plus edge loss with the analytic gradient");
    s->add_option("--pred", preds, "Predicted depth per scale, finest first (PFM or PNG16)")->required();
    s->add_option("--gt-depth", gt_depth, "Ground-truth depth (PNG16 or PFM)")->required();
    s->add_option("--gt-edges", gt_edges, "Ground-truth edges (PNG8); default: Canny on --gt-depth");
    s->add_option("--out", out, "Loss values (JSON)")->required();
    s->add_option("--grad-out", grad_out, "Gradient w.r.t. the finest prediction (PFM); coarser scales get _s<k>");
    o_alpha = s->add_option("--alpha", alpha, "Edge-loss weight");
    o_tgrad = s->add_option("--t-grad", t_grad, "Sigmoid shift, m/px");
    o_sigma = s->add_option("--orientation-sigma", sigma, "Blur before estimating edge orientation, px");
    o_scales = s->add_option("--scales", scales, "Number of scales");
  }

  int run(const Globals& g, std::ostream& out_s) {
    LossConfig lc{pick(o_alpha, alpha, g.config, "alpha", 0.1), pick(o_scales, scales, g.config, "num_scales", 1)};
    EdbConfig ec;
    ec.t_grad = pick(o_tgrad, t_grad, g.config, "t_grad", 4.0);
    ec.orientation_sigma = pick(o_sigma, sigma, g.config, "orientation_sigma", 2.0);
    try {
      lc.validate();
      ec.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (preds.size() != 1 && static_cast<int>(preds.size()) != lc.num_scales) {
      throw UsageError("--pred given " + std::to_string(preds.size()) + " times for " +
                       std::to_string(lc.num_scales) + " scales");
    }
    for (const auto& p : preds) require_file(p, "prediction");
    require_file(gt_depth, "ground-truth depth");
    if (!gt_edges.empty()) require_file(gt_edges, "ground-truth edges");

    std::vector<DepthMap> pyramid;
    for (const auto& p : preds) pyramid.push_back(read_depth_any(read_file_bytes(p)));
    if (pyramid.size() == 1 && lc.num_scales > 1) pyramid = depth_pyramid(pyramid.front(), lc.num_scales);
    const DepthMap gt = read_depth_any(read_file_bytes(gt_depth));
    const EdgeMap edges = gt_edges.empty() ? canny_depth_edges(gt, CannyConfig{})
                                           : read_edge_png8(read_file_bytes(gt_edges));
    const auto edge_pyr = edge_pyramid(edges, lc.num_scales);
    const LossOutput r = total_loss(pyramid, gt, edge_pyr, lc, ec);

    json j = {{"total", r.total},
              {"depth_term", r.depth_term},
              {"edge_term", r.edge_term},
              {"config",
               {{"alpha", lc.alpha},
                {"num_scales", lc.num_scales},
                {"t_grad", ec.t_grad},
                {"orientation_sigma", ec.orientation_sigma},
                {"depth_loss", "l1"}}}};
    if (!grad_out.empty()) {
      const fs::path base = out_path(g, grad_out);
      json files = json::array();
      for (std::size_t s = 0; s < r.grad_per_scale.size(); ++s) {
        fs::path p = base;
        if (s > 0) p = base.parent_path() / (base.stem().string() + "_s" + std::to_string(s) + base.extension().string());
        write_file_bytes(p, write_pfm(ImageF(r.grad_per_scale[s].cast<float>())));
        files.push_back(p.generic_string());
      }
      j["gradient_files"] = files;
    }
    write_text(out_path(g, out), dump_json(j));
    out_s << "total " << format_number(r.total) << "\n";
    return kExitOk;
  }
};

void apply_eval_flags(EvalConfig& ec, const std::string& region, const CLI::Option* o_region, double t_e,
                      const CLI::Option* o_te, const std::vector<double>& auc_range, const CLI::Option* o_auc) {
  if (o_region->count() > 0) ec.region = parse_region(region);
  if (o_te->count() > 0) ec.match.t_e = t_e;
  if (o_auc->count() > 0) {
    ec.auc_lo = auc_range.at(0);
    ec.auc_hi = auc_range.at(1);
  }
  try {
    ec.region.validate();
    ec.match.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!(ec.auc_lo >= 0.0 && ec.auc_lo < ec.auc_hi && ec.auc_hi <= 1.0)) {
    throw UsageError("AUC range must satisfy 0 <= lo < hi <= 1");
  }
}

EvalConfig eval_config_from(const Globals& g) {
  try {
    return eval_config_from_json(g.config);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

std::vector<ManifestEntry> manifest_from(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("manifest not found: " + path);
  try {
    auto m = load_manifest(path);
    if (m.empty()) throw UsageError("manifest " + path + " has no items");
    return m;
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
}

struct Eval {
  std::string manifest, out, csv, region;
  double t_e = 2.0;
  std::vector<double> auc_range;
  CLI::Option *o_region, *o_te, *o_auc;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("eval", "Depth and depth-edge metrics over a manifest");
    s->add_option("--manifest", manifest, "JSON manifest")->required();
    s->add_option("--out", out, "Report (JSON)")->required();
    s->add_option("--csv", csv, "Dataset PR curve (CSV)");
    o_region = s->add_option("--region", region, "bottom_60 | full | garg");
    o_te = s->add_option("--t-e", t_e, "Matching radius, px");
    o_auc = s->add_option("--auc-range", auc_range, "Partial AUC precision range")->expected(2);
  }

  int run(const Globals& g, std::ostream& out_s, std::ostream& err_s) {
    EvalConfig ec = eval_config_from(g);
    apply_eval_flags(ec, region, o_region, t_e, o_te, auc_range, o_auc);
    const auto seed = resolve_seed(g);
    if (!seed) throw UsageError("eval computes ORD and needs --seed");
    ec.ord.seed = *seed;
    ec.threads = resolve_threads(g);
    const auto m = manifest_from(manifest);

    const MetricsReport report = evaluate_dataset(m, ec);
    for (const auto& e : report.errors) err_s << "error: " << e.id << ": " << e.message << "\n";
    write_text(out_path(g, out), dump_json(report_to_json(report, ec)));
    if (!csv.empty()) write_text(out_path(g, csv), pr_curve_csv(report.curve.points));
    out_s << report.per_image.size() << " of " << m.size() << " images evaluated\n";
    return report.errors.empty() ? kExitOk : kExitItemFailures;
  }
};

struct PrCurveCmd {
  std::string manifest, pred, gt_edges, out, region;
  double t_e = 2.0;
  std::vector<double> auc_range;
  CLI::Option *o_region, *o_te, *o_auc;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("pr-curve", "Precision-recall sweep for one image or a manifest");
    s->add_option("--manifest", manifest, "JSON manifest");
    s->add_option("--pred", pred, "Predicted depth (single image)");
    s->add_option("--gt-edges", gt_edges, "Ground-truth edges (single image)");
    s->add_option("--out", out, "PR curve (CSV)")->required();
    o_region = s->add_option("--region", region, "bottom_60 | full | garg");
    o_te = s->add_option("--t-e", t_e, "Matching radius, px");
    o_auc = s->add_option("--auc-range", auc_range, "Partial AUC precision range")->expected(2);
  }

  int run(const Globals& g, std::ostream& out_s, std::ostream& err_s) {
    EvalConfig ec = eval_config_from(g);
    apply_eval_flags(ec, region, o_region, t_e, o_te, auc_range, o_auc);
    if (manifest.empty() == (pred.empty() || gt_edges.empty())) {
      throw UsageError("pr-curve needs either --manifest or both --pred and --gt-edges");
    }
    std::vector<PrPoint> points;
    int status = kExitOk;
    if (!manifest.empty()) {
      const auto m = manifest_from(manifest);
      std::vector<std::optional<std::vector<PrPoint>>> curves(m.size());
      std::vector<std::string> errors(m.size());
      parallel_for(m.size(), resolve_threads(g), [&](std::size_t i) {
        try {
          const DepthMap d = read_depth_any(read_file_bytes(m[i].pred_depth_path));
          const EdgeMap e = read_edge_png8(read_file_bytes(m[i].gt_edges_path));
          curves[i] = pr_sweep(d, e, ec.sweep, ec.match, ec.region);
        } catch (const std::exception& ex) {
          errors[i] = ex.what();
        }
      });
      std::vector<std::vector<PrPoint>> ok;
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (curves[i]) {
          ok.push_back(*curves[i]);
        } else {
          err_s << "error: " << m[i].id << ": " << errors[i] << "\n";
          status = kExitItemFailures;
        }
      }
      if (ok.empty()) {
        err_s << "error: no image could be evaluated\n";
        return kExitItemFailures;
      }
      points = average_pr(ok);
    } else {
      require_file(pred, "prediction");
      require_file(gt_edges, "ground-truth edges");
      points = pr_sweep(read_depth_any(read_file_bytes(pred)), read_edge_png8(read_file_bytes(gt_edges)), ec.sweep,
                        ec.match, ec.region);
    }
    write_text(out_path(g, out), pr_curve_csv(points));
    const AucResult a = auc(points, ec.auc_lo, ec.auc_hi);
    out_s << "auc " << format_number(a.partial) << " (partial), " << format_number(a.full) << " (full)\n";
    return status;
  }
};

struct LidarSim {
  std::string depth, out, intrinsics_path;
  int beams = 64;
  double step = 0.09, fx = 0, fy = 0, cx = 0, cy = 0;
  std::vector<double> vfov;
  CLI::Option *o_beams, *o_step, *o_vfov, *o_fx, *o_fy, *o_cx, *o_cy;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("lidar-sim", "Spinning-LIDAR sampling of a dense depth map");
    s->add_option("--depth", depth, "Dense ground-truth depth (PNG16 or PFM)")->required();
    s->add_option("--out", out, "Sparse depth (KITTI PNG16)")->required();
    s->add_option("--intrinsics", intrinsics_path, "JSON {fx, fy, cx, cy}");
    o_beams = s->add_option("--beams", beams, "Number of beams");
    o_step = s->add_option("--horiz-step", step, "Azimuth step, degrees");
    o_vfov = s->add_option("--vert-fov", vfov, "Min and max elevation, degrees")->expected(2);
    o_fx = s->add_option("--fx", fx);
    o_fy = s->add_option("--fy", fy);
    o_cx = s->add_option("--cx", cx);
    o_cy = s->add_option("--cy", cy);
  }

  int run(const Globals& g, std::ostream& out_s) {
    LidarConfig lc;
    try {
      lc = lidar_config_from_json(g.config.value("lidar", g.config));
      if (!intrinsics_path.empty()) {
        require_file(intrinsics_path, "intrinsics");
        const Bytes b = read_file_bytes(intrinsics_path);
        lc = lidar_config_from_json({{"intrinsics", json::parse(b.begin(), b.end())}}, lc);
      }
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    if (o_beams->count()) lc.num_beams = beams;
    if (o_step->count()) lc.horiz_step = step;
    if (o_vfov->count()) {
      lc.min_elev = vfov.at(0);
      lc.max_elev = vfov.at(1);
    }
    if (o_fx->count()) lc.intrinsics.fx = fx;
    if (o_fy->count()) lc.intrinsics.fy = fy;
    if (o_cx->count()) lc.intrinsics.cx = cx;
    if (o_cy->count()) lc.intrinsics.cy = cy;
    try {
      lc.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string(e.what()) + " (intrinsics come from --intrinsics, --fx/--fy/--cx/--cy or config)");
    }
    require_file(depth, "depth map");
    const SparseDepth sparse = simulate_lidar(read_depth_any(read_file_bytes(depth)), lc);
    write_file_bytes(out_path(g, out), write_sparse_png16(sparse));
    out_s << sparse.size() << " samples\n";
    return kExitOk;
  }
};

struct Density {
  std::string lidar, edges, out, region = "full";
  int max_d = 20;
  CLI::Option *o_max, *o_region;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("density", "LIDAR occupancy ratio per distance-to-edge bin");
    s->add_option("--lidar", lidar, "Sparse depth (KITTI PNG16)")->required();
    s->add_option("--edges", edges, "Edge map (PNG8)")->required();
    s->add_option("--out", out, "Density curve (JSON)")->required();
    o_max = s->add_option("--max-d", max_d, "Largest distance bin, px");
    o_region = s->add_option("--region", region, "bottom_60 | full | garg");
  }

  int run(const Globals& g, std::ostream& out_s) {
    const int md = pick(o_max, max_d, g.config, "max_d", 20);
    if (md < 0) throw UsageError("--max-d must be >= 0");
    const EvalRegion r = parse_region(pick(o_region, region, g.config, "region", std::string("full")));
    require_file(lidar, "LIDAR map");
    require_file(edges, "edge map");
    const DensityCurve c =
        density_curve(read_sparse_png16(read_file_bytes(lidar)), read_edge_png8(read_file_bytes(edges)), md, r);
    write_text(out_path(g, out), dump_json(to_json(c)));
    out_s << c.bins.size() << " bins\n";
    return kExitOk;
  }
};

struct Thin {
  std::string lidar, edges, target, out;
  double factor = 1.0;
  int max_d = 20;
  CLI::Option *o_factor, *o_target, *o_max;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("thin", "Randomly drop LIDAR samples to match a target density curve");
    s->add_option("--lidar", lidar, "Sparse depth (KITTI PNG16)")->required();
    s->add_option("--edges", edges, "Edge map (PNG8)")->required();
    o_target = s->add_option("--target", target, "Target density curve (JSON)");
    o_factor = s->add_option("--factor", factor, "Target = factor x current curve");
    o_max = s->add_option("--max-d", max_d, "Largest bin for --factor, px");
    s->add_option("--out", out, "Thinned sparse depth (KITTI PNG16)")->required();
  }

  int run(const Globals& g, std::ostream& out_s) {
    const auto seed = resolve_seed(g);
    if (!seed) throw UsageError("thin is stochastic and needs --seed");
    if ((o_target->count() > 0) == (o_factor->count() > 0)) {
      throw UsageError("thin needs exactly one of --target and --factor");
    }
    if (o_factor->count() && !(factor >= 0.0 && factor <= 1.0)) throw UsageError("--factor must lie in [0, 1]");
    require_file(lidar, "LIDAR map");
    require_file(edges, "edge map");
    const SparseDepth l = read_sparse_png16(read_file_bytes(lidar));
    const EdgeMap e = read_edge_png8(read_file_bytes(edges));
    DensityCurve t;
    if (o_target->count()) {
      require_file(target, "target curve");
      try {
        const Bytes b = read_file_bytes(target);
        t = density_curve_from_json(json::parse(b.begin(), b.end()));
      } catch (const std::exception& ex) {
        throw UsageError(ex.what());
      }
    } else {
      t = density_curve(l, e, pick(o_max, max_d, g.config, "max_d", 20), EvalRegion::full_frame());
      for (auto& b : t.bins) {
        if (b.ratio) *b.ratio *= factor;
      }
    }
    const SparseDepth kept = thin_to_curve(l, e, t, *seed);
    write_file_bytes(out_path(g, out), write_sparse_png16(kept));
    out_s << kept.size() << " of " << l.size() << " samples kept\n";
    return kExitOk;
  }
};

struct Annotate {
  std::string root, proposal = "panoptic", host = "127.0.0.1", state_dir, static_dir, export_dir;
  int port = 8707;
  CLI::Option *o_port, *o_proposal;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("annotate", "Serve the annotation workflow over HTTP");
    s->add_option("--root", root, "Dataset root containing manifest.json")->required();
    o_proposal = s->add_option("--proposal", proposal, "Default proposal source: panoptic | edge_map");
    o_port = s->add_option("--port", port, "TCP port");
    s->add_option("--host", host, "Bind address");
    s->add_option("--state-dir", state_dir, "Journal and snapshot directory");
    s->add_option("--static-dir", static_dir, "UI assets served under /ui/");
    s->add_option("--export-dir", export_dir, "Default export directory");
  }

  int run(const Globals& g, std::ostream& out_s) {
    ProposalSource src;
    try {
      src = parse_proposal_source(pick(o_proposal, proposal, g.config, "proposal", std::string("panoptic")));
    } catch (const AnnotationError& e) {
      throw UsageError(e.what());
    }
    SessionOptions so;
    if (!state_dir.empty()) so.state_dir = state_dir;
    std::unique_ptr<AnnotationSession> session;
    try {
      session = AnnotationSession::open(root, src, so);
    } catch (const AnnotationError& e) {
      throw UsageError(e.what());
    }
    ServerOptions opt;
    opt.host = host;
    opt.port = pick(o_port, port, g.config, "port", 8707);
    if (!static_dir.empty()) opt.static_dir = static_dir;
    if (!export_dir.empty()) opt.export_dir = export_dir;
    AnnotationServer server(*session, opt);

    sigset_t sigs;
    sigemptyset(&sigs);
    sigaddset(&sigs, SIGINT);
    sigaddset(&sigs, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &sigs, nullptr);
    const int bound = server.bind();
    out_s << "serving " << session->items().size() << " items on http://" << host << ":" << bound << "\n"
          << std::flush;
    std::thread waiter([&] {
      int sig = 0;
      sigwait(&sigs, &sig);
      server.stop();
    });
    server.serve();
    waiter.join();
    return kExitOk;
  }
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Depth-edge extraction, losses, metrics, LIDAR simulation and annotation", "depthedge"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config; explicit flags win");
  g.seed_opt = app.add_option("--seed", g.seed, "Seed for stochastic steps (ORD pairs, thinning)");
  g.threads_opt = app.add_option("--threads", g.threads, "Worker threads or 'auto'");
  app.add_option("--out-dir", g.out_dir, "Directory for relative output paths");
  app.fallthrough();

  ExtractEdges extract;
  GtFromPanoptic panoptic;
  DeePostprocess dee;
  Loss loss;
  Eval eval;
  PrCurveCmd pr;
  LidarSim lidar;
  Density density;
  Thin thin;
  Annotate annotate;
  extract.add(app);
  panoptic.add(app);
  dee.add(app);
  loss.add(app);
  eval.add(app);
  pr.add(app);
  lidar.add(app);
  density.add(app);
  thin.add(app);
  annotate.add(app);
  app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (name == "version") {
      out << DEPTHEDGE_VERSION << "\n";
      return kExitOk;
    }
    load_config(g, name);
    if (name == "extract-edges") return extract.run(g, out);
    if (name == "gt-from-panoptic") return panoptic.run(g, out);
    if (name == "dee-postprocess") return dee.run(g, out);
    if (name == "loss") return loss.run(g, out);
    if (name == "eval") return eval.run(g, out, err);
    if (name == "pr-curve") return pr.run(g, out, err);
    if (name == "lidar-sim") return lidar.run(g, out);
    if (name == "density") return density.run(g, out);
    if (name == "thin") return thin.run(g, out);
    if (name == "annotate") return annotate.run(g, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitItemFailures;
  }
  err << "error: unhandled subcommand " << name << "\n";
  return kExitUsage;
}

}  // namespace depthedge
