#include "depthedge/evaluate.hpp"

#include "depthedge/image_io.hpp"
#include "depthedge/json_format.hpp"
#include "depthedge/rng.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

namespace depthedge {

using nlohmann::json;

std::vector<ManifestEntry> parse_manifest(const json& j, const std::filesystem::path& base_dir) {
  const json& items = j.is_object() ? j.at("items") : j;
  if (!items.is_array()) throw FormatError("manifest: expected a JSON list of records");
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  std::vector<ManifestEntry> out;
  for (const auto& rec : items) {
    try {
      out.push_back({rec.at("id").get<std::string>(), resolve(rec.at("pred_depth_path").get<std::string>()),
                     resolve(rec.at("gt_depth_path").get<std::string>()),
                     resolve(rec.at("gt_edges_path").get<std::string>())});
    } catch (const json::exception& e) {
      throw FormatError(std::string("manifest: malformed record: ") + e.what());
    }
  }
  return out;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
  return parse_manifest(j, path.parent_path());
}

json manifest_to_json(const std::vector<ManifestEntry>& entries) {
  json out = json::array();
  for (const auto& e : entries) {
    out.push_back({{"id", e.id},
                   {"pred_depth_path", e.pred_depth_path.generic_string()},
                   {"gt_depth_path", e.gt_depth_path.generic_string()},
                   {"gt_edges_path", e.gt_edges_path.generic_string()}});
  }
  return out;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

ImageMetrics evaluate_image(const std::string& id, const DepthMap& pred, const DepthMap& gt_depth,
                            const EdgeMap& gt_edges, const EvalConfig& cfg) {
  if (pred.height() != gt_depth.height() || pred.width() != gt_depth.width()) {
    throw std::invalid_argument("prediction is " + std::to_string(pred.height()) + "x" +
                                std::to_string(pred.width()) + " but ground-truth depth is " +
                                std::to_string(gt_depth.height()) + "x" + std::to_string(gt_depth.width()));
  }
  const SparseDepth gt = SparseDepth::from_depth_map(gt_depth);
  ImageMetrics m;
  m.id = id;
  m.are = are(pred, gt, cfg.region);
  m.delta_1 = delta_acc(pred, gt, 1.25, cfg.region);
  m.delta_2 = delta_acc(pred, gt, 1.25 * 1.25, cfg.region);
  m.delta_3 = delta_acc(pred, gt, 1.25 * 1.25 * 1.25, cfg.region);
  OrdConfig oc = cfg.ord;
  oc.seed = derive_seed(cfg.ord.seed, id);
  m.ord = ord(pred, gt, oc, cfg.region);
  m.pr = pr_sweep(pred, gt_edges, cfg.sweep, cfg.match, cfg.region);
  m.auc = auc(m.pr, cfg.auc_lo, cfg.auc_hi);
  return m;
}

MetricsReport evaluate_dataset(const std::vector<ManifestEntry>& manifest, const EvalConfig& cfg) {
  if (manifest.empty()) throw std::invalid_argument("evaluate_dataset: empty manifest");
  if (cfg.sweep.empty()) throw std::invalid_argument("evaluate_dataset: empty sweep");

  std::vector<std::optional<ImageMetrics>> results(manifest.size());
  std::vector<std::string> failures(manifest.size());
  parallel_for(manifest.size(), cfg.threads, [&](std::size_t i) {
    const ManifestEntry& e = manifest[i];
    try {
      const DepthMap pred = read_depth_any(read_file_bytes(e.pred_depth_path));
      const DepthMap gt = read_depth_any(read_file_bytes(e.gt_depth_path));
      const EdgeMap edges = read_edge_png8(read_file_bytes(e.gt_edges_path));
      results[i] = evaluate_image(e.id, pred, gt, edges, cfg);
    } catch (const std::exception& ex) {
      failures[i] = ex.what();
    }
  });

  MetricsReport report;
  std::vector<std::vector<PrPoint>> curves;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (!results[i]) {
      report.errors.push_back({manifest[i].id, failures[i]});
      continue;
    }
    const ImageMetrics& m = *results[i];
    report.are += m.are;
    report.ord += m.ord;
    report.delta_1 += m.delta_1;
    report.delta_2 += m.delta_2;
    report.delta_3 += m.delta_3;
    curves.push_back(m.pr);
    report.per_image.push_back(m);
  }
  if (!report.per_image.empty()) {
    const double n = static_cast<double>(report.per_image.size());
    report.are /= n;
    report.ord /= n;
    report.delta_1 /= n;
    report.delta_2 /= n;
    report.delta_3 /= n;
    std::vector<PrPoint> points;
    for (const PrPoint& p : average_pr(curves)) {
      const bool dup = std::any_of(points.begin(), points.end(), [&](const PrPoint& q) { return q.param == p.param; });
      if (!dup) points.push_back(p);
    }
    report.curve.points = points;
    report.curve.auc = auc(points, cfg.auc_lo, cfg.auc_hi);
  }
  return report;
}

namespace {

json pr_points_json(const std::vector<PrPoint>& pts) {
  json out = json::array();
  for (const auto& p : pts) out.push_back({{"param", p.param}, {"precision", p.precision}, {"recall", p.recall}});
  return out;
}

json auc_json(const AucResult& a) {
  return {{"partial", a.partial}, {"full", a.full}, {"range", {a.range_lo, a.range_hi}}};
}

}  // namespace

json report_to_json(const MetricsReport& report, const EvalConfig& cfg) {
  json per_image = json::array();
  for (const auto& m : report.per_image) {
    per_image.push_back({{"id", m.id},
                         {"are", m.are},
                         {"ord", m.ord},
                         {"delta_1", m.delta_1},
                         {"delta_2", m.delta_2},
                         {"delta_3", m.delta_3},
                         {"auc", auc_json(m.auc)},
                         {"pr_curve", pr_points_json(m.pr)}});
  }
  json errors = json::array();
  for (const auto& e : report.errors) errors.push_back({{"id", e.id}, {"error", e.message}});
  json j;
  j["num_images"] = report.per_image.size();
  j["are"] = report.are;
  j["ord"] = report.ord;
  j["delta_1"] = report.delta_1;
  j["delta_2"] = report.delta_2;
  j["delta_3"] = report.delta_3;
  j["auc"] = auc_json(report.curve.auc);
  j["pr_curve"] = pr_points_json(report.curve.points);
  j["per_image"] = per_image;
  j["errors"] = errors;
  j["config"] = eval_config_to_json(cfg);
  j["conventions"] = {
      {"empty_prediction_precision", 1.0},
      {"empty_ground_truth_recall", 1.0},
      {"auc_outside_curve_span", "zero"},
      {"dataset_pr_aggregation", "mean of per-image precision and recall per sweep point"},
  };
  return j;
}

std::string pr_curve_csv(const std::vector<PrPoint>& points) {
  std::ostringstream out;
  out << "param,precision,recall\n";
  for (const auto& p : points) {
    out << format_number(p.param) << "," << format_number(p.precision) << "," << format_number(p.recall) << "\n";
  }
  return out.str();
}

json eval_config_to_json(const EvalConfig& cfg) {
  json sweep = json::array();
  for (const auto& c : cfg.sweep) {
    sweep.push_back({{"th_low", c.th_low}, {"th_high", c.th_high}, {"smoothing_sigma", c.smoothing_sigma}});
  }
  // threads is omitted so reports do not depend on it.
  return {{"region",
           {{"row_start_frac", cfg.region.row_start_frac},
            {"row_end_frac", cfg.region.row_end_frac},
            {"col_start_frac", cfg.region.col_start_frac},
            {"col_end_frac", cfg.region.col_end_frac}}},
          {"t_e", cfg.match.t_e},
          {"auc_range", {cfg.auc_lo, cfg.auc_hi}},
          {"ord", {{"num_pairs", cfg.ord.num_pairs}, {"tau", cfg.ord.tau}, {"seed", cfg.ord.seed}}},
          {"sweep", sweep}};
}

EvalConfig eval_config_from_json(const json& j, EvalConfig cfg) {
  try {
    if (j.contains("region")) {
      const json& r = j.at("region");
      if (r.is_string()) {
        const auto name = r.get<std::string>();
        if (name == "bottom_60") cfg.region = EvalRegion::bottom_60();
        else if (name == "garg") cfg.region = EvalRegion::garg();
        else if (name == "full") cfg.region = EvalRegion::full_frame();
        else throw FormatError("config: unknown region preset '" + name + "'");
      } else {
        cfg.region.row_start_frac = r.value("row_start_frac", cfg.region.row_start_frac);
        cfg.region.row_end_frac = r.value("row_end_frac", cfg.region.row_end_frac);
        cfg.region.col_start_frac = r.value("col_start_frac", cfg.region.col_start_frac);
        cfg.region.col_end_frac = r.value("col_end_frac", cfg.region.col_end_frac);
      }
      cfg.region.validate();
    }
    cfg.match.t_e = j.value("t_e", cfg.match.t_e);
    if (j.contains("auc_range")) {
      cfg.auc_lo = j.at("auc_range").at(0).get<double>();
      cfg.auc_hi = j.at("auc_range").at(1).get<double>();
    }
    if (j.contains("ord")) {
      const json& o = j.at("ord");
      cfg.ord.num_pairs = o.value("num_pairs", cfg.ord.num_pairs);
      cfg.ord.tau = o.value("tau", cfg.ord.tau);
      cfg.ord.seed = o.value("seed", cfg.ord.seed);
    }
    if (j.contains("seed")) cfg.ord.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      if (s.is_object()) {
        cfg.sweep = default_sweep(s.value("count", 30), s.value("th_high_min", 0.5), s.value("th_high_max", 32.0),
                                  s.value("low_ratio", 0.8));
      } else {
        cfg.sweep.clear();
        for (const auto& c : s) {
          cfg.sweep.push_back({c.at("th_low").get<double>(), c.at("th_high").get<double>(),
                               c.value("smoothing_sigma", 0.0)});
          cfg.sweep.back().validate();
        }
      }
    }
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return cfg;
}

}  // namespace depthedge
