#pragma once

#include "depthedge/metrics.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace depthedge {

struct ManifestEntry {
  std::string id;
  std::filesystem::path pred_depth_path;
  std::filesystem::path gt_depth_path;
  std::filesystem::path gt_edges_path;
};

/// JSON list of {id, pred_depth_path, gt_depth_path, gt_edges_path}; relative
/// paths resolve against `base_dir`.
std::vector<ManifestEntry> parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
nlohmann::json manifest_to_json(const std::vector<ManifestEntry>& entries);

struct EvalConfig {
  EvalRegion region = EvalRegion::bottom_60();
  MatchConfig match;
  std::vector<CannyConfig> sweep = default_sweep();
  double auc_lo = 0.12;
  double auc_hi = 0.65;
  OrdConfig ord;
  int threads = 1;
};

struct ImageMetrics {
  std::string id;
  double are = 0.0;
  double ord = 0.0;
  double delta_1 = 0.0;
  double delta_2 = 0.0;
  double delta_3 = 0.0;
  std::vector<PrPoint> pr;
  AucResult auc;
};

struct EvalError {
  std::string id;
  std::string message;
};

struct MetricsReport {
  double are = 0.0;
  double ord = 0.0;
  double delta_1 = 0.0;
  double delta_2 = 0.0;
  double delta_3 = 0.0;
  PrCurve curve;
  std::vector<ImageMetrics> per_image;
  std::vector<EvalError> errors;
};

/// Metrics for one image; the ORD generator is seeded from (seed, id).
ImageMetrics evaluate_image(const std::string& id, const DepthMap& pred, const DepthMap& gt_depth,
                            const EdgeMap& gt_edges, const EvalConfig& cfg);

/// Per-image evaluation runs on cfg.threads workers; results are reduced in
/// manifest order. Failed items land in `errors` and are left out of the means.
MetricsReport evaluate_dataset(const std::vector<ManifestEntry>& manifest, const EvalConfig& cfg);

nlohmann::json report_to_json(const MetricsReport& report, const EvalConfig& cfg);
std::string pr_curve_csv(const std::vector<PrPoint>& points);

nlohmann::json eval_config_to_json(const EvalConfig& cfg);
/// Fields present in `j` override `base`.
EvalConfig eval_config_from_json(const nlohmann::json& j, EvalConfig base = {});

/// Runs fn(i) for i in [0, n) on up to `threads` workers (threads <= 0 means hardware concurrency).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace depthedge
