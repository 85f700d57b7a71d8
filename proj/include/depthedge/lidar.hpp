#pragma once

#include "depthedge/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace depthedge {

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
};

/// Spinning-LIDAR sampling pattern. Elevations in degrees, positive up.
struct LidarConfig {
  int num_beams = 64;
  double horiz_step = 0.09;  // degrees between azimuth samples
  double min_elev = -24.8;
  double max_elev = 2.0;
  Intrinsics intrinsics;

  void validate() const;
};

/// Horizontal field of view in degrees implied by intrinsics and frame width
/// (pixel edges at u = 0 and u = width).
double horizontal_fov_deg(const Intrinsics& k, int width);

/// Number of azimuth samples per beam before frame clipping.
int azimuth_count(const LidarConfig& cfg, int width);

/// Ray (azimuth a, elevation e) -> image coordinates (u, v):
/// u = fx tan a + cx, v = cy - fy tan e / cos a. Pixel index is floor of each.
std::pair<double, double> project_ray(const Intrinsics& k, double azimuth_rad, double elevation_rad);

/// Nearest-pixel sampling of `gt` along the beam pattern; duplicate pixels collapse.
SparseDepth simulate_lidar(const DepthMap& gt, const LidarConfig& cfg);

inline constexpr double kNoEdgeDistance = std::numeric_limits<double>::infinity();

/// Exact Euclidean distance (px) to the nearest edge pixel; +inf when there are no edges.
ImageD edge_distance_field(const EdgeMap& edges);

struct DensityBin {
  int d = 0;
  std::optional<double> ratio;  // absent when count == 0
  std::size_t count = 0;        // |P_d|
  std::size_t lidar = 0;        // |P_d^L|
};

struct DensityCurve {
  std::vector<DensityBin> bins;

  /// Ratio for bin d, if the curve has a non-empty bin d.
  std::optional<double> ratio_at(int d) const;
};

/// Pixels of `region` binned by floor(distance to nearest edge) for d in [0, max_d].
DensityCurve density_curve(const SparseDepth& lidar, const EdgeMap& edges, int max_d, const EvalRegion& region);

/// Keeps each sample in bin d with probability min(1, target(d) / current(d)),
/// where current is the full-frame density curve of `lidar`.
SparseDepth thin_to_curve(const SparseDepth& lidar, const EdgeMap& edges, const DensityCurve& target,
                          std::uint64_t seed);

nlohmann::json to_json(const DensityCurve& curve);
DensityCurve density_curve_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LidarConfig& cfg);
LidarConfig lidar_config_from_json(const nlohmann::json& j, LidarConfig base = {});

}  // namespace depthedge
