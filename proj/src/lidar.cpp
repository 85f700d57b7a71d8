#include "depthedge/lidar.hpp"

#include "depthedge/rng.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace depthedge {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

void LidarConfig::validate() const {
  if (num_beams < 0) throw std::invalid_argument("LidarConfig: num_beams must be >= 0");
  if (!(horiz_step > 0.0)) throw std::invalid_argument("LidarConfig: horiz_step must be > 0");
  if (!(min_elev < max_elev)) throw std::invalid_argument("LidarConfig: min_elev must be < max_elev");
  if (!(intrinsics.fx > 0.0 && intrinsics.fy > 0.0)) throw std::invalid_argument("LidarConfig: fx, fy must be > 0");
}

double horizontal_fov_deg(const Intrinsics& k, int width) {
  return (std::atan(k.cx / k.fx) + std::atan((width - k.cx) / k.fx)) / kDegToRad;
}

int azimuth_count(const LidarConfig& cfg, int width) {
  const double fov = horizontal_fov_deg(cfg.intrinsics, width);
  if (!(fov > 0.0)) return 0;
  return static_cast<int>(std::floor(fov / cfg.horiz_step + 1e-9)) + 1;
}

std::pair<double, double> project_ray(const Intrinsics& k, double azimuth_rad, double elevation_rad) {
  const double u = k.fx * std::tan(azimuth_rad) + k.cx;
  const double v = k.cy - k.fy * std::tan(elevation_rad) / std::cos(azimuth_rad);
  return {u, v};
}

SparseDepth simulate_lidar(const DepthMap& gt, const LidarConfig& cfg) {
  cfg.validate();
  const int h = gt.height();
  const int w = gt.width();
  std::vector<DepthSample> samples;
  if (cfg.num_beams == 0) return SparseDepth(h, w, {});

  Mask taken = Mask::Constant(h, w, false);
  const double az_min = -std::atan(cfg.intrinsics.cx / cfg.intrinsics.fx);
  const int n_az = azimuth_count(cfg, w);
  for (int b = 0; b < cfg.num_beams; ++b) {
    const double elev_deg = cfg.num_beams == 1
                                ? 0.5 * (cfg.min_elev + cfg.max_elev)
                                : cfg.min_elev + b * (cfg.max_elev - cfg.min_elev) / (cfg.num_beams - 1);
    for (int j = 0; j < n_az; ++j) {
      const double az = az_min + j * cfg.horiz_step * kDegToRad;
      const auto [u, v] = project_ray(cfg.intrinsics, az, elev_deg * kDegToRad);
      const double col = std::floor(u);
      const double row = std::floor(v);
      if (!(col >= 0 && col < w && row >= 0 && row < h)) continue;
      const int r = static_cast<int>(row);
      const int c = static_cast<int>(col);
      if (taken(r, c) || !gt.is_valid(r, c)) continue;
      taken(r, c) = true;
      samples.push_back({r, c, gt.at(r, c)});
    }
  }
  return SparseDepth(h, w, std::move(samples));
}

std::optional<double> DensityCurve::ratio_at(int d) const {
  for (const auto& b : bins) {
    if (b.d == d) return b.ratio;
  }
  return std::nullopt;
}

DensityCurve density_curve(const SparseDepth& lidar, const EdgeMap& edges, int max_d, const EvalRegion& region) {
  if (lidar.height() != edges.height() || lidar.width() != edges.width()) {
    throw std::invalid_argument("density_curve: LIDAR and edge frames differ");
  }
  if (max_d < 0) throw std::invalid_argument("density_curve: max_d must be >= 0");
  const PixelRect rect = region.to_rect(edges.height(), edges.width());
  const ImageD dist = edge_distance_field(edges);
  Mask occupied = Mask::Constant(edges.height(), edges.width(), false);
  for (const auto& s : lidar.samples()) occupied(s.row, s.col) = true;

  DensityCurve curve;
  curve.bins.resize(static_cast<std::size_t>(max_d) + 1);
  for (int d = 0; d <= max_d; ++d) curve.bins[d].d = d;
  for (int r = rect.row0; r < rect.row1; ++r) {
    for (int c = rect.col0; c < rect.col1; ++c) {
      const double dv = dist(r, c);
      if (!std::isfinite(dv)) continue;
      const double bin = std::floor(dv);
      if (bin > max_d) continue;
      auto& b = curve.bins[static_cast<std::size_t>(bin)];
      ++b.count;
      if (occupied(r, c)) ++b.lidar;
    }
  }
  for (auto& b : curve.bins) {
    if (b.count > 0) b.ratio = static_cast<double>(b.lidar) / static_cast<double>(b.count);
  }
  return curve;
}

SparseDepth thin_to_curve(const SparseDepth& lidar, const EdgeMap& edges, const DensityCurve& target,
                          std::uint64_t seed) {
  if (lidar.height() != edges.height() || lidar.width() != edges.width()) {
    throw std::invalid_argument("thin_to_curve: LIDAR and edge frames differ");
  }
  int max_d = 0;
  for (const auto& b : target.bins) {
    if (b.ratio && (*b.ratio < 0.0 || *b.ratio > 1.0)) {
      throw std::invalid_argument("thin_to_curve: target ratios must lie in [0, 1]");
    }
    max_d = std::max(max_d, b.d);
  }
  const ImageD dist = edge_distance_field(edges);
  const DensityCurve current = density_curve(lidar, edges, max_d, EvalRegion::full_frame());

  std::vector<double> keep(static_cast<std::size_t>(max_d) + 1, 1.0);
  for (const auto& t : target.bins) {
    if (!t.ratio || t.d < 0) continue;
    const auto cur = current.ratio_at(t.d);
    if (cur && *cur > 0.0) keep[t.d] = std::min(1.0, *t.ratio / *cur);
  }

  Rng rng(seed);
  std::vector<DepthSample> kept;
  for (const auto& s : lidar.samples()) {
    const double u = rng.unit();  // one draw per sample keeps the stream aligned
    const double dv = dist(s.row, s.col);
    double p = 1.0;
    if (std::isfinite(dv) && std::floor(dv) <= max_d) p = keep[static_cast<std::size_t>(std::floor(dv))];
    if (u < p) kept.push_back(s);
  }
  return SparseDepth(lidar.height(), lidar.width(), std::move(kept));
}

nlohmann::json to_json(const DensityCurve& curve) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : curve.bins) {
    bins.push_back({{"d", b.d},
                    {"ratio", b.ratio ? nlohmann::json(*b.ratio) : nlohmann::json(nullptr)},
                    {"count", b.count},
                    {"lidar", b.lidar}});
  }
  return {{"bins", bins}};
}

DensityCurve density_curve_from_json(const nlohmann::json& j) {
  DensityCurve curve;
  try {
    for (const auto& b : j.at("bins")) {
      DensityBin bin;
      bin.d = b.at("d").get<int>();
      if (b.contains("ratio") && !b.at("ratio").is_null()) bin.ratio = b.at("ratio").get<double>();
      bin.count = b.value("count", std::size_t{0});
      bin.lidar = b.value("lidar", std::size_t{0});
      if (!curve.bins.empty() && bin.d <= curve.bins.back().d) {
        throw std::invalid_argument("density curve: bins must be strictly increasing in d");
      }
      curve.bins.push_back(bin);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("density curve: ") + e.what());
  }
  return curve;
}

nlohmann::json to_json(const LidarConfig& cfg) {
  return {{"num_beams", cfg.num_beams},
          {"horiz_step", cfg.horiz_step},
          {"vert_fov", {cfg.min_elev, cfg.max_elev}},
          {"intrinsics",
           {{"fx", cfg.intrinsics.fx}, {"fy", cfg.intrinsics.fy}, {"cx", cfg.intrinsics.cx}, {"cy", cfg.intrinsics.cy}}}};
}

LidarConfig lidar_config_from_json(const nlohmann::json& j, LidarConfig cfg) {
  try {
    cfg.num_beams = j.value("num_beams", cfg.num_beams);
    cfg.horiz_step = j.value("horiz_step", cfg.horiz_step);
    if (j.contains("vert_fov")) {
      cfg.min_elev = j.at("vert_fov").at(0).get<double>();
      cfg.max_elev = j.at("vert_fov").at(1).get<double>();
      if (cfg.min_elev > cfg.max_elev) std::swap(cfg.min_elev, cfg.max_elev);
    }
    if (j.contains("intrinsics")) {
      const auto& k = j.at("intrinsics");
      cfg.intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(), k.at("cx").get<double>(),
                        k.at("cy").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("lidar config: ") + e.what());
  }
  return cfg;
}

}  // namespace depthedge
