#pragma once

#include "depthedge/types.hpp"

#include <set>
#include <utility>

namespace depthedge {

/// Canny thresholds on depth gradient magnitude, in meters per pixel.
struct CannyConfig {
  double th_low = 4.0;
  double th_high = 5.0;
  double smoothing_sigma = 0.0;  // pixels; 0 disables smoothing

  void validate() const;
};

/// Hysteresis thresholds on edge probability.
struct HysteresisConfig {
  double low = 0.85;
  double high = 0.9;

  void validate() const;
};

/// Central-difference depth gradient. Magnitude and direction are zero where undefined.
struct GradientField {
  ImageD magnitude;  // m/px
  ImageD direction;  // atan2(dD/dy, dD/dx), radians
  ImageD dx;
  ImageD dy;
  Mask defined;
};

/// One axis of a finite-difference stencil: value = coef * (D[plus] - D[minus]).
struct DiffStencil {
  int plus = 0;   // offset along the axis
  int minus = 0;
  double coef = 0.5;
};

/// Stencil used along an axis of length n at index i: central in the interior,
/// one-sided at the borders.
DiffStencil diff_stencil(int i, int n);

/// Gradient of a depth map. Pixels within one pixel (8-neighborhood) of an
/// invalid pixel are undefined. Image borders use one-sided differences.
GradientField depth_gradient(const DepthMap& depth);

/// Non-maximum suppression along `direction` with bilinear neighbor sampling.
///
/// A pixel survives when its magnitude is >= the neighbor on the side of larger
/// (row, col) and > the neighbor on the side of smaller (row, col). Ties thus go
/// to the lexicographically smaller pixel. Suppressed pixels are set to 0.
ImageD nms(const ImageD& magnitude, const ImageD& direction);

/// Two-threshold linking: pixels >= high seed, pixels >= low join through 8-connectivity.
EdgeMap hysteresis(const ImageD& score, double low, double high);

/// Smoothing over valid pixels only (normalized convolution); invalid pixels stay invalid.
DepthMap smooth_depth(const DepthMap& depth, double sigma);

/// Thin depth edges with thresholds in meters per pixel.
EdgeMap canny_depth_edges(const DepthMap& depth, const CannyConfig& cfg);

/// NMS along `orient` followed by hysteresis on an edge-probability map.
EdgeMap dee_postprocess(const EdgeProbMap& probs, const ImageD& orient, const HysteresisConfig& cfg);

/// Per-pixel segment and class labels with class pairs whose boundaries are ignored.
struct PanopticMap {
  Image<std::int32_t> segment_id;
  Image<std::int32_t> class_id;
  std::set<std::pair<std::int32_t, std::int32_t>> excluded_class_pairs;  // stored (min, max)

  PanopticMap() = default;
  PanopticMap(Image<std::int32_t> segments, Image<std::int32_t> classes,
              std::set<std::pair<std::int32_t, std::int32_t>> excluded = {});

  int height() const { return static_cast<int>(segment_id.rows()); }
  int width() const { return static_cast<int>(segment_id.cols()); }
  bool excluded(std::int32_t a, std::int32_t b) const;
};

/// Boundary pixels between segments, placed on the side with the larger segment id.
EdgeMap gt_from_panoptic(const PanopticMap& pm);

}  // namespace depthedge
