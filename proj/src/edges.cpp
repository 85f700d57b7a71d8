#include "depthedge/edges.hpp"

#include <cmath>
#include <deque>

namespace depthedge {

void CannyConfig::validate() const {
  if (!(th_low >= 0.0 && th_low <= th_high)) throw std::invalid_argument("CannyConfig: need 0 <= th_low <= th_high");
  if (!(smoothing_sigma >= 0.0)) throw std::invalid_argument("CannyConfig: smoothing_sigma must be >= 0");
}

void HysteresisConfig::validate() const {
  if (!(low >= 0.0 && low <= high && high <= 1.0)) {
    throw std::invalid_argument("HysteresisConfig: need 0 <= low <= high <= 1");
  }
}

DiffStencil diff_stencil(int i, int n) {
  if (i == 0) return {1, 0, 1.0};
  if (i == n - 1) return {0, -1, 1.0};
  return {1, -1, 0.5};
}

GradientField depth_gradient(const DepthMap& depth) {
  const int h = depth.height();
  const int w = depth.width();
  if (h < 3 || w < 3) throw std::invalid_argument("depth_gradient: image smaller than 3x3");

  GradientField g;
  g.magnitude = ImageD::Zero(h, w);
  g.direction = ImageD::Zero(h, w);
  g.dx = ImageD::Zero(h, w);
  g.dy = ImageD::Zero(h, w);
  g.defined = Mask::Constant(h, w, false);

  const Mask& valid = depth.valid();
  const ImageD& d = depth.values();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      bool ok = true;
      for (int dr = -1; dr <= 1 && ok; ++dr) {
        for (int dc = -1; dc <= 1 && ok; ++dc) {
          if (in_bounds(valid, r + dr, c + dc) && !valid(r + dr, c + dc)) ok = false;
        }
      }
      if (!ok) continue;
      const DiffStencil sx = diff_stencil(c, w);
      const DiffStencil sy = diff_stencil(r, h);
      const double gx = sx.coef * (d(r, c + sx.plus) - d(r, c + sx.minus));
      const double gy = sy.coef * (d(r + sy.plus, c) - d(r + sy.minus, c));
      g.dx(r, c) = gx;
      g.dy(r, c) = gy;
      g.magnitude(r, c) = std::hypot(gx, gy);
      g.direction(r, c) = std::atan2(gy, gx);
      g.defined(r, c) = true;
    }
  }
  return g;
}

namespace {

// cos/sin of multiples of pi/2 come back as ~1e-16 instead of 0; snap them so
// axis-aligned sampling hits pixel centers exactly.
double snap_unit(double v) {
  constexpr double kEps = 1e-12;
  if (std::abs(v) < kEps) return 0.0;
  if (std::abs(v - 1.0) < kEps) return 1.0;
  if (std::abs(v + 1.0) < kEps) return -1.0;
  return v;
}

}  // namespace

ImageD nms(const ImageD& magnitude, const ImageD& direction) {
  require_same_shape(magnitude, direction, "nms");
  const long h = magnitude.rows();
  const long w = magnitude.cols();
  ImageD out = ImageD::Zero(h, w);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      const double m = magnitude(r, c);
      const double dc = snap_unit(std::cos(direction(r, c)));
      const double dr = snap_unit(std::sin(direction(r, c)));
      const double fwd = bilinear_zero_padded(magnitude, r + dr, c + dc);
      const double bwd = bilinear_zero_padded(magnitude, r - dr, c - dc);
      const bool fwd_is_larger = dr > 0.0 || (dr == 0.0 && dc > 0.0);
      const double larger = fwd_is_larger ? fwd : bwd;
      const double smaller = fwd_is_larger ? bwd : fwd;
      if (m >= larger && m > smaller) out(r, c) = m;
    }
  }
  return out;
}

EdgeMap hysteresis(const ImageD& score, double low, double high) {
  if (!(low <= high)) throw std::invalid_argument("hysteresis: low must be <= high");
  const int h = static_cast<int>(score.rows());
  const int w = static_cast<int>(score.cols());
  EdgeMap out(h, w);
  Mask visited = Mask::Constant(h, w, false);
  std::deque<Pixel> queue;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (score(r, c) >= high) {
        visited(r, c) = true;
        queue.push_back({r, c});
      }
    }
  }
  while (!queue.empty()) {
    const Pixel p = queue.front();
    queue.pop_front();
    out.set(p.row, p.col);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int rr = p.row + dr;
        const int cc = p.col + dc;
        if (!in_bounds(score, rr, cc) || visited(rr, cc)) continue;
        if (score(rr, cc) >= low) {
          visited(rr, cc) = true;
          queue.push_back({rr, cc});
        }
      }
    }
  }
  return out;
}

DepthMap smooth_depth(const DepthMap& depth, double sigma) {
  if (sigma == 0.0) return depth;
  const ImageD weight = depth.valid().cast<double>();
  const ImageD num = gaussian_blur<double>(depth.valid().select(depth.values(), 0.0), sigma);
  const ImageD den = gaussian_blur<double>(weight, sigma);
  ImageD values = depth.valid().select(num / den.max(1e-300), 0.0);
  return DepthMap(std::move(values), depth.valid());
}

namespace {

EdgeMap thinned_hysteresis(const ImageD& thinned, double low, double high) {
  EdgeMap linked = hysteresis(thinned, low, high);
  return EdgeMap(Mask(linked.mask() && (thinned > 0.0)));
}

}  // namespace

EdgeMap canny_depth_edges(const DepthMap& depth, const CannyConfig& cfg) {
  cfg.validate();
  const GradientField g = depth_gradient(smooth_depth(depth, cfg.smoothing_sigma));
  return thinned_hysteresis(nms(g.magnitude, g.direction), cfg.th_low, cfg.th_high);
}

EdgeMap dee_postprocess(const EdgeProbMap& probs, const ImageD& orient, const HysteresisConfig& cfg) {
  cfg.validate();
  require_same_shape(probs.probs(), orient, "dee_postprocess");
  return thinned_hysteresis(nms(probs.probs(), orient), cfg.low, cfg.high);
}

}  // namespace depthedge
