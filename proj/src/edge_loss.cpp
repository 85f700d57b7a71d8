#include "depthedge/edge_loss.hpp"

#include "depthedge/edges.hpp"

#include <cmath>
#include <numbers>

namespace depthedge {

void EdbConfig::validate() const {
  if (!(t_grad > 0.0)) throw std::invalid_argument("EdbConfig: t_grad must be > 0");
  if (!(orientation_sigma >= 0.0)) throw std::invalid_argument("EdbConfig: orientation_sigma must be >= 0");
  if (!(orientation_floor >= 0.0)) throw std::invalid_argument("EdbConfig: orientation_floor must be >= 0");
}

void LossConfig::validate() const {
  if (!(alpha >= 0.0)) throw std::invalid_argument("LossConfig: alpha must be >= 0");
  if (num_scales < 1) throw std::invalid_argument("LossConfig: num_scales must be >= 1");
}

// ---------------------------------------------------------------------------
// Orientation

OrientationField orientation_from_edges(const ImageD& edge_strength, const EdbConfig& cfg) {
  cfg.validate();
  const int h = static_cast<int>(edge_strength.rows());
  const int w = static_cast<int>(edge_strength.cols());
  OrientationField of{ImageD::Zero(h, w), Mask::Constant(h, w, false)};
  if (h < 2 || w < 2) return of;
  const ImageD blurred = gaussian_blur<double>(edge_strength, cfg.orientation_sigma);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const DiffStencil sx = diff_stencil(c, w);
      const DiffStencil sy = diff_stencil(r, h);
      const double gx = sx.coef * (blurred(r, c + sx.plus) - blurred(r, c + sx.minus));
      const double gy = sy.coef * (blurred(r + sy.plus, c) - blurred(r + sy.minus, c));
      const double mag = std::hypot(gx, gy);
      if (!(mag > 0.0) || mag < cfg.orientation_floor) continue;
      double theta = std::atan2(gy, gx);
      if (theta > std::numbers::pi / 2) theta -= std::numbers::pi;
      if (theta <= -std::numbers::pi / 2) theta += std::numbers::pi;
      of.theta(r, c) = theta;
      of.defined(r, c) = true;
    }
  }
  return of;
}

OrientationField orientation_from_edges(const EdgeMap& edges, const EdbConfig& cfg) {
  return orientation_from_edges(ImageD(edges.mask().cast<double>()), cfg);
}

OrientationField orientation_from_edges(const EdgeProbMap& edges, const EdbConfig& cfg) {
  return orientation_from_edges(edges.probs(), cfg);
}

// ---------------------------------------------------------------------------
// Orthogonal gradient

namespace {

struct Offset {
  int dr = 0;
  int dc = 0;
};

Offset normal_offset(double theta) {
  return {round_half_away(std::sin(theta)), round_half_away(std::cos(theta))};
}

// Isotropic magnitude with its stencil, matching depth_gradient.
struct Isotropic {
  double gx = 0.0;
  double gy = 0.0;
  double mag = 0.0;
  DiffStencil sx;
  DiffStencil sy;
};

bool isotropic_defined(const DepthMap& d, int r, int c) {
  if (d.height() < 3 || d.width() < 3) return false;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (in_bounds(d.valid(), r + dr, c + dc) && !d.is_valid(r + dr, c + dc)) return false;
    }
  }
  return true;
}

Isotropic isotropic_at(const DepthMap& d, int r, int c) {
  Isotropic iso;
  iso.sx = diff_stencil(c, d.width());
  iso.sy = diff_stencil(r, d.height());
  iso.gx = iso.sx.coef * (d.at(r, c + iso.sx.plus) - d.at(r, c + iso.sx.minus));
  iso.gy = iso.sy.coef * (d.at(r + iso.sy.plus, c) - d.at(r + iso.sy.minus, c));
  iso.mag = std::hypot(iso.gx, iso.gy);
  return iso;
}

}  // namespace

OrthogonalGradient orthogonal_gradient(const DepthMap& depth, const OrientationField& of) {
  require_same_shape(depth.values(), of.theta, "orthogonal_gradient");
  require_same_shape(depth.values(), of.defined, "orthogonal_gradient");
  const int h = depth.height();
  const int w = depth.width();
  OrthogonalGradient out{ImageD::Zero(h, w), Mask::Constant(h, w, false), Mask::Constant(h, w, false)};
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!depth.is_valid(r, c)) continue;
      if (of.defined(r, c)) {
        out.oriented(r, c) = true;
        const Offset o = normal_offset(of.theta(r, c));
        const int r1 = r + o.dr, c1 = c + o.dc;
        const int r0 = r - o.dr, c0 = c - o.dc;
        if (!in_bounds(depth.valid(), r1, c1) || !in_bounds(depth.valid(), r0, c0)) continue;
        if (!depth.is_valid(r1, c1) || !depth.is_valid(r0, c0)) continue;
        out.value(r, c) = depth.at(r1, c1) - depth.at(r0, c0);
        out.defined(r, c) = true;
      } else if (isotropic_defined(depth, r, c)) {
        out.value(r, c) = isotropic_at(depth, r, c).mag;
        out.defined(r, c) = true;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Edge detection block

EdbOutput edb_forward_with_domain(const DepthMap& depth, const OrientationField& of, const EdbConfig& cfg) {
  cfg.validate();
  const OrthogonalGradient og = orthogonal_gradient(depth, of);
  ImageD probs = sigmoid((og.value.abs() - cfg.t_grad).eval());
  return {EdgeProbMap(std::move(probs)), og.defined};
}

EdgeProbMap edb_forward(const DepthMap& depth, const OrientationField& of, const EdbConfig& cfg) {
  return edb_forward_with_domain(depth, of, cfg).probs;
}

// ---------------------------------------------------------------------------
// Balanced BCE

BbceResult bbce_with_grad(const EdgeProbMap& pred, const EdgeMap& gt, const Mask& domain) {
  const ImageD& p = pred.probs();
  require_same_shape(p, gt.mask(), "bbce");
  require_same_shape(p, domain, "bbce");
  const Mask pos = gt.mask() && domain;
  const Mask neg = (!gt.mask()) && domain;
  const auto n_pos = pos.count();
  const auto n_neg = neg.count();
  if (n_pos == 0 && n_neg == 0) throw std::invalid_argument("bbce: no supervised pixels");

  const double w_pos = n_pos == 0 ? 0.0 : (n_neg == 0 ? 1.0 : 0.5) / static_cast<double>(n_pos);
  const double w_neg = n_neg == 0 ? 0.0 : (n_pos == 0 ? 1.0 : 0.5) / static_cast<double>(n_neg);

  BbceResult res;
  res.grad_wrt_prob = ImageD::Zero(p.rows(), p.cols());
  double sum_pos = 0.0;
  double sum_neg = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      if (!domain(r, c)) continue;
      const double raw = p(r, c);
      const double pc = std::clamp(raw, kProbClamp, 1.0 - kProbClamp);
      const bool active = raw >= kProbClamp && raw <= 1.0 - kProbClamp;
      if (pos(r, c)) {
        sum_pos += -std::log(pc);
        if (active) res.grad_wrt_prob(r, c) = -w_pos / pc;
      } else {
        sum_neg += -std::log1p(-pc);
        if (active) res.grad_wrt_prob(r, c) = w_neg / (1.0 - pc);
      }
    }
  }
  res.loss = w_pos * sum_pos + w_neg * sum_neg;
  return res;
}

double bbce(const EdgeProbMap& pred, const EdgeMap& gt, const Mask& domain) {
  return bbce_with_grad(pred, gt, domain).loss;
}

double bbce(const EdgeProbMap& pred, const EdgeMap& gt) {
  return bbce(pred, gt, Mask::Constant(pred.height(), pred.width(), true));
}

// ---------------------------------------------------------------------------
// Depth loss

double depth_loss_l1(const DepthMap& pred, const DepthMap& gt) {
  require_same_shape(pred.values(), gt.values(), "depth_loss_l1");
  double sum = 0.0;
  long n = 0;
  for (int r = 0; r < gt.height(); ++r) {
    for (int c = 0; c < gt.width(); ++c) {
      if (!gt.is_valid(r, c)) continue;
      if (!pred.is_valid(r, c)) throw std::invalid_argument("depth_loss_l1: invalid prediction at supervised pixel");
      sum += std::abs(pred.at(r, c) - gt.at(r, c));
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("depth_loss_l1: empty ground-truth support");
  return sum / static_cast<double>(n);
}

double depth_loss_l1(const DepthMap& pred, const SparseDepth& gt) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw std::invalid_argument("depth_loss_l1: shape mismatch");
  }
  if (gt.empty()) throw std::invalid_argument("depth_loss_l1: empty ground-truth support");
  double sum = 0.0;
  for (const auto& s : gt.samples()) {
    if (!pred.is_valid(s.row, s.col)) throw std::invalid_argument("depth_loss_l1: invalid prediction at supervised pixel");
    sum += std::abs(pred.at(s.row, s.col) - s.depth);
  }
  return sum / static_cast<double>(gt.size());
}

// ---------------------------------------------------------------------------
// Pyramids

std::pair<int, int> scale_dims(int height, int width, int scale) {
  for (int s = 0; s < scale; ++s) {
    height = (height + 1) / 2;
    width = (width + 1) / 2;
  }
  return {height, width};
}

std::vector<DepthMap> depth_pyramid(const DepthMap& depth, int num_scales) {
  std::vector<DepthMap> levels{depth};
  for (int s = 1; s < num_scales; ++s) {
    const DepthMap& prev = levels.back();
    const int h = (prev.height() + 1) / 2;
    const int w = (prev.width() + 1) / 2;
    ImageD values = ImageD::Zero(h, w);
    Mask valid = Mask::Constant(h, w, false);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double sum = 0.0;
        int n = 0;
        for (int dr = 0; dr < 2; ++dr) {
          for (int dc = 0; dc < 2; ++dc) {
            const int rr = 2 * r + dr, cc = 2 * c + dc;
            if (rr < prev.height() && cc < prev.width() && prev.is_valid(rr, cc)) {
              sum += prev.at(rr, cc);
              ++n;
            }
          }
        }
        if (n > 0) {
          values(r, c) = sum / n;
          valid(r, c) = true;
        }
      }
    }
    levels.emplace_back(std::move(values), std::move(valid));
  }
  return levels;
}

std::vector<EdgeMap> edge_pyramid(const EdgeMap& edges, int num_scales) {
  std::vector<EdgeMap> levels{edges};
  for (int s = 1; s < num_scales; ++s) {
    const EdgeMap& prev = levels.back();
    EdgeMap next((prev.height() + 1) / 2, (prev.width() + 1) / 2);
    for (const Pixel& p : prev.pixels()) next.set(p.row / 2, p.col / 2);
    levels.push_back(std::move(next));
  }
  return levels;
}

// ---------------------------------------------------------------------------
// Total loss

namespace {

struct ScaleTerms {
  double l1 = 0.0;
  double edge = 0.0;
  ImageD grad_l1;
  ImageD grad_edge;
};

ScaleTerms scale_terms(const DepthMap& pred, const DepthMap& gt, const EdgeMap& edges, const EdbConfig& edb) {
  const int h = pred.height();
  const int w = pred.width();
  ScaleTerms t;

  t.l1 = depth_loss_l1(pred, gt);
  t.grad_l1 = ImageD::Zero(h, w);
  const double n_gt = static_cast<double>(gt.valid().count());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!gt.is_valid(r, c)) continue;
      const double diff = pred.at(r, c) - gt.at(r, c);
      t.grad_l1(r, c) = (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) / n_gt;
    }
  }

  const OrientationField of = orientation_from_edges(edges, edb);
  const OrthogonalGradient og = orthogonal_gradient(pred, of);
  const ImageD probs = sigmoid((og.value.abs() - edb.t_grad).eval());
  const BbceResult b = bbce_with_grad(EdgeProbMap(probs), edges, og.defined);
  t.edge = b.loss;

  // dL/dD = dL/dp * sigmoid' * d|g|/dD, scattered onto the stencil pixels.
  t.grad_edge = ImageD::Zero(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!og.defined(r, c)) continue;
      const double p = probs(r, c);
      const double dl_dabs = b.grad_wrt_prob(r, c) * p * (1.0 - p);
      if (dl_dabs == 0.0) continue;
      if (og.oriented(r, c)) {
        const double g = og.value(r, c);
        const double s = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
        const Offset o = normal_offset(of.theta(r, c));
        t.grad_edge(r + o.dr, c + o.dc) += dl_dabs * s;
        t.grad_edge(r - o.dr, c - o.dc) -= dl_dabs * s;
      } else {
        const Isotropic iso = isotropic_at(pred, r, c);
        if (iso.mag == 0.0) continue;
        const double kx = dl_dabs * iso.gx / iso.mag * iso.sx.coef;
        const double ky = dl_dabs * iso.gy / iso.mag * iso.sy.coef;
        t.grad_edge(r, c + iso.sx.plus) += kx;
        t.grad_edge(r, c + iso.sx.minus) -= kx;
        t.grad_edge(r + iso.sy.plus, c) += ky;
        t.grad_edge(r + iso.sy.minus, c) -= ky;
      }
    }
  }
  return t;
}

}  // namespace

LossOutput total_loss(std::span<const DepthMap> pred_pyramid, const DepthMap& gt_depth,
                      std::span<const EdgeMap> gt_edges, const LossConfig& cfg, const EdbConfig& edb) {
  cfg.validate();
  edb.validate();
  const int S = cfg.num_scales;
  if (static_cast<int>(pred_pyramid.size()) != S) {
    throw std::invalid_argument("total_loss: prediction pyramid has " + std::to_string(pred_pyramid.size()) +
                                " levels, expected " + std::to_string(S));
  }
  if (static_cast<int>(gt_edges.size()) != S) {
    throw std::invalid_argument("total_loss: edge pyramid has " + std::to_string(gt_edges.size()) +
                                " levels, expected " + std::to_string(S));
  }
  const int H = pred_pyramid[0].height();
  const int W = pred_pyramid[0].width();
  if (gt_depth.height() != H || gt_depth.width() != W) {
    throw std::invalid_argument("total_loss: ground-truth depth does not match scale-0 prediction");
  }
  const std::vector<DepthMap> gt_levels = depth_pyramid(gt_depth, S);

  LossOutput out;
  double l1_sum = 0.0;
  double edge_sum = 0.0;
  std::vector<ScaleTerms> terms;
  terms.reserve(S);
  for (int s = 0; s < S; ++s) {
    const auto [hs, ws] = scale_dims(H, W, s);
    const DepthMap& pred = pred_pyramid[s];
    if (pred.height() != hs || pred.width() != ws || gt_edges[s].height() != hs || gt_edges[s].width() != ws) {
      throw std::invalid_argument("total_loss: scale " + std::to_string(s) + " must be " + std::to_string(hs) +
                                  "x" + std::to_string(ws));
    }
    terms.push_back(scale_terms(pred, gt_levels[s], gt_edges[s], edb));
    l1_sum += terms.back().l1;
    edge_sum += terms.back().edge;
  }
  out.depth_term = l1_sum / S;
  out.edge_term = edge_sum / S;
  out.total = out.depth_term + cfg.alpha * out.edge_term;
  for (int s = 0; s < S; ++s) {
    out.grad_per_scale.push_back(terms[s].grad_l1 / S + (cfg.alpha / S) * terms[s].grad_edge);
  }
  out.grad_wrt_depth = out.grad_per_scale.front();
  return out;
}

}  // namespace depthedge
