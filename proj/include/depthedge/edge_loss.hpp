#pragma once

#include "depthedge/types.hpp"

#include <span>
#include <variant>
#include <vector>

namespace depthedge {

struct EdbConfig {
  double t_grad = 4.0;             // m/px, sigmoid shift
  double orientation_sigma = 2.0;  // px, blur applied to the edge map before taking its gradient
  double orientation_floor = 1e-3; // minimum blurred-gradient magnitude for a trusted angle

  void validate() const;
};

/// Edge-normal angle per pixel. Angles are folded into (-pi/2, pi/2]; the
/// orthogonal difference only changes sign under theta -> theta + pi.
struct OrientationField {
  ImageD theta;
  Mask defined;
};

OrientationField orientation_from_edges(const ImageD& edge_strength, const EdbConfig& cfg);
OrientationField orientation_from_edges(const EdgeMap& edges, const EdbConfig& cfg);
OrientationField orientation_from_edges(const EdgeProbMap& edges, const EdbConfig& cfg);

/// Where the normal is defined the value is the signed difference
/// D(x + round(cos), y + round(sin)) - D(x - round(cos), y - round(sin)); elsewhere it is
/// the isotropic gradient magnitude. `defined` is false (value 0) when a sampled
/// neighbor is outside the frame or invalid.
struct OrthogonalGradient {
  ImageD value;
  Mask defined;
  Mask oriented;  // true where the directional difference was used
};

OrthogonalGradient orthogonal_gradient(const DepthMap& depth, const OrientationField& of);

/// sigmoid(|orthogonal gradient| - t_grad) per pixel. Undefined pixels read as
/// sigmoid(-t_grad) and carry domain = false.
struct EdbOutput {
  EdgeProbMap probs;
  Mask domain;
};

EdbOutput edb_forward_with_domain(const DepthMap& depth, const OrientationField& of, const EdbConfig& cfg);
EdgeProbMap edb_forward(const DepthMap& depth, const OrientationField& of, const EdbConfig& cfg);

inline constexpr double kProbClamp = 1e-7;

/// Balanced BCE: half the mean over positives plus half the mean over negatives,
/// restricted to `domain`. A single present class falls back to its plain mean.
double bbce(const EdgeProbMap& pred, const EdgeMap& gt, const Mask& domain);
double bbce(const EdgeProbMap& pred, const EdgeMap& gt);

struct BbceResult {
  double loss = 0.0;
  ImageD grad_wrt_prob;  // zero outside the domain and where the clamp is active
};

BbceResult bbce_with_grad(const EdgeProbMap& pred, const EdgeMap& gt, const Mask& domain);

using DepthTarget = std::variant<DepthMap, SparseDepth>;

/// Mean absolute error in meters over the target's valid support.
double depth_loss_l1(const DepthMap& pred, const DepthMap& gt);
double depth_loss_l1(const DepthMap& pred, const SparseDepth& gt);

enum class DepthLossKind { L1 };

struct LossConfig {
  double alpha = 0.1;
  int num_scales = 1;
  DepthLossKind depth_loss_kind = DepthLossKind::L1;

  void validate() const;
};

struct LossOutput {
  double total = 0.0;
  double depth_term = 0.0;
  double edge_term = 0.0;
  ImageD grad_wrt_depth;               // scale 0, 1/m
  std::vector<ImageD> grad_per_scale;  // grad_per_scale[0] == grad_wrt_depth
};

/// Scale s has ceil(H / 2^s) x ceil(W / 2^s) pixels.
std::pair<int, int> scale_dims(int height, int width, int scale);

/// 2x2 mean over valid pixels per level; level 0 is the input.
std::vector<DepthMap> depth_pyramid(const DepthMap& depth, int num_scales);
/// 2x2 logical OR per level so thin edges survive.
std::vector<EdgeMap> edge_pyramid(const EdgeMap& edges, int num_scales);

/// Multi-scale L1 plus alpha times the multi-scale balanced edge loss, with the
/// analytic gradient with respect to every predicted scale.
LossOutput total_loss(std::span<const DepthMap> pred_pyramid, const DepthMap& gt_depth,
                      std::span<const EdgeMap> gt_edges, const LossConfig& cfg, const EdbConfig& edb);

}  // namespace depthedge
