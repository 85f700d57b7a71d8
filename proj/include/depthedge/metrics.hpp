#pragma once

#include "depthedge/edges.hpp"
#include "depthedge/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace depthedge {

struct MatchConfig {
  double t_e = 2.0;  // px, inclusive Euclidean radius

  void validate() const;
};

struct MatchResult {
  std::vector<std::pair<Pixel, Pixel>> pairs;  // (pred, gt)
  double precision = 0.0;
  double recall = 0.0;
  std::size_t num_pred = 0;
  std::size_t num_gt = 0;
};

/// Maximum-cardinality one-to-one matching between edge pixels within t_e.
///
/// Empty prediction has precision 1; empty ground truth has recall 1.
MatchResult match_edges(const EdgeMap& pred, const EdgeMap& gt, const MatchConfig& cfg);

/// Maximum bipartite matching size via Hopcroft-Karp. adjacency[u] lists right vertices of u.
/// match_left receives the right partner of each left vertex or -1.
std::size_t hopcroft_karp(const std::vector<std::vector<int>>& adjacency, int num_right,
                          std::vector<int>* match_left = nullptr);

struct PrPoint {
  double precision = 0.0;
  double recall = 0.0;
  double param = 0.0;

  friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

struct AucResult {
  double partial = 0.0;
  double full = 0.0;
  double range_lo = 0.0;
  double range_hi = 1.0;
};

struct PrCurve {
  std::vector<PrPoint> points;
  AucResult auc;
};

/// Default sweep: `count` configs with th_high geometric from `lo` to `hi` m/px, th_low = ratio * th_high.
std::vector<CannyConfig> default_sweep(int count = 30, double lo = 0.5, double hi = 32.0, double ratio = 0.8);

/// One image: Canny per config on the full frame, then crop both edge maps to the region and match.
std::vector<PrPoint> pr_sweep(const DepthMap& pred_depth, const EdgeMap& gt_edges,
                              const std::vector<CannyConfig>& sweep, const MatchConfig& cfg,
                              const EvalRegion& region);

/// Mean precision and recall per sweep index across images.
std::vector<PrPoint> average_pr(const std::vector<std::vector<PrPoint>>& per_image);

/// Trapezoidal area of recall over precision. Partial area covers [lo, hi] divided
/// by (hi - lo); full area covers [0, 1]. Recall is zero outside the curve's span.
AucResult auc(std::vector<PrPoint> points, double lo, double hi);

double are(const DepthMap& pred, const SparseDepth& gt, const EvalRegion& region);
double delta_acc(const DepthMap& pred, const SparseDepth& gt, double threshold, const EvalRegion& region);

struct OrdConfig {
  std::size_t num_pairs = 50000;
  double tau = 0.03;
  std::uint64_t seed = 0;
};

/// Ordinal label of a depth pair: +1 if a/b > 1 + tau, -1 if b/a > 1 + tau, else 0.
int ordinal_label(double a, double b, double tau);

/// Distinct unordered index pairs drawn deterministically from n items.
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t n, std::size_t num_pairs,
                                                              std::uint64_t seed);

double ord(const DepthMap& pred, const SparseDepth& gt, const OrdConfig& cfg, const EvalRegion& region);

}  // namespace depthedge
