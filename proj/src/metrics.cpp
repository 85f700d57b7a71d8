#include "depthedge/metrics.hpp"

#include "depthedge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace depthedge {

std::vector<CannyConfig> default_sweep(int count, double lo, double hi, double ratio) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("default_sweep: bad range");
  std::vector<CannyConfig> sweep;
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    const double high = lo * std::pow(hi / lo, t);
    sweep.push_back({ratio * high, high, 0.0});
  }
  return sweep;
}

std::vector<PrPoint> pr_sweep(const DepthMap& pred_depth, const EdgeMap& gt_edges,
                              const std::vector<CannyConfig>& sweep, const MatchConfig& cfg,
                              const EvalRegion& region) {
  if (sweep.empty()) throw std::invalid_argument("pr_sweep: empty sweep");
  if (pred_depth.height() != gt_edges.height() || pred_depth.width() != gt_edges.width()) {
    throw std::invalid_argument("pr_sweep: prediction and ground-truth frames differ");
  }
  const EdgeMap gt_crop = crop_eval_region(gt_edges, region);
  std::vector<PrPoint> points;
  points.reserve(sweep.size());
  for (const CannyConfig& c : sweep) {
    const EdgeMap pred_crop = crop_eval_region(canny_depth_edges(pred_depth, c), region);
    const MatchResult m = match_edges(pred_crop, gt_crop, cfg);
    points.push_back({m.precision, m.recall, c.th_high});
  }
  return points;
}

std::vector<PrPoint> average_pr(const std::vector<std::vector<PrPoint>>& per_image) {
  if (per_image.empty()) return {};
  const std::size_t n = per_image.front().size();
  std::vector<PrPoint> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double p = 0.0, r = 0.0;
    for (const auto& img : per_image) {
      if (img.size() != n) throw std::invalid_argument("average_pr: sweep lengths differ");
      p += img[k].precision;
      r += img[k].recall;
    }
    const double m = static_cast<double>(per_image.size());
    out[k] = {p / m, r / m, per_image.front()[k].param};
  }
  return out;
}

namespace {

// Integral over [lo, hi] of the piecewise-linear recall(precision) through
// sorted points, taken as zero outside the span of the points.
double integrate_clipped(const std::vector<PrPoint>& pts, double lo, double hi) {
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double x0 = pts[i].precision, x1 = pts[i + 1].precision;
    if (x1 <= x0) continue;
    const double a = std::max(x0, lo);
    const double b = std::min(x1, hi);
    if (b <= a) continue;
    const double y0 = pts[i].recall, y1 = pts[i + 1].recall;
    auto interp = [&](double x) { return y0 + (y1 - y0) * (x - x0) / (x1 - x0); };
    area += 0.5 * (interp(a) + interp(b)) * (b - a);
  }
  return area;
}

}  // namespace

AucResult auc(std::vector<PrPoint> points, double lo, double hi) {
  if (points.empty()) throw std::invalid_argument("auc: no points");
  if (!(lo < hi)) throw std::invalid_argument("auc: range must satisfy a < b");
  std::sort(points.begin(), points.end(), [](const PrPoint& a, const PrPoint& b) {
    return a.precision != b.precision ? a.precision < b.precision : a.recall < b.recall;
  });
  AucResult res;
  res.range_lo = lo;
  res.range_hi = hi;
  res.partial = integrate_clipped(points, lo, hi) / (hi - lo);
  res.full = integrate_clipped(points, 0.0, 1.0);
  return res;
}

namespace {

struct PairedSamples {
  std::vector<double> pred;
  std::vector<double> gt;
};

PairedSamples pair_samples(const DepthMap& pred, const SparseDepth& gt, const EvalRegion& region,
                           const char* what) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw std::invalid_argument(std::string(what) + ": prediction and ground-truth frames differ");
  }
  const DepthMap pred_crop = crop_eval_region(pred, region);
  const SparseDepth gt_crop = crop_eval_region(gt, region);
  PairedSamples out;
  for (const auto& s : gt_crop.samples()) {
    if (!pred_crop.is_valid(s.row, s.col)) {
      throw std::invalid_argument(std::string(what) + ": invalid prediction at ground-truth sample");
    }
    out.pred.push_back(pred_crop.at(s.row, s.col));
    out.gt.push_back(s.depth);
  }
  return out;
}

}  // namespace

double are(const DepthMap& pred, const SparseDepth& gt, const EvalRegion& region) {
  const PairedSamples s = pair_samples(pred, gt, region, "are");
  if (s.gt.empty()) throw std::invalid_argument("are: no ground-truth samples in region");
  double sum = 0.0;
  for (std::size_t i = 0; i < s.gt.size(); ++i) sum += std::abs(s.pred[i] - s.gt[i]) / s.gt[i];
  return sum / static_cast<double>(s.gt.size());
}

double delta_acc(const DepthMap& pred, const SparseDepth& gt, double threshold, const EvalRegion& region) {
  const PairedSamples s = pair_samples(pred, gt, region, "delta_acc");
  if (s.gt.empty()) throw std::invalid_argument("delta_acc: no ground-truth samples in region");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < s.gt.size(); ++i) {
    if (std::max(s.pred[i] / s.gt[i], s.gt[i] / s.pred[i]) < threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(s.gt.size());
}

int ordinal_label(double a, double b, double tau) {
  if (a / b > 1.0 + tau) return 1;
  if (b / a > 1.0 + tau) return -1;
  return 0;
}

std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t n, std::size_t num_pairs,
                                                              std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (n < 2 || num_pairs == 0) return out;
  const std::size_t total = n * (n - 1) / 2;
  Rng rng(seed);
  if (num_pairs * 2 >= total) {
    // Dense regime: enumerate and take a seeded partial shuffle.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) out.emplace_back(i, j);
    }
    if (num_pairs >= total) return out;
    for (std::size_t k = 0; k < num_pairs; ++k) {
      std::swap(out[k], out[k + rng.below(total - k)]);
    }
    out.resize(num_pairs);
    return out;
  }
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(num_pairs * 2);
  while (out.size() < num_pairs) {
    std::size_t i = rng.below(n);
    std::size_t j = rng.below(n);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (seen.insert(static_cast<std::uint64_t>(i) * n + j).second) out.emplace_back(i, j);
  }
  return out;
}

double ord(const DepthMap& pred, const SparseDepth& gt, const OrdConfig& cfg, const EvalRegion& region) {
  if (!(cfg.tau > 0.0)) throw std::invalid_argument("ord: tau must be > 0");
  const PairedSamples s = pair_samples(pred, gt, region, "ord");
  if (s.gt.size() < 2) throw std::invalid_argument("ord: need at least 2 ground-truth samples");
  const auto pairs = sample_pairs(s.gt.size(), cfg.num_pairs, cfg.seed);
  if (pairs.empty()) throw std::invalid_argument("ord: num_pairs must be > 0");
  std::size_t disagree = 0;
  for (const auto& [i, j] : pairs) {
    if (ordinal_label(s.pred[i], s.pred[j], cfg.tau) != ordinal_label(s.gt[i], s.gt[j], cfg.tau)) ++disagree;
  }
  return static_cast<double>(disagree) / static_cast<double>(pairs.size());
}

}  // namespace depthedge
