#include "depthedge/types.hpp"

#include <cmath>

namespace depthedge {

namespace {

int frac_index(double frac, int n) {
  // Tolerance absorbs representation error such as 0.29 * 100 = 28.999...
  return static_cast<int>(std::floor(frac * n + 1e-9));
}

}  // namespace

void EvalRegion::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(row_start_frac) || !unit(row_end_frac) || !unit(col_start_frac) || !unit(col_end_frac)) {
    throw std::invalid_argument("EvalRegion: fractions must lie in [0, 1]");
  }
  if (!(row_start_frac < row_end_frac) || !(col_start_frac < col_end_frac)) {
    throw std::invalid_argument("EvalRegion: start must be < end on both axes");
  }
}

PixelRect EvalRegion::to_rect(int height, int width) const {
  validate();
  PixelRect rect{frac_index(row_start_frac, height), frac_index(row_end_frac, height),
                 frac_index(col_start_frac, width), frac_index(col_end_frac, width)};
  if (rect.height() <= 0 || rect.width() <= 0) {
    throw std::invalid_argument("EvalRegion: crop of " + std::to_string(height) + "x" +
                                std::to_string(width) + " frame is empty");
  }
  return rect;
}

DepthMap crop_eval_region(const DepthMap& m, const EvalRegion& r) {
  const auto rect = r.to_rect(m.height(), m.width());
  return DepthMap(m.values().block(rect.row0, rect.col0, rect.height(), rect.width()),
                  m.valid().block(rect.row0, rect.col0, rect.height(), rect.width()));
}

EdgeMap crop_eval_region(const EdgeMap& m, const EvalRegion& r) {
  const auto rect = r.to_rect(m.height(), m.width());
  return EdgeMap(Mask(m.mask().block(rect.row0, rect.col0, rect.height(), rect.width())));
}

EdgeProbMap crop_eval_region(const EdgeProbMap& m, const EvalRegion& r) {
  const auto rect = r.to_rect(m.height(), m.width());
  return EdgeProbMap(m.probs().block(rect.row0, rect.col0, rect.height(), rect.width()));
}

SparseDepth crop_eval_region(const SparseDepth& m, const EvalRegion& r) {
  const auto rect = r.to_rect(m.height(), m.width());
  std::vector<DepthSample> kept;
  for (const auto& s : m.samples()) {
    if (rect.contains(s.row, s.col)) kept.push_back({s.row - rect.row0, s.col - rect.col0, s.depth});
  }
  return SparseDepth(rect.height(), rect.width(), std::move(kept));
}

}  // namespace depthedge
