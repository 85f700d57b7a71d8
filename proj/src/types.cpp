#include "depthedge/types.hpp"

#include <algorithm>
#include <string>
#include <tuple>

namespace depthedge {

DepthMap::DepthMap(ImageD values, Mask valid) : values_(std::move(values)), valid_(std::move(valid)) {
  require_same_shape(values_, valid_, "DepthMap");
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw std::invalid_argument("DepthMap: dimensions must be >= 1");
  }
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    const double v = values_.data()[i];
    if (valid_.data()[i] && !(std::isfinite(v) && v > 0.0)) {
      throw std::invalid_argument("DepthMap: valid pixel with non-finite or non-positive depth");
    }
  }
}

DepthMap DepthMap::from_values(ImageD values) {
  Mask valid = values.unaryExpr([](double v) { return std::isfinite(v) && v > 0.0; });
  values = valid.select(values, 0.0);
  return DepthMap(std::move(values), std::move(valid));
}

bool operator==(const DepthMap& a, const DepthMap& b) {
  if (a.height() != b.height() || a.width() != b.width()) return false;
  if ((a.valid_ != b.valid_).any()) return false;
  for (Eigen::Index i = 0; i < a.values_.size(); ++i) {
    if (a.valid_.data()[i] && a.values_.data()[i] != b.values_.data()[i]) return false;
  }
  return true;
}

SparseDepth::SparseDepth(int height, int width, std::vector<DepthSample> samples)
    : height_(height), width_(width), samples_(std::move(samples)) {
  if (height < 1 || width < 1) throw std::invalid_argument("SparseDepth: dimensions must be >= 1");
  for (const auto& s : samples_) {
    if (s.row < 0 || s.row >= height || s.col < 0 || s.col >= width) {
      throw std::invalid_argument("SparseDepth: sample (" + std::to_string(s.row) + ", " +
                                  std::to_string(s.col) + ") outside frame");
    }
    if (!(std::isfinite(s.depth) && s.depth > 0.0)) {
      throw std::invalid_argument("SparseDepth: sample depth must be finite and > 0");
    }
  }
  std::stable_sort(samples_.begin(), samples_.end(), [](const DepthSample& a, const DepthSample& b) {
    return std::tie(a.row, a.col) < std::tie(b.row, b.col);
  });
  const auto dup = std::adjacent_find(samples_.begin(), samples_.end(),
                                      [](const DepthSample& a, const DepthSample& b) {
                                        return a.row == b.row && a.col == b.col;
                                      });
  if (dup != samples_.end()) {
    throw std::invalid_argument("SparseDepth: duplicate sample at (" + std::to_string(dup->row) +
                                ", " + std::to_string(dup->col) + ")");
  }
}

SparseDepth SparseDepth::from_depth_map(const DepthMap& dense) {
  std::vector<DepthSample> samples;
  for (int r = 0; r < dense.height(); ++r) {
    for (int c = 0; c < dense.width(); ++c) {
      if (dense.is_valid(r, c)) samples.push_back({r, c, dense.at(r, c)});
    }
  }
  return SparseDepth(dense.height(), dense.width(), std::move(samples));
}

DepthMap SparseDepth::to_depth_map() const {
  ImageD values = ImageD::Zero(height_, width_);
  Mask valid = Mask::Constant(height_, width_, false);
  for (const auto& s : samples_) {
    values(s.row, s.col) = s.depth;
    valid(s.row, s.col) = true;
  }
  return DepthMap(std::move(values), std::move(valid));
}

EdgeMap::EdgeMap(int height, int width) : mask_(Mask::Constant(height, width, false)) {
  if (height < 1 || width < 1) throw std::invalid_argument("EdgeMap: dimensions must be >= 1");
}

EdgeMap::EdgeMap(Mask pixels) : mask_(std::move(pixels)) {
  if (mask_.rows() < 1 || mask_.cols() < 1) {
    throw std::invalid_argument("EdgeMap: dimensions must be >= 1");
  }
}

EdgeMap::EdgeMap(int height, int width, const std::vector<Pixel>& pixels) : EdgeMap(height, width) {
  for (const auto& p : pixels) set(p.row, p.col);
}

void EdgeMap::set(int row, int col, bool on) {
  if (!in_bounds(mask_, row, col)) {
    throw std::invalid_argument("EdgeMap: pixel (" + std::to_string(row) + ", " +
                                std::to_string(col) + ") outside frame");
  }
  mask_(row, col) = on;
}

std::vector<Pixel> EdgeMap::pixels() const {
  std::vector<Pixel> out;
  out.reserve(count());
  for (int r = 0; r < height(); ++r) {
    for (int c = 0; c < width(); ++c) {
      if (mask_(r, c)) out.push_back({r, c});
    }
  }
  return out;
}

bool operator==(const EdgeMap& a, const EdgeMap& b) {
  return a.height() == b.height() && a.width() == b.width() && !(a.mask_ != b.mask_).any();
}

EdgeProbMap::EdgeProbMap(ImageD probs) : probs_(std::move(probs)) {
  if (probs_.rows() < 1 || probs_.cols() < 1) {
    throw std::invalid_argument("EdgeProbMap: dimensions must be >= 1");
  }
  if (!((probs_ >= 0.0) && (probs_ <= 1.0)).all()) {
    throw std::invalid_argument("EdgeProbMap: probabilities must lie in [0, 1]");
  }
}

}  // namespace depthedge
