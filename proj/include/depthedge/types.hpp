#pragma once

#include "depthedge/image.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace depthedge {

/// Thrown by readers when a byte stream violates its container format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense per-pixel depth in meters with a validity mask.
///
/// Values at invalid pixels are unspecified and never read by consumers.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(ImageD values, Mask valid);

  /// Every finite, strictly positive value becomes a valid pixel.
  static DepthMap from_values(ImageD values);

  int height() const { return static_cast<int>(values_.rows()); }
  int width() const { return static_cast<int>(values_.cols()); }
  const ImageD& values() const { return values_; }
  const Mask& valid() const { return valid_; }
  double at(int row, int col) const { return values_(row, col); }
  bool is_valid(int row, int col) const { return valid_(row, col); }

  friend bool operator==(const DepthMap& a, const DepthMap& b);

 private:
  ImageD values_;
  Mask valid_;
};

struct DepthSample {
  int row = 0;
  int col = 0;
  double depth = 0.0;

  friend bool operator==(const DepthSample&, const DepthSample&) = default;
};

/// Sparse depth samples in a frame of given size, stored sorted by (row, col).
class SparseDepth {
 public:
  SparseDepth() = default;
  /// Throws std::invalid_argument on out-of-frame, non-positive or duplicate samples.
  SparseDepth(int height, int width, std::vector<DepthSample> samples);

  static SparseDepth from_depth_map(const DepthMap& dense);

  int height() const { return height_; }
  int width() const { return width_; }
  const std::vector<DepthSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  DepthMap to_depth_map() const;

  friend bool operator==(const SparseDepth&, const SparseDepth&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<DepthSample> samples_;
};

/// Binary edge set over a frame.
class EdgeMap {
 public:
  EdgeMap() = default;
  EdgeMap(int height, int width);
  explicit EdgeMap(Mask pixels);
  /// Duplicates collapse; out-of-frame pixels throw.
  EdgeMap(int height, int width, const std::vector<Pixel>& pixels);

  int height() const { return static_cast<int>(mask_.rows()); }
  int width() const { return static_cast<int>(mask_.cols()); }
  const Mask& mask() const { return mask_; }
  bool contains(int row, int col) const { return mask_(row, col); }
  void set(int row, int col, bool on = true);
  std::size_t count() const { return static_cast<std::size_t>(mask_.count()); }
  bool empty() const { return count() == 0; }
  /// Edge pixels in (row, col) lexicographic order.
  std::vector<Pixel> pixels() const;

  friend bool operator==(const EdgeMap& a, const EdgeMap& b);

 private:
  Mask mask_;
};

/// Per-pixel edge probability in [0, 1].
class EdgeProbMap {
 public:
  EdgeProbMap() = default;
  explicit EdgeProbMap(ImageD probs);

  int height() const { return static_cast<int>(probs_.rows()); }
  int width() const { return static_cast<int>(probs_.cols()); }
  const ImageD& probs() const { return probs_; }

 private:
  ImageD probs_;
};

/// Integer crop window in pixels: rows [row0, row1), cols [col0, col1).
struct PixelRect {
  int row0 = 0;
  int row1 = 0;
  int col0 = 0;
  int col1 = 0;

  int height() const { return row1 - row0; }
  int width() const { return col1 - col0; }
  bool contains(int row, int col) const {
    return row >= row0 && row < row1 && col >= col0 && col < col1;
  }
};

/// Evaluation window as fractions of the image dimensions.
struct EvalRegion {
  double row_start_frac = 0.40;
  double row_end_frac = 1.0;
  double col_start_frac = 0.0;
  double col_end_frac = 1.0;

  /// Bottom 60% of rows, full width.
  static EvalRegion bottom_60() { return {}; }
  static EvalRegion full_frame() { return {0.0, 1.0, 0.0, 1.0}; }
  /// Bottom 60% of rows with the Garg side margins.
  static EvalRegion garg() { return {0.40, 1.0, 0.0359, 0.9641}; }

  void validate() const;
  /// Start indices floor(frac * n); end indices floor(frac * n) as exclusive bounds.
  PixelRect to_rect(int height, int width) const;
};

DepthMap crop_eval_region(const DepthMap& m, const EvalRegion& r);
EdgeMap crop_eval_region(const EdgeMap& m, const EvalRegion& r);
EdgeProbMap crop_eval_region(const EdgeProbMap& m, const EvalRegion& r);
SparseDepth crop_eval_region(const SparseDepth& m, const EvalRegion& r);

}  // namespace depthedge
