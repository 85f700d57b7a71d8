#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <compare>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace depthedge {

// Row-major dense image; (row, col) indexing matches the file formats.
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ImageD = Image<double>;
using ImageF = Image<float>;
using Mask = Image<bool>;

struct Pixel {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

template <typename Derived>
inline bool in_bounds(const Eigen::DenseBase<Derived>& img, long row, long col) {
  return row >= 0 && col >= 0 && row < img.rows() && col < img.cols();
}

template <typename A, typename B>
inline void require_same_shape(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b,
                               const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
  }
}

// Elementwise logistic function; stable for large |x|.
template <typename Derived>
inline auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) {
    if (v >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-v));
    const Scalar e = std::exp(v);
    return e / (Scalar(1) + e);
  });
}

template <std::floating_point Scalar>
inline Scalar sigmoid(Scalar v) {
  if (v >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-v));
  const Scalar e = std::exp(v);
  return e / (Scalar(1) + e);
}

/// Normalized 1-D Gaussian taps of radius ceil(3 sigma). sigma == 0 yields {1}.
template <typename Scalar>
std::vector<Scalar> gaussian_kernel(Scalar sigma) {
  if (!(sigma >= Scalar(0))) throw std::invalid_argument("gaussian_kernel: sigma must be >= 0");
  if (sigma == Scalar(0)) return {Scalar(1)};
  const int radius = static_cast<int>(std::ceil(Scalar(3) * sigma));
  std::vector<Scalar> taps(2 * radius + 1);
  Scalar sum = 0;
  for (int k = -radius; k <= radius; ++k) {
    const Scalar v = std::exp(-Scalar(k * k) / (Scalar(2) * sigma * sigma));
    taps[k + radius] = v;
    sum += v;
  }
  for (auto& v : taps) v /= sum;
  return taps;
}

/// Separable Gaussian blur with replicated borders.
template <typename Scalar>
Image<Scalar> gaussian_blur(const Image<Scalar>& src, Scalar sigma) {
  const auto taps = gaussian_kernel(sigma);
  if (taps.size() == 1) return src;
  const int radius = static_cast<int>(taps.size() / 2);
  const long rows = src.rows();
  const long cols = src.cols();
  Image<Scalar> tmp(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      Scalar acc = 0;
      for (int k = -radius; k <= radius; ++k) {
        const long cc = std::clamp<long>(c + k, 0, cols - 1);
        acc += taps[k + radius] * src(r, cc);
      }
      tmp(r, c) = acc;
    }
  }
  Image<Scalar> out(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      Scalar acc = 0;
      for (int k = -radius; k <= radius; ++k) {
        const long rr = std::clamp<long>(r + k, 0, rows - 1);
        acc += taps[k + radius] * tmp(rr, c);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

/// Bilinear sample at fractional (row, col); samples outside the frame read as zero.
template <typename Scalar>
Scalar bilinear_zero_padded(const Image<Scalar>& img, Scalar row, Scalar col) {
  const Scalar r0f = std::floor(row);
  const Scalar c0f = std::floor(col);
  const Scalar fr = row - r0f;
  const Scalar fc = col - c0f;
  const long r0 = static_cast<long>(r0f);
  const long c0 = static_cast<long>(c0f);
  auto at = [&](long r, long c) -> Scalar { return in_bounds(img, r, c) ? img(r, c) : Scalar(0); };
  Scalar v = 0;
  if (fr == 0 && fc == 0) return at(r0, c0);
  v += (1 - fr) * (1 - fc) * at(r0, c0);
  v += (1 - fr) * fc * at(r0, c0 + 1);
  v += fr * (1 - fc) * at(r0 + 1, c0);
  v += fr * fc * at(r0 + 1, c0 + 1);
  return v;
}

/// Round half away from zero.
inline int round_half_away(double v) {
  return static_cast<int>(v < 0 ? -std::floor(-v + 0.5) : std::floor(v + 0.5));
}

}  // namespace depthedge
