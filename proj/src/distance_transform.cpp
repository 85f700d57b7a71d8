#include "depthedge/lidar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace depthedge {

namespace {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher). Infinite samples
// contribute no parabola; an all-infinite line stays infinite.
void squared_edt_1d(const std::vector<double>& f, std::vector<double>& out, std::vector<int>& v,
                    std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -std::numeric_limits<double>::infinity();
      z[1] = std::numeric_limits<double>::infinity();
      continue;
    }
    auto intersect = [&](int p) {
      return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
    };
    double s = intersect(v[k]);
    while (s <= z[k]) s = intersect(v[--k]);  // z[0] = -inf stops the walk
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), std::numeric_limits<double>::infinity());
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    out[q] = d * d + f[v[j]];
  }
}

}  // namespace

ImageD edge_distance_field(const EdgeMap& edges) {
  const int h = edges.height();
  const int w = edges.width();
  const double inf = std::numeric_limits<double>::infinity();
  ImageD sq = edges.mask().select(ImageD::Zero(h, w), inf);
  if (edges.empty()) return sq;

  const int n = std::max(h, w);
  std::vector<double> f, out;
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  for (int c = 0; c < w; ++c) {
    f.assign(h, 0.0);
    out.assign(h, 0.0);
    for (int r = 0; r < h; ++r) f[r] = sq(r, c);
    squared_edt_1d(f, out, v, z);
    for (int r = 0; r < h; ++r) sq(r, c) = out[r];
  }
  for (int r = 0; r < h; ++r) {
    f.assign(w, 0.0);
    out.assign(w, 0.0);
    for (int c = 0; c < w; ++c) f[c] = sq(r, c);
    squared_edt_1d(f, out, v, z);
    for (int c = 0; c < w; ++c) sq(r, c) = out[c];
  }
  return sq.sqrt();
}

}  // namespace depthedge
