#include "depthedge/edges.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace depthedge;
using depthedge::fixtures::constant_depth;
using depthedge::fixtures::vertical_step;

namespace {

std::set<Pixel> as_set(const EdgeMap& e) {
  const auto p = e.pixels();
  return {p.begin(), p.end()};
}

// Smooth random depth: a few Gaussian bumps on a slanted plane plus a box.
DepthMap random_scene(std::uint64_t seed, int h = 24, int w = 32) {
  Rng rng(seed);
  ImageD d(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) d(r, c) = 20.0 + 0.3 * r + 0.1 * c;
  }
  const int r0 = static_cast<int>(rng.below(h / 2));
  const int c0 = static_cast<int>(rng.below(w / 2));
  d.block(r0, c0, h / 3, w / 3) -= rng.uniform(2.0, 15.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) d(r, c) += rng.uniform(-0.5, 0.5);
  }
  return DepthMap::from_values(d);
}

}  // namespace

// ---------------------------------------------------------------------------
// depth_gradient

TEST(DepthGradient, ConstantIsZero) {
  const GradientField g = depth_gradient(constant_depth(5, 6, 12.0));
  EXPECT_TRUE((g.magnitude == 0.0).all());
  EXPECT_TRUE(g.defined.all());
}

TEST(DepthGradient, RampHasUnitMagnitudeAndZeroDirection) {
  ImageD d(5, 7);
  for (int c = 0; c < 7; ++c) d.col(c).setConstant(c + 1.0);
  const GradientField g = depth_gradient(DepthMap::from_values(d));
  for (int r = 1; r < 4; ++r) {
    for (int c = 1; c < 6; ++c) {
      EXPECT_DOUBLE_EQ(g.magnitude(r, c), 1.0);
      EXPECT_DOUBLE_EQ(g.direction(r, c), 0.0);
    }
  }
}

TEST(DepthGradient, StepSpreadsOverTwoColumns) {
  const GradientField g = depth_gradient(vertical_step(5, 8, 3, 10.0, 20.0));
  for (int r = 0; r < 5; ++r) {
    EXPECT_EQ(g.magnitude(r, 3), 5.0);
    EXPECT_EQ(g.magnitude(r, 4), 5.0);
    EXPECT_EQ(g.magnitude(r, 2), 0.0);
    EXPECT_EQ(g.magnitude(r, 5), 0.0);
  }
}

TEST(DepthGradient, BordersUseOneSidedDifferences) {
  EXPECT_EQ(diff_stencil(0, 5).plus, 1);
  EXPECT_EQ(diff_stencil(0, 5).minus, 0);
  EXPECT_EQ(diff_stencil(0, 5).coef, 1.0);
  EXPECT_EQ(diff_stencil(2, 5).plus, 1);
  EXPECT_EQ(diff_stencil(2, 5).minus, -1);
  EXPECT_EQ(diff_stencil(2, 5).coef, 0.5);
  EXPECT_EQ(diff_stencil(4, 5).plus, 0);
  EXPECT_EQ(diff_stencil(4, 5).minus, -1);
}

TEST(DepthGradient, UndefinedNextToInvalid) {
  ImageD v = ImageD::Constant(6, 6, 5.0);
  Mask valid = Mask::Constant(6, 6, true);
  valid(2, 3) = false;
  const GradientField g = depth_gradient(DepthMap(v, valid));
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      const bool near = std::abs(r - 2) <= 1 && std::abs(c - 3) <= 1;
      EXPECT_EQ(g.defined(r, c), !near) << r << "," << c;
    }
  }
}

TEST(DepthGradient, TooSmallThrows) {
  EXPECT_THROW(depth_gradient(constant_depth(2, 5, 1.0)), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// nms

TEST(Nms, SpikeSurvives) {
  ImageD m = ImageD::Zero(5, 5);
  m(2, 2) = 3.0;
  const ImageD out = nms(m, ImageD::Zero(5, 5));
  EXPECT_EQ(out(2, 2), 3.0);
  EXPECT_EQ(out.sum(), 3.0);
}

TEST(Nms, TwoWideRidgeKeepsTheLowerColumn) {
  ImageD m = ImageD::Zero(5, 5);
  m.col(2).setConstant(1.0);
  m.col(3).setConstant(1.0);
  const ImageD out = nms(m, ImageD::Zero(5, 5));
  EXPECT_TRUE((out.col(2) == 1.0).all());
  EXPECT_TRUE((out.col(3) == 0.0).all());
  EXPECT_EQ((out > 0).count(), 5);
}

TEST(Nms, VerticalDirectionTieGoesToUpperRow) {
  ImageD m = ImageD::Zero(5, 5);
  m.row(1).setConstant(2.0);
  m.row(2).setConstant(2.0);
  const ImageD out = nms(m, ImageD::Constant(5, 5, std::numbers::pi / 2));
  EXPECT_TRUE((out.row(1) == 2.0).all());
  EXPECT_TRUE((out.row(2) == 0.0).all());
}

TEST(Nms, MonotoneRampKeepsOnlyTheBoundaryMaximum) {
  ImageD m(4, 6);
  for (int c = 0; c < 6; ++c) m.col(c).setConstant(c + 1.0);
  const ImageD out = nms(m, ImageD::Zero(4, 6));
  EXPECT_TRUE((out.col(5) == 6.0).all());
  EXPECT_EQ((out > 0).count(), 4);
}

TEST(Nms, ShapeMismatchThrows) { EXPECT_THROW(nms(ImageD::Zero(3, 3), ImageD::Zero(3, 4)), std::invalid_argument); }

// ---------------------------------------------------------------------------
// hysteresis

TEST(Hysteresis, AllBelowLowIsEmpty) {
  EXPECT_TRUE(hysteresis(ImageD::Constant(4, 4, 0.5), 0.85, 0.9).empty());
}

TEST(Hysteresis, ChainConnectedToSeedIsKept) {
  ImageD s = ImageD::Zero(3, 5);
  s(1, 1) = 0.86;
  s(1, 2) = 0.86;
  s(1, 3) = 0.95;
  EXPECT_EQ(as_set(hysteresis(s, 0.85, 0.9)), (std::set<Pixel>{{1, 1}, {1, 2}, {1, 3}}));
}

TEST(Hysteresis, IsolatedWeakPixelIsDropped) {
  ImageD s = ImageD::Zero(5, 5);
  s(2, 2) = 0.86;
  EXPECT_TRUE(hysteresis(s, 0.85, 0.9).empty());
}

TEST(Hysteresis, DiagonalLinkIsEightConnected) {
  ImageD s = ImageD::Zero(4, 4);
  s(0, 0) = 0.95;
  s(1, 1) = 0.86;
  s(2, 2) = 0.86;
  EXPECT_EQ(hysteresis(s, 0.85, 0.9).count(), 3u);
}

TEST(Hysteresis, ZeroThresholdsMarkEveryPixel) {
  EXPECT_EQ(hysteresis(ImageD::Zero(3, 4), 0.0, 0.0).count(), 12u);
}

TEST(Hysteresis, InvalidConfigThrows) {
  EXPECT_THROW((HysteresisConfig{0.9, 0.85}.validate()), std::invalid_argument);
  EXPECT_THROW((CannyConfig{5.0, 4.0, 0.0}.validate()), std::invalid_argument);
  EXPECT_THROW((CannyConfig{4.0, 5.0, -1.0}.validate()), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// canny_depth_edges

TEST(Canny, ConstantDepthIsEmpty) { EXPECT_TRUE(canny_depth_edges(constant_depth(8, 8, 3.0), {}).empty()); }

TEST(Canny, ThreeMeterStepIsBelowThreshold) {
  EXPECT_TRUE(canny_depth_edges(vertical_step(10, 12, 5, 10.0, 13.0), {}).empty());
}

TEST(Canny, TenMeterStepGivesOneColumn) {
  const int h = 10, w = 12, c = 5;
  const EdgeMap e = canny_depth_edges(vertical_step(h, w, c, 10.0, 20.0), {});
  std::set<Pixel> expected;
  for (int r = 0; r < h; ++r) expected.insert({r, c});
  EXPECT_EQ(as_set(e), expected);
}

TEST(Canny, NoEdgesNextToHoles) {
  DepthMap step = vertical_step(10, 12, 5, 10.0, 20.0);
  Mask valid = step.valid();
  valid(4, 5) = false;
  const EdgeMap e = canny_depth_edges(DepthMap(step.values(), valid), {});
  for (int r = 3; r <= 5; ++r) EXPECT_FALSE(e.contains(r, 5));
}

TEST(Canny, OutputIsThinAlongTheGradient) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DepthMap d = random_scene(seed);
    const GradientField g = depth_gradient(d);
    const EdgeMap e = canny_depth_edges(d, {1.0, 2.0, 0.0});
    for (const Pixel& p : e.pixels()) {
      const double a = g.direction(p.row, p.col);
      const int dc = static_cast<int>(std::lround(std::cos(a)));
      const int dr = static_cast<int>(std::lround(std::sin(a)));
      auto has = [&](int r, int c) { return r >= 0 && c >= 0 && r < e.height() && c < e.width() && e.contains(r, c); };
      EXPECT_FALSE(has(p.row + dr, p.col + dc) && has(p.row - dr, p.col - dc)) << "seed " << seed;
    }
  }
}

TEST(Canny, ThresholdMonotonicity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DepthMap d = random_scene(seed + 100);
    const auto base = as_set(canny_depth_edges(d, {1.0, 2.0, 0.0}));
    const auto higher = as_set(canny_depth_edges(d, {1.0, 3.0, 0.0}));
    const auto lower_low = as_set(canny_depth_edges(d, {0.5, 2.0, 0.0}));
    EXPECT_TRUE(std::includes(base.begin(), base.end(), higher.begin(), higher.end())) << seed;
    EXPECT_TRUE(std::includes(lower_low.begin(), lower_low.end(), base.begin(), base.end())) << seed;
  }
}

TEST(Canny, SmoothingKeepsInvalidPixelsInvalid) {
  ImageD v = ImageD::Constant(6, 6, 5.0);
  Mask valid = Mask::Constant(6, 6, true);
  valid(0, 0) = false;
  const DepthMap s = smooth_depth(DepthMap(v, valid), 1.0);
  EXPECT_FALSE(s.is_valid(0, 0));
  EXPECT_NEAR(s.at(3, 3), 5.0, 1e-12);
}

// ---------------------------------------------------------------------------
// dee_postprocess

TEST(DeePostprocess, ZeroProbabilityIsEmpty) {
  EXPECT_TRUE(dee_postprocess(EdgeProbMap(ImageD::Zero(5, 5)), ImageD::Zero(5, 5), {}).empty());
}

TEST(DeePostprocess, GaussianCrossSectionThinsToThePeak) {
  ImageD p(6, 5);
  for (int r = 0; r < 6; ++r) p.row(r) << 0.2, 0.7, 0.95, 0.7, 0.2;
  const EdgeMap e = dee_postprocess(EdgeProbMap(p), ImageD::Zero(6, 5), {});
  std::set<Pixel> expected;
  for (int r = 0; r < 6; ++r) expected.insert({r, 2});
  EXPECT_EQ(as_set(e), expected);
}

TEST(DeePostprocess, SaturatedMapKeepsTheFirstColumn) {
  const EdgeMap e = dee_postprocess(EdgeProbMap(ImageD::Ones(4, 4)), ImageD::Zero(4, 4), {});
  EXPECT_EQ(as_set(e), (std::set<Pixel>{{0, 0}, {1, 0}, {2, 0}, {3, 0}}));
}

// ---------------------------------------------------------------------------
// gt_from_panoptic

namespace {

PanopticMap two_halves(std::int32_t seg_a, std::int32_t seg_b, std::int32_t cls_a, std::int32_t cls_b,
                       std::set<std::pair<std::int32_t, std::int32_t>> excluded = {}) {
  Image<std::int32_t> seg(4, 6), cls(4, 6);
  seg.leftCols(3).setConstant(seg_a);
  seg.rightCols(3).setConstant(seg_b);
  cls.leftCols(3).setConstant(cls_a);
  cls.rightCols(3).setConstant(cls_b);
  return PanopticMap(seg, cls, std::move(excluded));
}

}  // namespace

TEST(GtFromPanoptic, SingleSegmentIsEmpty) {
  const Image<std::int32_t> one = Image<std::int32_t>::Constant(4, 4, 3);
  EXPECT_TRUE(gt_from_panoptic(PanopticMap(one, one)).empty());
}

TEST(GtFromPanoptic, SameClassInstancesGiveBoundaryOnLargerIdSide) {
  const EdgeMap e = gt_from_panoptic(two_halves(1, 2, 5, 5));
  std::set<Pixel> expected;
  for (int r = 0; r < 4; ++r) expected.insert({r, 3});
  EXPECT_EQ(as_set(e), expected);
  const EdgeMap flipped = gt_from_panoptic(two_halves(2, 1, 5, 5));
  expected.clear();
  for (int r = 0; r < 4; ++r) expected.insert({r, 2});
  EXPECT_EQ(as_set(flipped), expected);
}

TEST(GtFromPanoptic, ExcludedClassPairGivesNoEdge) {
  EXPECT_TRUE(gt_from_panoptic(two_halves(1, 2, 7, 8, {{8, 7}})).empty());
}

TEST(GtFromPanoptic, InvariantToIncreasingRelabeling) {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    Image<std::int32_t> seg(8, 8), cls(8, 8);
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 8; ++c) {
        seg(r, c) = static_cast<std::int32_t>((r / 3) * 3 + c / 3 + rng.below(2) * 10);
        cls(r, c) = seg(r, c) % 4;
      }
    }
    const PanopticMap pm(seg, cls, {{0, 1}});
    const Image<std::int32_t> relabeled = seg.unaryExpr([](std::int32_t s) { return 3 * s + 100; });
    EXPECT_EQ(gt_from_panoptic(pm), gt_from_panoptic(PanopticMap(relabeled, cls, {{0, 1}})));
  }
}

TEST(EdgePipelines, AreDeterministic) {
  const DepthMap d = random_scene(42);
  EXPECT_EQ(canny_depth_edges(d, {1.0, 2.0, 1.0}), canny_depth_edges(d, {1.0, 2.0, 1.0}));
}
