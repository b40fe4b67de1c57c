#include "sketchpersp/error.hpp"
#include "sketchpersp/geom.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace sketchpersp;

namespace {

AnchoredPolyline circle(int n, double r, bool with_anchors = false) {
  AnchoredPolyline c;
  c.closed = true;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    c.points.emplace_back(r * std::cos(t), r * std::sin(t));
    if (with_anchors) c.anchors.emplace_back(r * std::cos(t), r * std::sin(t), 0.0);
  }
  return c;
}

AnchoredPolyline line(Vec2 a, Vec2 b) {
  AnchoredPolyline l;
  l.points = {a, b};
  l.anchors = {Vec3(a.x(), a.y(), 0.0), Vec3(b.x(), b.y(), 0.0)};
  return l;
}

CameraRig test_rig() {
  return CameraRig(perspective(std::numbers::pi / 4, 1.0, 0.1, 100.0),
                   look_at(Vec3(2.5, 2.0, 3.5), Vec3::Zero(), Vec3::UnitY()));
}

}  // namespace

TEST(Resample, OpenCurveKeepsEndpointsAndSpacing) {
  const auto r = resample(line(Vec2(0, 0), Vec2(1, 0)), 0.3);
  ASSERT_EQ(r.size(), 5u);
  EXPECT_DOUBLE_EQ(r.points.front().x(), 0.0);
  EXPECT_DOUBLE_EQ(r.points.back().x(), 1.0);
  for (std::size_t i = 1; i + 1 < r.size(); ++i) EXPECT_NEAR(r.points[i].x() - r.points[i - 1].x(), 0.3, 1e-12);
  ASSERT_EQ(r.anchors.size(), r.size());
  EXPECT_NEAR(r.anchors[2].x(), 0.6, 1e-12);
}

TEST(Resample, ClosedCurveIsEquallySpaced) {
  const auto c = resample(circle(64, 1.0), 0.05);
  ASSERT_TRUE(c.closed);
  const double perimeter = c.length();
  const double expected = perimeter / static_cast<double>(c.size());
  EXPECT_LE(expected, 0.05 + 1e-12);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = (c.points[(i + 1) % c.size()] - c.points[i]).norm();
    EXPECT_NEAR(d, expected, 2e-3);
  }
}

TEST(Resample, RejectsNonPositiveInterval) {
  EXPECT_THROW(resample(line(Vec2(0, 0), Vec2(1, 0)), 0.0), Error);
}

TEST(Tangent, CircleTangentIsPerpendicularToRadius) {
  const int n = 72;
  const auto c = circle(n, 2.0);
  const double step = 2.0 * std::numbers::pi / n;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec2 t = tangent_at(c, i);
    EXPECT_NEAR(t.norm(), 1.0, 1e-12);
    const double cosine = std::abs(t.dot(c.points[i].normalized()));
    EXPECT_LE(std::asin(std::min(1.0, cosine)), 2.0 * step);
  }
}

TEST(Tangent, DuplicatePointsThrowZeroTangent) {
  AnchoredPolyline p;
  p.points = {Vec2(0, 0), Vec2(0, 0)};
  try {
    tangent_at(p, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroTangent);
  }
}

TEST(Angle, RegularPolygonInteriorAngle) {
  const int n = 12;
  const auto c = circle(n, 1.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    EXPECT_NEAR(angle_at(c, i), std::numbers::pi * (n - 2) / n, 1e-12);
}

TEST(Angle, OpenEndpointsAreOutOfDomain) {
  const auto l = resample(line(Vec2(0, 0), Vec2(1, 0)), 0.25);
  EXPECT_FALSE(has_angle(l, 0));
  EXPECT_TRUE(has_angle(l, 1));
  EXPECT_NEAR(angle_at(l, 1), std::numbers::pi, 1e-12);
  EXPECT_THROW(angle_at(l, 0), Error);
}

TEST(Chamfer, MatchesBruteForceOnRandomSets) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Vec2> a(1 + trial * 13), b(3 + trial * 7);
    for (auto& p : a) p = Vec2(u(rng), u(rng));
    for (auto& p : b) p = Vec2(u(rng), u(rng));
    EXPECT_NEAR(chamfer_l1(a, b, 2.0), chamfer_l1_brute_force(a, b, 2.0), 1e-12);
  }
}

TEST(Chamfer, HandValue) {
  std::vector<Vec2> a = {Vec2(0, 0)};
  std::vector<Vec2> b = {Vec2(1, 1), Vec2(3, 0)};
  // a->b: min(2, 3) = 2; b->a: mean(2, 3) = 2.5; symmetric mean 2.25.
  EXPECT_DOUBLE_EQ(chamfer_l1(a, b, 1.0), 2.25);
  EXPECT_DOUBLE_EQ(chamfer_l1(a, b, 2.25), 1.0);
  EXPECT_DOUBLE_EQ(chamfer_l1(a, a, 1.0), 0.0);
  const std::vector<Vec2> origin = {Vec2(0, 0)};
  const std::vector<Vec2> far = {Vec2(3, 4)};
  EXPECT_DOUBLE_EQ(chamfer_l1(origin, far, 1.0), 7.0);
}

TEST(Chamfer, EmptySetThrows) {
  std::vector<Vec2> a = {Vec2(0, 0)};
  std::vector<Vec2> none;
  EXPECT_THROW(chamfer_l1(a, none, 1.0), Error);
}

TEST(Projection, IdentityDeviationMatchesCameraProjection) {
  const auto rig = test_rig();
  const Vec3 x(0.3, -0.2, 0.5);
  const Vec4 h = rig.combined() * x.homogeneous();
  const Vec2 ndc = h.head<2>() / h.w();
  EXPECT_TRUE(proj(x, rig, DeviationMatrix::identity()).isApprox(ndc, 1e-14));
}

TEST(Projection, DeviationScalesX) {
  const auto rig = test_rig();
  Mat4 m = Mat4::Identity();
  m(0, 0) = 1.1;
  const Vec3 x(0.3, -0.2, 0.5);
  const Vec2 a = proj(x, rig, DeviationMatrix::identity());
  const Vec2 b = proj(x, rig, DeviationMatrix(m));
  EXPECT_NEAR(b.x(), 1.1 * a.x(), 1e-14);
  EXPECT_NEAR(b.y(), a.y(), 1e-14);
}

TEST(Projection, PointOnCameraPlaneIsSingular) {
  const auto rig = test_rig();
  const Vec3 eye = rig.eye();
  try {
    proj(eye, rig, DeviationMatrix::identity());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ProjectionSingularity);
  }
}

TEST(DeviationMatrix, RejectsFreeCorner) {
  Mat4 m = Mat4::Identity();
  m(3, 3) = 2.0;
  EXPECT_THROW(DeviationMatrix{m}, Error);
  m(3, 3) = 1.0;
  m(1, 2) = std::nan("");
  EXPECT_THROW(DeviationMatrix{m}, Error);
}

TEST(DeviationMatrix, FreeValuesAreRowMajor) {
  std::array<double, 15> v{};
  for (int k = 0; k < 15; ++k) v[static_cast<std::size_t>(k)] = k;
  const auto d = DeviationMatrix::from_free_values(v);
  EXPECT_EQ(d(0, 1), 1.0);
  EXPECT_EQ(d(1, 0), 4.0);
  EXPECT_EQ(d(3, 2), 14.0);
  EXPECT_EQ(d(3, 3), 1.0);
}

TEST(Viewport, NormalizedImageSpace) {
  Viewport vp{800, 400};
  EXPECT_NEAR(vp.normalized_diagonal(), std::sqrt(4.0 + 1.0), 1e-12);
  const Vec2 img = vp.image_from_ndc(Vec2(1, 1));
  EXPECT_NEAR(img.x(), 1.0, 1e-12);
  EXPECT_NEAR(img.y(), 0.5, 1e-12);
  const Vec2 px(123.0, 321.0);
  EXPECT_TRUE(vp.pixel_from_image(vp.image_from_pixel(px)).isApprox(px, 1e-12));
}

TEST(Camera, RotateObjectKeepsEyeDistance) {
  const auto rig = test_rig();
  const auto r = rotate_object(rig, Vec3::UnitY(), 0.3);
  EXPECT_NEAR(r.eye().norm(), rig.eye().norm(), 1e-12);
  const auto back = rotate_object(r, Vec3::UnitY(), -0.3);
  EXPECT_TRUE(back.combined().isApprox(rig.combined(), 1e-12));
}

TEST(Acceleration, StraightLineHasNone) {
  const auto l = resample(line(Vec2(0, 0), Vec2(1, 0)), 0.125);
  std::vector<AnchoredPolyline> curves = {l};
  EXPECT_NEAR(mean_discrete_acceleration(curves), 0.0, 1e-12);
}
