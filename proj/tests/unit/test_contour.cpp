#include "sketchpersp/bvh.hpp"
#include "sketchpersp/contour.hpp"
#include "sketchpersp/error.hpp"
#include "sketchpersp/regularize.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace sketchpersp;

namespace {

CameraRig rig_from(const Vec3& eye) {
  return CameraRig(perspective(std::numbers::pi / 4, 1.0, 0.1, 100.0), look_at(eye, Vec3::Zero(), Vec3::UnitY()));
}

int count_silhouette_edges(const TriangleMesh& mesh, const CameraRig& rig) {
  int n = 0;
  for (const auto& f : classify_edges(mesh, rig))
    if (f.silhouette) ++n;
  return n;
}

// Occlusion of one sample by brute force over all faces.
bool visible_oracle(const Vec3& anchor, const TriangleMesh& mesh, const CameraRig& rig, double eps) {
  const Vec3 eye = rig.eye();
  const Vec3 d = eye - anchor;
  const double dist = d.norm();
  const Vec3 dir = d / dist;
  for (const auto& f : mesh.faces()) {
    const auto t = intersect_triangle(anchor, dir, mesh.vertices()[f[0]], mesh.vertices()[f[1]], mesh.vertices()[f[2]]);
    if (t && *t > eps && *t < dist) return false;
  }
  return true;
}

TriangleMesh box(const Vec3& center, const Vec3& half) {
  const auto cube = make_cube();
  std::vector<Vec3> v;
  for (const auto& x : cube.vertices()) v.push_back(center + x.cwiseProduct(half));
  return TriangleMesh(v, cube.faces());
}

TriangleMesh merged(const TriangleMesh& a, const TriangleMesh& b) {
  auto v = a.vertices();
  auto f = a.faces();
  const auto offset = static_cast<int>(v.size());
  v.insert(v.end(), b.vertices().begin(), b.vertices().end());
  for (auto face : b.faces()) {
    for (auto& i : face) i += offset;
    f.push_back(face);
  }
  return TriangleMesh(v, f);
}

}  // namespace

TEST(Contour, CubeFrontViewHasFourSilhouetteEdges) {
  EXPECT_EQ(count_silhouette_edges(make_cube(), rig_from(Vec3(0, 0, 5))), 4);
}

TEST(Contour, CubeCornerViewHasSixSilhouetteEdges) {
  EXPECT_EQ(count_silhouette_edges(make_cube(), rig_from(Vec3(4, 4, 4))), 6);
}

TEST(Contour, CubeCornerViewChainsIntoOneClosedSilhouette) {
  const auto set = extract_contours(make_cube(), rig_from(Vec3(4, 4, 4)));
  int closed_silhouettes = 0;
  int sharp = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.kinds[i] == ContourKind::Silhouette && set.curves[i].closed) ++closed_silhouettes;
    if (set.kinds[i] == ContourKind::Sharp) ++sharp;
  }
  EXPECT_EQ(closed_silhouettes, 1);
  // The remaining six cube edges are sharp: three visible, three hidden,
  // chained through the two corners of degree three.
  EXPECT_EQ(sharp, 6);
}

TEST(Contour, SingleTriangleHasBoundaryOnly) {
  const auto set = extract_contours(make_single_triangle(), rig_from(Vec3(0, 0, 5)));
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set.kinds[0], ContourKind::Boundary);
  EXPECT_TRUE(set.curves[0].closed);
}

TEST(Contour, ProjectedSamplesMatchAnchors) {
  const auto rig = rig_from(Vec3(2.5, 2.0, 3.5));
  const auto set = project_contours(extract_contours(make_bottle(), rig), rig, 0.01);
  ASSERT_FALSE(set.empty());
  for (const auto& c : set.curves) {
    ASSERT_EQ(c.anchors.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
      EXPECT_TRUE(c.points[i].isApprox(project_to_image(c.anchors[i], rig), 1e-12));
  }
}

TEST(Contour, VisibilityAgreesWithPerSampleRayOracle) {
  const auto mesh = make_torus(0.6, 0.3, 32, 16);
  const auto rig = rig_from(Vec3(0.5, 2.5, 3.0));
  const auto projected = project_contours(extract_contours(mesh, rig), rig, 0.01);
  const FaceBvh bvh(mesh);
  const double eps = visibility_epsilon(mesh);
  int hidden = 0;
  for (const auto& c : projected.curves)
    for (const auto& a : c.anchors) {
      const bool v = anchor_visible(a, bvh, rig, eps);
      EXPECT_EQ(v, visible_oracle(a, mesh, rig, eps));
      if (!v) ++hidden;
    }
  EXPECT_GT(hidden, 0);

  const auto trimmed = visibility_trim(projected, mesh, rig);
  for (const auto& c : trimmed.curves)
    for (const auto& a : c.anchors) EXPECT_TRUE(visible_oracle(a, mesh, rig, eps));
}

TEST(Contour, SplitRunsDropsShortRunsAndReportsJunctions) {
  ContourSet set;
  AnchoredPolyline c;
  for (int i = 0; i < 8; ++i) {
    c.points.emplace_back(i, 0);
    c.anchors.emplace_back(i, 0, 0);
  }
  set.push_back(c, ContourKind::Sharp, 0);
  std::vector<std::vector<bool>> keep = {{true, true, true, false, true, false, true, true}};
  std::vector<RunEnds> runs;
  const auto out = split_runs(set, keep, &runs);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.curves[0].size(), 3u);
  EXPECT_EQ(out.curves[1].size(), 2u);
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_FALSE(runs[0].junction[0]);
  EXPECT_TRUE(runs[0].junction[1]);
  EXPECT_TRUE(runs[1].junction[0]);
  EXPECT_FALSE(runs[1].junction[1]);
  EXPECT_EQ(runs[0].index, (std::array<std::size_t, 2>{0, 2}));
  EXPECT_EQ(runs[1].index, (std::array<std::size_t, 2>{6, 7}));
}

TEST(Contour, RenderContoursThrowsWhenNothingIsVisible) {
  // Camera looking away from the shape.
  const CameraRig rig(perspective(std::numbers::pi / 4, 1.0, 0.1, 100.0),
                      look_at(Vec3(0, 0, 5), Vec3(0, 0, 10), Vec3::UnitY()));
  try {
    render_contours(make_cube(), rig);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.kind() == ErrorKind::EmptyContour || e.kind() == ErrorKind::ProjectionSingularity);
  }
}

TEST(Regularize, IdentityReproducesVisibilityTrim) {
  const auto identity = FunctionDeviation([](const Vec3&) { return Mat4(Mat4::Identity()); });
  for (const auto& mesh : {make_cube(), make_bottle(), make_torus(0.6, 0.3, 32, 16)}) {
    const auto rig = rig_from(Vec3(0.5, 2.5, 3.0));
    const auto projected = project_contours(extract_contours(mesh, rig), rig, 0.01);
    const auto trimmed = visibility_trim(projected, mesh, rig);
    RegularizeReport report;
    const auto out = regularize_topology(deviate_contours(projected, rig, identity), mesh, rig, identity, 0.01, &report);
    ASSERT_EQ(out.size(), trimmed.size());
    for (std::size_t c = 0; c < out.size(); ++c) {
      ASSERT_EQ(out.curves[c].size(), trimmed.curves[c].size());
      for (std::size_t i = 0; i < out.curves[c].size(); ++i)
        EXPECT_TRUE(out.curves[c].points[i].isApprox(trimmed.curves[c].points[i], 1e-12));
    }
    EXPECT_EQ(report.snapped, 0);
  }
}

TEST(Regularize, SnapsGapsBetweenOneAndTwoIntervals) {
  ContourSet set;
  AnchoredPolyline occluder, ending;
  for (int i = 0; i <= 10; ++i) {
    occluder.points.emplace_back(0.0, -0.5 + 0.1 * i);
    occluder.anchors.emplace_back(0.0, 0.0, 0.0);
  }
  for (int i = 0; i < 5; ++i) {
    ending.points.emplace_back(0.15 + 0.1 * i, 0.02);
    ending.anchors.emplace_back(0.0, 0.0, 0.0);
  }
  set.push_back(occluder, ContourKind::Silhouette, 0);
  set.push_back(ending, ContourKind::Sharp, 1);
  std::vector<std::array<bool, 2>> junctions = {{{false, false}}, {{true, false}}};
  RegularizeReport report;
  snap_t_junctions(set, junctions, 0.1, report);
  EXPECT_EQ(report.snapped, 1);
  EXPECT_NEAR(set.curves[1].points.front().x(), 0.0, 1e-12);
  EXPECT_NEAR(set.curves[1].points.front().y(), 0.02, 1e-12);

  // A gap beyond two intervals is reported but left alone.
  set.curves[1].points.front() = Vec2(0.35, 0.02);
  RegularizeReport far;
  snap_t_junctions(set, junctions, 0.1, far);
  EXPECT_EQ(far.snapped, 0);
  EXPECT_EQ(far.unresolved, 1);
}

TEST(Regularize, ConvexShapeHasNoJunctions) {
  const auto identity = FunctionDeviation([](const Vec3&) { return Mat4(Mat4::Identity()); });
  for (const auto& mesh : {make_cube(), make_icosphere(2)}) {
    const auto rig = rig_from(Vec3(2.0, 1.5, 3.0));
    const auto projected = project_contours(extract_contours(mesh, rig), rig, 0.01);
    RegularizeReport report;
    regularize_topology(deviate_contours(projected, rig, identity), mesh, rig, identity, 0.01, &report);
    EXPECT_EQ(report.t_junctions, 0);
    EXPECT_EQ(report.snapped, 0);
  }
}

TEST(Regularize, MovedOccluderGetsJunctionsSnappedOntoIt) {
  // A small box in front of the right edge of a wide one; the deviation
  // lifts the small box in the image by 1.5 sampling intervals.
  const auto mesh = merged(box(Vec3(0, 0, -1), Vec3(1, 1, 0.3)), box(Vec3(1, 0, 0.8), Vec3(0.3, 0.3, 0.3)));
  const CameraRig rig(perspective(std::numbers::pi / 3, 1.0, 0.1, 100.0),
                      look_at(Vec3(0, 0, 5), Vec3::Zero(), Vec3::UnitY()));
  const double l = 0.01;
  const auto lift = FunctionDeviation([](const Vec3& p) {
    Mat4 m = Mat4::Identity();
    if (p.z() > 0.0) m(1, 3) = 0.015;
    return m;
  });
  const auto projected = project_contours(extract_contours(mesh, rig), rig, l);
  const auto analytic = visibility_trim(projected, mesh, rig);
  RegularizeReport report;
  const auto out = regularize_topology(deviate_contours(projected, rig, lift), mesh, rig, lift, l, &report);
  ASSERT_EQ(out.size(), analytic.size());
  EXPECT_GT(report.t_junctions, 0);
  EXPECT_GT(report.snapped, 0);
  int on_occluder = 0;
  for (std::size_t c = 0; c < out.size(); ++c) {
    for (const bool front : {true, false}) {
      const Vec2& p = front ? out.curves[c].points.front() : out.curves[c].points.back();
      const Vec2 before = apply(lift, rig, front ? out.curves[c].anchors.front() : out.curves[c].anchors.back());
      if ((p - before).norm() == 0.0) continue;
      EXPECT_LE((p - before).norm(), 2.0 * l + 1e-12);
      EXPECT_LE(nearest_on_other_curves(out, c, p).first, 1e-12);
      ++on_occluder;
    }
  }
  EXPECT_EQ(on_occluder, report.snapped);
}
