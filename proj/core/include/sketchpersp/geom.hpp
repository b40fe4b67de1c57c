#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace sketchpersp {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

/// A sampled 2D curve. Contour curves carry one 3D anchor (normalized
/// object space) per sample; sketch strokes carry none.
struct AnchoredPolyline {
  std::vector<Vec2> points;
  std::vector<Vec3> anchors;  // empty, or same size as points
  bool closed = false;
  int source_id = -1;

  std::size_t size() const { return points.size(); }
  bool has_anchors() const { return !anchors.empty(); }
  double length() const;
};

/// Pixel size of the image the camera renders into. Two-dimensional
/// positions in this library live in a normalized image space where the
/// longer side spans [-1, 1].
struct Viewport {
  double width = 1000.0;
  double height = 1000.0;

  double longer_side() const { return width > height ? width : height; }
  /// Diagonal length expressed in normalized image units.
  double normalized_diagonal() const;
  Vec2 image_from_ndc(const Vec2& ndc) const;
  Vec2 image_from_pixel(const Vec2& px) const;
  Vec2 pixel_from_image(const Vec2& img) const;
};

class CameraRig {
 public:
  CameraRig();
  CameraRig(const Mat4& projection, const Mat4& modelview, Viewport viewport = {});

  const Mat4& projection() const { return projection_; }
  const Mat4& modelview() const { return modelview_; }
  const Mat4& combined() const { return combined_; }
  const Viewport& viewport() const { return viewport_; }

  /// True unless the projection's last row is (0, 0, 0, 1).
  bool is_perspective() const;
  /// Camera center in object space (perspective rigs).
  Vec3 eye() const;
  /// Viewing direction in object space (orthographic rigs).
  Vec3 view_direction() const;
  /// Direction from `point` toward the camera, unit length.
  Vec3 toward_camera(const Vec3& point) const;

 private:
  Mat4 projection_;
  Mat4 modelview_;
  Mat4 combined_;
  Viewport viewport_;
};

/// 4x4 matrix whose bottom-right entry is exactly 1.
class DeviationMatrix {
 public:
  DeviationMatrix();
  /// Throws Domain if entry (3,3) is not exactly 1 or any entry is non-finite.
  explicit DeviationMatrix(const Mat4& m);
  /// Row-major, the first 15 entries of the matrix.
  static DeviationMatrix from_free_values(std::span<const double, 15> values);
  static DeviationMatrix identity() { return DeviationMatrix(); }

  const Mat4& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

 private:
  Mat4 m_;
};

// --- camera construction -------------------------------------------------

Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up);
/// OpenGL-style perspective frustum; fovy in radians.
Mat4 perspective(double fovy, double aspect, double near, double far);
/// OpenGL-style orthographic volume [-half_width, half_width] x [-half_height, half_height].
Mat4 orthographic(double half_width, double half_height, double near, double far);

// --- operations ----------------------------------------------------------

/// Resample at a fixed arc-length interval. Open curves keep both endpoints
/// and may end with a shorter segment; closed curves are split into equal
/// segments no longer than `interval`. Anchors are interpolated linearly.
AnchoredPolyline resample(const AnchoredPolyline& poly, double interval);

/// x, y of dev * C * [p;1] after the perspective divide (NDC).
Vec2 proj(const Vec3& anchor, const CameraRig& rig, const DeviationMatrix& dev);
/// proj() followed by the viewport map into normalized image space.
Vec2 project_to_image(const Vec3& anchor, const CameraRig& rig, const DeviationMatrix& dev);
Vec2 project_to_image(const Vec3& anchor, const CameraRig& rig);

Vec2 tangent_at(const AnchoredPolyline& poly, std::size_t i);
/// Interior angle in [0, pi]. Endpoints of open curves are out of domain.
double angle_at(const AnchoredPolyline& poly, std::size_t i);
bool has_angle(const AnchoredPolyline& poly, std::size_t i);

/// Symmetric mean of L1 nearest-neighbor distances, divided by normalizer.
double chamfer_l1(std::span<const Vec2> a, std::span<const Vec2> b, double normalizer);
/// O(n*m) reference used to validate the accelerated version.
double chamfer_l1_brute_force(std::span<const Vec2> a, std::span<const Vec2> b,
                              double normalizer);

CameraRig rotate_object(const CameraRig& rig, const Vec3& axis, double angle);

std::vector<Vec2> all_points(std::span<const AnchoredPolyline> curves);

/// Mean of |p[i+1] - 2 p[i] + p[i-1]| over interior samples of all curves.
double mean_discrete_acceleration(std::span<const AnchoredPolyline> curves);

}  // namespace sketchpersp
