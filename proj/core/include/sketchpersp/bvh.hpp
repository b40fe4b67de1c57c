#pragma once

#include "sketchpersp/mesh.hpp"

#include <optional>
#include <vector>

namespace sketchpersp {

/// Axis-aligned bounding volume hierarchy over the faces of a mesh.
class FaceBvh {
 public:
  explicit FaceBvh(const TriangleMesh& mesh);

  struct Hit {
    double t = 0.0;
    int face = -1;
  };

  /// Closest hit with t in (t_min, t_max) along origin + t * dir.
  std::optional<Hit> closest_hit(const Vec3& origin, const Vec3& dir, double t_min,
                                 double t_max) const;
  /// True if any face is hit with t in (t_min, t_max).
  bool any_hit(const Vec3& origin, const Vec3& dir, double t_min, double t_max) const;

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1;  // child index, or -1 for leaves
    int right = -1;
    int first = 0;  // leaf range into order_
    int count = 0;
  };

  int build(int first, int count, int depth);
  template <bool AnyHit>
  std::optional<Hit> traverse(const Vec3& origin, const Vec3& dir, double t_min, double t_max) const;

  const TriangleMesh* mesh_;
  std::vector<int> order_;
  std::vector<Eigen::AlignedBox3d> face_boxes_;
  std::vector<Vec3> centroids_;
  std::vector<Node> nodes_;
};

/// Moller-Trumbore; returns the ray parameter of the hit, if any.
std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                         const Vec3& b, const Vec3& c);

}  // namespace sketchpersp
