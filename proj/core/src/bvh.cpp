#include "sketchpersp/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sketchpersp {

namespace {

constexpr int kLeafSize = 4;

bool ray_box(const Eigen::AlignedBox3d& box, const Vec3& origin, const Vec3& inv_dir, double t_min,
             double t_max) {
  for (int a = 0; a < 3; ++a) {
    double t0 = (box.min()[a] - origin[a]) * inv_dir[a];
    double t1 = (box.max()[a] - origin[a]) * inv_dir[a];
    if (std::isnan(t0) || std::isnan(t1)) {
      // Ray parallel to the slab with the origin on a slab plane.
      if (origin[a] < box.min()[a] || origin[a] > box.max()[a]) return false;
      continue;
    }
    if (t0 > t1) std::swap(t0, t1);
    t_min = std::max(t_min, t0);
    t_max = std::min(t_max, t1);
    if (t_min > t_max) return false;
  }
  return true;
}

}  // namespace

std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                         const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tvec = origin - a;
  const double u = tvec.dot(pvec) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  return e2.dot(qvec) * inv;
}

FaceBvh::FaceBvh(const TriangleMesh& mesh) : mesh_(&mesh) {
  const auto& faces = mesh.faces();
  const auto& verts = mesh.vertices();
  order_.resize(faces.size());
  for (std::size_t i = 0; i < faces.size(); ++i) {
    order_[i] = static_cast<int>(i);
    Eigen::AlignedBox3d box;
    for (int k : faces[i]) box.extend(verts[k]);
    face_boxes_.push_back(box);
    centroids_.push_back((verts[faces[i][0]] + verts[faces[i][1]] + verts[faces[i][2]]) / 3.0);
  }
  if (!faces.empty()) build(0, static_cast<int>(faces.size()), 0);
}

int FaceBvh::build(int first, int count, int depth) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Eigen::AlignedBox3d box;
  Eigen::AlignedBox3d cbox;
  for (int i = first; i < first + count; ++i) {
    box.extend(face_boxes_[order_[i]]);
    cbox.extend(centroids_[order_[i]]);
  }
  nodes_[index].box = box;
  if (count <= kLeafSize || depth > 48) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }
  int axis = 0;
  cbox.sizes().maxCoeff(&axis);
  const int mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](int a, int b) { return centroids_[a][axis] < centroids_[b][axis]; });
  const int left = build(first, mid - first, depth + 1);
  const int right = build(mid, first + count - mid, depth + 1);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

template <bool AnyHit>
std::optional<FaceBvh::Hit> FaceBvh::traverse(const Vec3& origin, const Vec3& dir, double t_min,
                                              double t_max) const {
  if (nodes_.empty()) return std::nullopt;
  const Vec3 inv_dir = dir.cwiseInverse();
  std::optional<Hit> best;
  double limit = t_max;
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  const auto& faces = mesh_->faces();
  const auto& verts = mesh_->vertices();
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!ray_box(node.box, origin, inv_dir, t_min, limit)) continue;
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const auto& f = faces[order_[i]];
        const auto t = intersect_triangle(origin, dir, verts[f[0]], verts[f[1]], verts[f[2]]);
        if (t && *t > t_min && *t < limit) {
          best = Hit{*t, order_[i]};
          if constexpr (AnyHit) return best;
          limit = *t;
        }
      }
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return best;
}

std::optional<FaceBvh::Hit> FaceBvh::closest_hit(const Vec3& origin, const Vec3& dir, double t_min,
                                                 double t_max) const {
  return traverse<false>(origin, dir, t_min, t_max);
}

bool FaceBvh::any_hit(const Vec3& origin, const Vec3& dir, double t_min, double t_max) const {
  return traverse<true>(origin, dir, t_min, t_max).has_value();
}

}  // namespace sketchpersp
