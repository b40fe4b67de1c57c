#include "sketchpersp/geom.hpp"

#include "sketchpersp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace sketchpersp {

namespace {

constexpr double kSingularW = 1e-12;

Vec2 point_at(const AnchoredPolyline& poly, std::ptrdiff_t i) {
  const auto n = static_cast<std::ptrdiff_t>(poly.size());
  if (poly.closed) i = ((i % n) + n) % n;
  return poly.points[static_cast<std::size_t>(i)];
}

}  // namespace

double AnchoredPolyline::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += (points[i] - points[i - 1]).norm();
  if (closed && points.size() > 1) total += (points.front() - points.back()).norm();
  return total;
}

// --- Viewport --------------------------------------------------------------

double Viewport::normalized_diagonal() const {
  return 2.0 * std::hypot(width, height) / longer_side();
}

Vec2 Viewport::image_from_ndc(const Vec2& ndc) const {
  return {ndc.x() * (width / longer_side()), ndc.y() * (height / longer_side())};
}

Vec2 Viewport::image_from_pixel(const Vec2& px) const {
  return {(2.0 * px.x() - width) / longer_side(), (height - 2.0 * px.y()) / longer_side()};
}

Vec2 Viewport::pixel_from_image(const Vec2& img) const {
  return {(img.x() * longer_side() + width) / 2.0, (height - img.y() * longer_side()) / 2.0};
}

// --- CameraRig -------------------------------------------------------------

CameraRig::CameraRig()
    : projection_(Mat4::Identity()), modelview_(Mat4::Identity()), combined_(Mat4::Identity()) {}

CameraRig::CameraRig(const Mat4& projection, const Mat4& modelview, Viewport viewport)
    : projection_(projection),
      modelview_(modelview),
      combined_(projection * modelview),
      viewport_(viewport) {
  if (!projection_.allFinite() || !modelview_.allFinite())
    throw Error(ErrorKind::Domain, "camera matrices must be finite");
  if (viewport_.width <= 0 || viewport_.height <= 0)
    throw Error(ErrorKind::Domain, "viewport must have positive size");
}

bool CameraRig::is_perspective() const {
  return !(projection_(3, 0) == 0.0 && projection_(3, 1) == 0.0 && projection_(3, 2) == 0.0 &&
           projection_(3, 3) == 1.0);
}

Vec3 CameraRig::eye() const {
  const Vec4 origin = modelview_.inverse() * Vec4(0, 0, 0, 1);
  return origin.head<3>() / origin.w();
}

Vec3 CameraRig::view_direction() const {
  const Vec4 dir = modelview_.inverse() * Vec4(0, 0, -1, 0);
  return dir.head<3>().normalized();
}

Vec3 CameraRig::toward_camera(const Vec3& point) const {
  if (is_perspective()) return (eye() - point).normalized();
  return -view_direction();
}

// --- DeviationMatrix -------------------------------------------------------

DeviationMatrix::DeviationMatrix() : m_(Mat4::Identity()) {}

DeviationMatrix::DeviationMatrix(const Mat4& m) : m_(m) {
  if (m_(3, 3) != 1.0) throw Error(ErrorKind::Domain, "deviation matrix entry (4,4) must be 1");
  if (!m_.allFinite()) throw Error(ErrorKind::Domain, "deviation matrix has non-finite entries");
}

DeviationMatrix DeviationMatrix::from_free_values(std::span<const double, 15> values) {
  Mat4 m;
  for (int k = 0; k < 15; ++k) m(k / 4, k % 4) = values[static_cast<std::size_t>(k)];
  m(3, 3) = 1.0;
  return DeviationMatrix(m);
}

// --- cameras ---------------------------------------------------------------

Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 f = (target - eye).normalized();
  const Vec3 s = f.cross(up).normalized();
  const Vec3 u = s.cross(f);
  Mat4 m = Mat4::Identity();
  m.block<1, 3>(0, 0) = s.transpose();
  m.block<1, 3>(1, 0) = u.transpose();
  m.block<1, 3>(2, 0) = -f.transpose();
  m(0, 3) = -s.dot(eye);
  m(1, 3) = -u.dot(eye);
  m(2, 3) = f.dot(eye);
  return m;
}

Mat4 perspective(double fovy, double aspect, double near, double far) {
  const double f = 1.0 / std::tan(fovy / 2.0);
  Mat4 m = Mat4::Zero();
  m(0, 0) = f / aspect;
  m(1, 1) = f;
  m(2, 2) = (far + near) / (near - far);
  m(2, 3) = 2.0 * far * near / (near - far);
  m(3, 2) = -1.0;
  return m;
}

Mat4 orthographic(double half_width, double half_height, double near, double far) {
  Mat4 m = Mat4::Identity();
  m(0, 0) = 1.0 / half_width;
  m(1, 1) = 1.0 / half_height;
  m(2, 2) = -2.0 / (far - near);
  m(2, 3) = -(far + near) / (far - near);
  return m;
}

// --- resample --------------------------------------------------------------

AnchoredPolyline resample(const AnchoredPolyline& poly, double interval) {
  if (!(interval > 0.0)) throw Error(ErrorKind::Domain, "resample interval must be positive");
  if (poly.size() < 2) throw Error(ErrorKind::DegenerateInput, "polyline needs at least 2 samples");
  const bool anchored = poly.has_anchors();

  // Vertex list with the closing vertex appended for closed curves.
  std::vector<Vec2> pts = poly.points;
  std::vector<Vec3> anc = poly.anchors;
  if (poly.closed) {
    pts.push_back(pts.front());
    if (anchored) anc.push_back(anc.front());
  }
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
  const double total = cum.back();
  if (!(total > 0.0)) throw Error(ErrorKind::DegenerateInput, "zero-length polyline");

  const double slack = 1e-9 * interval;
  std::vector<double> targets;
  if (poly.closed) {
    const auto segments = static_cast<std::size_t>(std::max(3.0, std::ceil(total / interval - 1e-9)));
    const double step = total / static_cast<double>(segments);
    for (std::size_t k = 0; k < segments; ++k) targets.push_back(step * static_cast<double>(k));
  } else {
    for (std::size_t k = 0;; ++k) {
      const double s = interval * static_cast<double>(k);
      if (s > total - slack) break;
      targets.push_back(s);
    }
    targets.push_back(total);
  }

  AnchoredPolyline out;
  out.closed = poly.closed;
  out.source_id = poly.source_id;
  out.points.reserve(targets.size());
  if (anchored) out.anchors.reserve(targets.size());
  std::size_t seg = 0;
  for (double s : targets) {
    while (seg + 2 < cum.size() && cum[seg + 1] < s) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0.0 ? std::clamp((s - cum[seg]) / len, 0.0, 1.0) : 0.0;
    if (t == 0.0) {
      out.points.push_back(pts[seg]);
      if (anchored) out.anchors.push_back(anc[seg]);
    } else if (t == 1.0) {
      out.points.push_back(pts[seg + 1]);
      if (anchored) out.anchors.push_back(anc[seg + 1]);
    } else {
      out.points.push_back((1.0 - t) * pts[seg] + t * pts[seg + 1]);
      if (anchored) out.anchors.push_back((1.0 - t) * anc[seg] + t * anc[seg + 1]);
    }
  }
  return out;
}

// --- projection ------------------------------------------------------------

Vec2 proj(const Vec3& anchor, const CameraRig& rig, const DeviationMatrix& dev) {
  const Vec4 h = dev.matrix() * (rig.combined() * anchor.homogeneous());
  if (!(std::abs(h.w()) >= kSingularW)) {
    std::ostringstream msg;
    msg << "w = " << h.w() << " at point (" << anchor.x() << ", " << anchor.y() << ", "
        << anchor.z() << ")";
    throw Error(ErrorKind::ProjectionSingularity, msg.str());
  }
  return h.head<2>() / h.w();
}

Vec2 project_to_image(const Vec3& anchor, const CameraRig& rig, const DeviationMatrix& dev) {
  return rig.viewport().image_from_ndc(proj(anchor, rig, dev));
}

Vec2 project_to_image(const Vec3& anchor, const CameraRig& rig) {
  return project_to_image(anchor, rig, DeviationMatrix::identity());
}

// --- differential quantities ----------------------------------------------

Vec2 tangent_at(const AnchoredPolyline& poly, std::size_t i) {
  const auto n = poly.size();
  if (n < 2) throw Error(ErrorKind::DegenerateInput, "polyline needs at least 2 samples");
  if (i >= n) throw Error(ErrorKind::OutOfDomain, "sample index out of range");
  const auto ii = static_cast<std::ptrdiff_t>(i);
  Vec2 d;
  if (poly.closed)
    d = point_at(poly, ii + 1) - point_at(poly, ii - 1);
  else if (i == 0)
    d = poly.points[1] - poly.points[0];
  else if (i + 1 == n)
    d = poly.points[n - 1] - poly.points[n - 2];
  else
    d = poly.points[i + 1] - poly.points[i - 1];
  const double len = d.norm();
  if (!(len > 0.0)) throw Error(ErrorKind::ZeroTangent, "coincident neighbors at sample " + std::to_string(i));
  return d / len;
}

bool has_angle(const AnchoredPolyline& poly, std::size_t i) {
  if (poly.size() < 3 || i >= poly.size()) return false;
  return poly.closed || (i > 0 && i + 1 < poly.size());
}

double angle_at(const AnchoredPolyline& poly, std::size_t i) {
  if (!has_angle(poly, i))
    throw Error(ErrorKind::OutOfDomain, "angle undefined at sample " + std::to_string(i));
  const auto ii = static_cast<std::ptrdiff_t>(i);
  const Vec2 a = point_at(poly, ii - 1) - poly.points[i];
  const Vec2 b = point_at(poly, ii + 1) - poly.points[i];
  const double la = a.norm();
  const double lb = b.norm();
  if (!(la > 0.0) || !(lb > 0.0))
    throw Error(ErrorKind::ZeroTangent, "coincident neighbors at sample " + std::to_string(i));
  // atan2 of cross/dot keeps precision near 0 and pi.
  const double cross = a.x() * b.y() - a.y() * b.x();
  return std::atan2(std::abs(cross), a.dot(b));
}

// --- chamfer ---------------------------------------------------------------

namespace {

class GridIndex {
 public:
  explicit GridIndex(std::span<const Vec2> pts) : pts_(pts) {
    Eigen::AlignedBox2d box;
    for (const auto& p : pts) box.extend(p);
    lo_ = box.min();
    const Vec2 ext = box.sizes();
    const double span = std::max(ext.x(), ext.y());
    cell_ = span > 0.0 ? std::max(2.0 * std::sqrt(ext.x() * ext.y() / static_cast<double>(pts.size())), span / 4096.0)
                       : 1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) cells_[key(cell_of(pts[i]))].push_back(i);
    const auto c = cell_of(box.max());
    max_cx_ = c[0];
    max_cy_ = c[1];
  }

  double nearest_l1(const Vec2& q) const {
    double best = std::numeric_limits<double>::infinity();
    const double fx = (q.x() - lo_.x()) / cell_;
    const double fy = (q.y() - lo_.y()) / cell_;
    const double far = std::max({std::abs(fx), std::abs(fy), std::abs(fx - static_cast<double>(max_cx_)),
                                 std::abs(fy - static_cast<double>(max_cy_))});
    if (!(far <= 64.0)) {
      for (const auto& p : pts_) best = std::min(best, (p - q).lpNorm<1>());
      return best;
    }
    const auto c = cell_of(q);
    const long long max_ring = static_cast<long long>(far) + 2;
    for (long long r = 0; r <= max_ring; ++r) {
      for (long long dx = -r; dx <= r; ++dx) {
        for (long long dy = -r; dy <= r; ++dy) {
          if (std::max(std::llabs(dx), std::llabs(dy)) != r) continue;
          auto it = cells_.find(key({c[0] + dx, c[1] + dy}));
          if (it == cells_.end()) continue;
          for (auto idx : it->second) best = std::min(best, (pts_[idx] - q).lpNorm<1>());
        }
      }
      // Cells in ring r+1 and beyond are at least r*cell away in L-inf, hence in L1.
      if (best <= static_cast<double>(r) * cell_) break;
    }
    return best;
  }

 private:
  std::array<long long, 2> cell_of(const Vec2& p) const {
    return {static_cast<long long>(std::floor((p.x() - lo_.x()) / cell_)),
            static_cast<long long>(std::floor((p.y() - lo_.y()) / cell_))};
  }
  static long long key(std::array<long long, 2> c) { return c[0] * 1000003LL + c[1]; }

  std::span<const Vec2> pts_;
  Vec2 lo_;
  double cell_ = 1.0;
  long long max_cx_ = 0;
  long long max_cy_ = 0;
  std::unordered_map<long long, std::vector<std::size_t>> cells_;
};

void check_chamfer_args(std::span<const Vec2> a, std::span<const Vec2> b, double normalizer) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::DegenerateInput, "chamfer of an empty point set");
  if (!(normalizer > 0.0)) throw Error(ErrorKind::Domain, "chamfer normalizer must be positive");
}

double directed_mean(std::span<const Vec2> from, const GridIndex& to) {
  double sum = 0.0;
  for (const auto& p : from) sum += to.nearest_l1(p);
  return sum / static_cast<double>(from.size());
}

}  // namespace

double chamfer_l1(std::span<const Vec2> a, std::span<const Vec2> b, double normalizer) {
  check_chamfer_args(a, b, normalizer);
  const GridIndex ia(a);
  const GridIndex ib(b);
  return 0.5 * (directed_mean(a, ib) + directed_mean(b, ia)) / normalizer;
}

double chamfer_l1_brute_force(std::span<const Vec2> a, std::span<const Vec2> b, double normalizer) {
  check_chamfer_args(a, b, normalizer);
  auto directed = [](std::span<const Vec2> from, std::span<const Vec2> to) {
    double sum = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) best = std::min(best, (p - q).lpNorm<1>());
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return 0.5 * (directed(a, b) + directed(b, a)) / normalizer;
}

// --- rotation --------------------------------------------------------------

CameraRig rotate_object(const CameraRig& rig, const Vec3& axis, double angle) {
  Mat4 r = Mat4::Identity();
  r.block<3, 3>(0, 0) = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  return CameraRig(rig.projection(), rig.modelview() * r, rig.viewport());
}

std::vector<Vec2> all_points(std::span<const AnchoredPolyline> curves) {
  std::vector<Vec2> out;
  for (const auto& c : curves) out.insert(out.end(), c.points.begin(), c.points.end());
  return out;
}

double mean_discrete_acceleration(std::span<const AnchoredPolyline> curves) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& c : curves) {
    const auto n = c.size();
    if (n < 3) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (!has_angle(c, i)) continue;
      const auto ii = static_cast<std::ptrdiff_t>(i);
      sum += (point_at(c, ii + 1) - 2.0 * c.points[i] + point_at(c, ii - 1)).norm();
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace sketchpersp
