#include "sketchpersp/regularize.hpp"

#include "sketchpersp/bvh.hpp"
#include "sketchpersp/error.hpp"

#include <algorithm>
#include <limits>

namespace sketchpersp {

namespace {

double deviated_depth(const DeviationModel& model, const CameraRig& rig, const Vec3& x) {
  return (model.at(x).matrix() * (rig.combined() * x.homogeneous())).z();
}

Vec2 closest_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  if (!(len2 > 0.0)) return a;
  const double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return a + t * d;
}

}  // namespace

std::pair<double, Vec2> nearest_on_other_curves(const ContourSet& set, std::size_t curve, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  Vec2 target = p;
  for (std::size_t o = 0; o < set.size(); ++o) {
    if (o == curve) continue;
    const auto& other = set.curves[o];
    if (other.size() == 0) continue;
    const std::size_t edges = other.closed ? other.size() : other.size() - 1;
    for (std::size_t e = 0; e < std::max<std::size_t>(edges, 1); ++e) {
      const Vec2 q = closest_on_segment(p, other.points[e], other.points[(e + 1) % other.size()]);
      const double d = (q - p).norm();
      if (d < best) {
        best = d;
        target = q;
      }
    }
  }
  return {best, target};
}

ContourSet deviate_contours(const ContourSet& set, const CameraRig& rig, const DeviationModel& model) {
  ContourSet out = set;
  for (auto& curve : out.curves) {
    if (!curve.has_anchors()) throw Error(ErrorKind::DegenerateInput, "deviation needs anchored curves");
    for (std::size_t i = 0; i < curve.size(); ++i) curve.points[i] = apply(model, rig, curve.anchors[i]);
  }
  return out;
}

std::vector<std::vector<bool>> deviated_visibility(const ContourSet& set, const TriangleMesh& mesh,
                                                   const CameraRig& rig, const DeviationModel& model) {
  const FaceBvh bvh(mesh);
  const double eps = visibility_epsilon(mesh);
  std::vector<std::vector<bool>> keep;
  keep.reserve(set.size());
  for (const auto& curve : set.curves) {
    std::vector<bool> k(curve.size(), true);
    for (std::size_t i = 0; i < curve.size(); ++i) {
      const Vec3& a = curve.anchors[i];
      const Vec3 dir = rig.toward_camera(a);
      const double t_max =
          rig.is_perspective() ? (rig.eye() - a).norm() : std::numeric_limits<double>::infinity();
      const auto hit = bvh.closest_hit(a, dir, eps, t_max);
      if (!hit) continue;
      const Vec3 h = a + hit->t * dir;
      k[i] = !(deviated_depth(model, rig, h) < deviated_depth(model, rig, a));
    }
    keep.push_back(std::move(k));
  }
  return keep;
}

void snap_t_junctions(ContourSet& set, const std::vector<std::array<bool, 2>>& junctions, double interval,
                      RegularizeReport& report) {
  const ContourSet reference = set;
  for (std::size_t c = 0; c < set.size(); ++c) {
    for (int end = 0; end < 2; ++end) {
      if (!junctions[c][static_cast<std::size_t>(end)]) continue;
      ++report.t_junctions;
      auto& curve = set.curves[c];
      Vec2& p = end == 0 ? curve.points.front() : curve.points.back();
      const auto [best, target] = nearest_on_other_curves(reference, c, p);
      if (best > 2.0 * interval) {
        ++report.unresolved;
      } else if (best > interval) {
        p = target;
        ++report.snapped;
      }
    }
  }
}

ContourSet regularize_topology(const ContourSet& deviated, const TriangleMesh& mesh, const CameraRig& rig,
                               const DeviationModel& model, double interval, RegularizeReport* report) {
  RegularizeReport local;
  const auto keep = deviated_visibility(deviated, mesh, rig, model);
  const FaceBvh bvh(mesh);
  const double eps = visibility_epsilon(mesh);
  // Samples whose visibility the deviation changed.
  std::vector<std::vector<bool>> flipped;
  for (std::size_t c = 0; c < deviated.size(); ++c) {
    const auto& curve = deviated.curves[c];
    std::vector<bool> f(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
      local.hidden_samples += keep[c][i] ? 0 : 1;
      f[i] = keep[c][i] != anchor_visible(curve.anchors[i], bvh, rig, eps);
    }
    flipped.push_back(std::move(f));
  }
  std::vector<RunEnds> runs;
  ContourSet out = split_runs(deviated, keep, &runs);
  ContourSet analytic = out;
  for (auto& curve : analytic.curves)
    for (std::size_t i = 0; i < curve.size(); ++i) curve.points[i] = project_to_image(curve.anchors[i], rig);
  // An endpoint is left alone unless the deviation changed something next
  // to it: a visibility flip, or a wider gap to the occluder than the
  // analytic projection has.
  std::vector<std::array<bool, 2>> moved(runs.size(), {false, false});
  int junctions = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& run = runs[r];
    const auto& f = flipped[run.curve];
    const std::size_t n = f.size();
    for (int end = 0; end < 2; ++end) {
      const auto e = static_cast<std::size_t>(end);
      if (!run.junction[e]) continue;
      ++junctions;
      const std::size_t i = run.index[e];
      const std::size_t removed = end == 0 ? (i + n - 1) % n : (i + 1) % n;
      const bool flip = f[i] || f[removed];
      const std::size_t k = end == 0 ? 0 : out.curves[r].size() - 1;
      const double gap = nearest_on_other_curves(out, r, out.curves[r].points[k]).first;
      const double analytic_gap = nearest_on_other_curves(analytic, r, analytic.curves[r].points[k]).first;
      moved[r][e] = flip || gap > analytic_gap;
    }
  }
  snap_t_junctions(out, moved, interval, local);
  local.t_junctions = junctions;
  if (report) *report = local;
  return out;
}

}  // namespace sketchpersp
