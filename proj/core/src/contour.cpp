#include "sketchpersp/contour.hpp"

#include "sketchpersp/bvh.hpp"
#include "sketchpersp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sketchpersp {

std::string_view to_string(ContourKind kind) {
  switch (kind) {
    case ContourKind::Silhouette: return "silhouette";
    case ContourKind::Sharp: return "sharp";
    case ContourKind::Boundary: return "boundary";
  }
  return "silhouette";
}

ContourKind contour_kind_from_string(std::string_view name) {
  if (name == "silhouette") return ContourKind::Silhouette;
  if (name == "sharp") return ContourKind::Sharp;
  if (name == "boundary") return ContourKind::Boundary;
  throw Error(ErrorKind::Parse, "unknown contour kind '" + std::string(name) + "'");
}

void ContourSet::push_back(AnchoredPolyline curve, ContourKind kind, int edge) {
  curves.push_back(std::move(curve));
  kinds.push_back(kind);
  first_edge.push_back(edge);
}

std::vector<EdgeFlags> classify_edges(const TriangleMesh& mesh, const CameraRig& rig,
                                      double sharp_angle) {
  const auto& verts = mesh.vertices();
  const auto& normals = mesh.face_normals();
  std::vector<EdgeFlags> flags(mesh.edges().size());
  const double cos_sharp = std::cos(sharp_angle);
  for (std::size_t e = 0; e < mesh.edges().size(); ++e) {
    const auto& edge = mesh.edges()[e];
    if (edge.faces.size() == 1) {
      flags[e].boundary = true;
      continue;
    }
    const Vec3 mid = 0.5 * (verts[edge.v0] + verts[edge.v1]);
    const Vec3 view = rig.toward_camera(mid);
    const Vec3& n1 = normals[edge.faces[0]];
    const Vec3& n2 = normals[edge.faces[1]];
    const bool front1 = n1.dot(view) > 0.0;
    const bool front2 = n2.dot(view) > 0.0;
    flags[e].silhouette = front1 != front2;
    // Non-manifold edges are always treated as features.
    flags[e].sharp = edge.faces.size() > 2 || n1.dot(n2) < cos_sharp;
  }
  return flags;
}

namespace {

ContourKind primary_kind(const EdgeFlags& f) {
  if (f.boundary) return ContourKind::Boundary;
  if (f.silhouette) return ContourKind::Silhouette;
  return ContourKind::Sharp;
}

struct Chain {
  std::vector<int> vertices;
  bool closed = false;
  int first_edge = 0;
  ContourKind kind = ContourKind::Sharp;
};

std::vector<Chain> chain_edges(const TriangleMesh& mesh, const std::vector<EdgeFlags>& flags) {
  const auto& edges = mesh.edges();
  const auto nv = mesh.vertices().size();
  std::vector<Chain> chains;
  for (ContourKind kind : {ContourKind::Silhouette, ContourKind::Sharp, ContourKind::Boundary}) {
    std::vector<std::vector<int>> incident(nv);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (!flags[e].any() || primary_kind(flags[e]) != kind) continue;
      incident[edges[e].v0].push_back(static_cast<int>(e));
      incident[edges[e].v1].push_back(static_cast<int>(e));
    }
    std::vector<bool> used(edges.size(), false);
    auto other = [&](int e, int v) { return edges[e].v0 == v ? edges[e].v1 : edges[e].v0; };
    // Follow the chain from vertex v leaving through edge e; stops at vertices
    // whose degree is not two.
    auto walk = [&](int v, int e, std::vector<int>& out, int& min_edge) {
      while (true) {
        used[e] = true;
        min_edge = std::min(min_edge, e);
        const int w = other(e, v);
        out.push_back(w);
        if (incident[w].size() != 2) return false;
        const int next = incident[w][0] == e ? incident[w][1] : incident[w][0];
        if (used[next]) return true;  // closed the loop
        v = w;
        e = next;
      }
    };
    for (std::size_t e0 = 0; e0 < edges.size(); ++e0) {
      if (!flags[e0].any() || primary_kind(flags[e0]) != kind || used[e0]) continue;
      const int e = static_cast<int>(e0);
      Chain chain;
      chain.kind = kind;
      chain.first_edge = e;
      std::vector<int> forward{edges[e].v0};
      const bool loop = walk(edges[e].v0, e, forward, chain.first_edge);
      if (loop) {
        forward.pop_back();  // closing vertex repeats the start
        chain.vertices = std::move(forward);
        chain.closed = true;
      } else {
        std::vector<int> backward;
        const int start = edges[e].v0;
        if (incident[start].size() == 2) {
          const int prev = incident[start][0] == e ? incident[start][1] : incident[start][0];
          if (!used[prev]) walk(start, prev, backward, chain.first_edge);
        }
        std::reverse(backward.begin(), backward.end());
        backward.insert(backward.end(), forward.begin(), forward.end());
        chain.vertices = std::move(backward);
      }
      chains.push_back(std::move(chain));
    }
  }
  std::stable_sort(chains.begin(), chains.end(),
                   [](const Chain& a, const Chain& b) { return a.first_edge < b.first_edge; });
  return chains;
}

}  // namespace

ContourSet extract_contours(const TriangleMesh& mesh, const CameraRig& rig, double sharp_angle) {
  if (mesh.empty()) throw Error(ErrorKind::DegenerateInput, "mesh has no faces");
  const auto flags = classify_edges(mesh, rig, sharp_angle);
  ContourSet set;
  for (const auto& chain : chain_edges(mesh, flags)) {
    AnchoredPolyline curve;
    curve.closed = chain.closed;
    curve.source_id = chain.first_edge;
    for (int v : chain.vertices) {
      const Vec3& anchor = mesh.vertices()[v];
      curve.anchors.push_back(anchor);
      curve.points.push_back(project_to_image(anchor, rig));
    }
    set.push_back(std::move(curve), chain.kind, chain.first_edge);
  }
  if (set.empty()) throw Error(ErrorKind::EmptyContour, "no contour edges under this camera");
  return set;
}

ContourSet project_contours(const ContourSet& set, const CameraRig& rig, double interval) {
  if (set.empty()) throw Error(ErrorKind::EmptyContour, "nothing to project");
  ContourSet out;
  for (std::size_t c = 0; c < set.size(); ++c) {
    AnchoredPolyline curve = set.curves[c];
    for (const auto& a : curve.anchors)
      if (!((rig.combined() * a.homogeneous()).w() > 0.0))
        throw Error(ErrorKind::ProjectionSingularity, "contour point behind the camera");
    for (std::size_t i = 0; i < curve.size(); ++i) curve.points[i] = project_to_image(curve.anchors[i], rig);
    if (curve.size() < 2 || !(curve.length() > 1e-12)) continue;
    AnchoredPolyline sampled = resample(curve, interval);
    // Image positions come from the anchors so that proj(anchor) == point exactly.
    for (std::size_t i = 0; i < sampled.size(); ++i)
      sampled.points[i] = project_to_image(sampled.anchors[i], rig);
    out.push_back(std::move(sampled), set.kinds[c], set.first_edge[c]);
  }
  return out;
}

double visibility_epsilon(const TriangleMesh& mesh) { return 1e-4 * mesh.bounds().diagonal().norm(); }

bool anchor_visible(const Vec3& anchor, const FaceBvh& bvh, const CameraRig& rig, double epsilon) {
  const Vec3 dir = rig.toward_camera(anchor);
  const double t_max =
      rig.is_perspective() ? (rig.eye() - anchor).norm() : std::numeric_limits<double>::infinity();
  return !bvh.any_hit(anchor, dir, epsilon, t_max);
}

ContourSet split_runs(const ContourSet& set, const std::vector<std::vector<bool>>& keep,
                      std::vector<RunEnds>* runs) {
  ContourSet out;
  if (runs) runs->clear();
  for (std::size_t c = 0; c < set.size(); ++c) {
    const auto& curve = set.curves[c];
    const auto& k = keep[c];
    const auto n = curve.size();
    if (std::all_of(k.begin(), k.end(), [](bool b) { return b; })) {
      out.push_back(curve, set.kinds[c], set.first_edge[c]);
      if (runs) runs->push_back({{false, false}, c, {0, n - 1}});
      continue;
    }
    // Closed curves are unrolled starting right after a dropped sample.
    std::size_t start = 0;
    if (curve.closed) {
      while (k[start]) ++start;
      start = (start + 1) % n;
    }
    AnchoredPolyline run;
    bool front = false;
    std::size_t first = 0;
    std::size_t last = 0;
    auto flush = [&](bool back) {
      if (run.size() >= 2) {
        run.closed = false;
        run.source_id = curve.source_id;
        out.push_back(std::move(run), set.kinds[c], set.first_edge[c]);
        if (runs) runs->push_back({{front, back}, c, {first, last}});
      }
      run = AnchoredPolyline{};
    };
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t i = (start + s) % n;
      if (!k[i]) {
        flush(true);
        continue;
      }
      if (run.size() == 0) {
        front = curve.closed || i > 0;
        first = i;
      }
      last = i;
      run.points.push_back(curve.points[i]);
      if (curve.has_anchors()) run.anchors.push_back(curve.anchors[i]);
    }
    flush(curve.closed);
  }
  return out;
}

ContourSet visibility_trim(const ContourSet& set, const TriangleMesh& mesh, const CameraRig& rig) {
  const FaceBvh bvh(mesh);
  const double eps = visibility_epsilon(mesh);
  std::vector<std::vector<bool>> keep;
  keep.reserve(set.size());
  for (const auto& curve : set.curves) {
    std::vector<bool> k(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) k[i] = anchor_visible(curve.anchors[i], bvh, rig, eps);
    keep.push_back(std::move(k));
  }
  return split_runs(set, keep);
}

ContourSet render_contours(const TriangleMesh& mesh, const CameraRig& rig, const ContourOptions& options) {
  if (!(options.sampling_factor > 0.0)) throw Error(ErrorKind::Domain, "sampling factor must be positive");
  ContourSet set = project_contours(extract_contours(mesh, rig, options.sharp_angle), rig,
                                    options.interval(rig.viewport()));
  if (!options.include_hidden) set = visibility_trim(set, mesh, rig);
  if (set.empty()) throw Error(ErrorKind::EmptyContour, "no visible contours under this camera");
  return set;
}

}  // namespace sketchpersp
