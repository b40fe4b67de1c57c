#include "sketchpersp/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

namespace sketchpersp {

Eigen::Matrix3Xd PairGeometry::anchor_matrix() const {
  Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(anchors.size()));
  for (std::size_t k = 0; k < anchors.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = anchors[k];
  return m;
}

PairGeometry make_pair_geometry(std::span<const AnchoredPolyline> contours,
                                std::span<const AnchoredPolyline> strokes, const MatchSet& matches,
                                const CameraRig& rig) {
  PairGeometry g;
  const auto& vp = rig.viewport();
  g.scale_x = vp.width / vp.longer_side();
  g.scale_y = vp.height / vp.longer_side();
  const Mat4Of<double> identity = to_array(DeviationMatrix::identity());
  for (const auto& c : contours) {
    if (!c.has_anchors() || c.anchors.size() != c.size())
      throw Error(ErrorKind::DegenerateInput, "training contours need one anchor per sample");
    g.curves.push_back({g.vertex_count(), static_cast<int>(c.size()), c.closed});
    for (const auto& a : c.anchors) {
      const Vec4 clip = rig.combined() * a.homogeneous();
      const auto p = deviate(identity, clip, g.scale_x, g.scale_y);
      g.p.emplace_back(p.x, p.y);
      g.anchors.push_back(a);
      g.clip.push_back(clip);
      g.alpha.push_back(0.0);
    }
  }
  for (const auto& e : matches.entries) {
    if (e.curve < 0 || static_cast<std::size_t>(e.curve) >= g.curves.size() || e.i < 0 ||
        e.i >= g.curves[static_cast<std::size_t>(e.curve)].size)
      throw Error(ErrorKind::DegenerateInput, "match refers to a missing contour vertex");
    if (e.stroke < 0 || static_cast<std::size_t>(e.stroke) >= strokes.size() || e.j < 0 ||
        static_cast<std::size_t>(e.j) >= strokes[static_cast<std::size_t>(e.stroke)].size())
      throw Error(ErrorKind::DegenerateInput, "match refers to a missing stroke vertex");
    const int k = g.curves[static_cast<std::size_t>(e.curve)].offset + e.i;
    g.alpha[static_cast<std::size_t>(k)] = e.alpha;
    g.matched.push_back(k);
    g.q.push_back(strokes[static_cast<std::size_t>(e.stroke)].points[static_cast<std::size_t>(e.j)]);
  }
  return g;
}

SmoothnessSampleSet SmoothnessSampleSet::build(int grid_resolution, std::span<const Vec3> anchors, double cutoff) {
  if (grid_resolution < 2) throw Error(ErrorKind::Domain, "smoothness grid needs at least 2 samples per axis");
  SmoothnessSampleSet s;
  const int r = grid_resolution;
  s.grid_count = r * r * r;
  s.points.resize(3, s.grid_count + static_cast<Eigen::Index>(anchors.size()));
  Eigen::Index col = 0;
  auto coord = [r](int i) { return -1.0 + 2.0 * i / (r - 1); };
  for (int x = 0; x < r; ++x)
    for (int y = 0; y < r; ++y)
      for (int z = 0; z < r; ++z) s.points.col(col++) = Vec3(coord(x), coord(y), coord(z));
  for (const auto& a : anchors) s.points.col(col++) = a;
  s.near_pairs = neighbor_pairs(s.points, cutoff);
  return s;
}

std::vector<IndexPair> neighbor_pairs(const Eigen::Matrix3Xd& points, double cutoff) {
  if (!(cutoff > 0.0)) throw Error(ErrorKind::Domain, "neighbor cutoff must be positive");
  using Key = std::array<long long, 3>;
  auto key_of = [cutoff](const Vec3& p) {
    return Key{static_cast<long long>(std::floor(p.x() / cutoff)), static_cast<long long>(std::floor(p.y() / cutoff)),
               static_cast<long long>(std::floor(p.z() / cutoff))};
  };
  std::map<Key, std::vector<int>> cells;
  for (Eigen::Index i = 0; i < points.cols(); ++i) cells[key_of(points.col(i))].push_back(static_cast<int>(i));
  const double c2 = cutoff * cutoff;
  std::vector<IndexPair> out;
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const Key k = key_of(points.col(i));
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy)
        for (long long dz = -1; dz <= 1; ++dz) {
          auto it = cells.find(Key{k[0] + dx, k[1] + dy, k[2] + dz});
          if (it == cells.end()) continue;
          for (int j : it->second)
            if (j != i && (points.col(i) - points.col(j)).squaredNorm() <= c2)
              out.emplace_back(static_cast<int>(i), j);
        }
  }
  std::sort(out.begin(), out.end());
  return out;
}

PairSample sample_pairs(int n, int max_pairs, std::mt19937_64& rng) {
  PairSample out;
  if (n < 2 || max_pairs < 1) return out;
  const double total = static_cast<double>(n) * (n - 1);
  if (total <= max_pairs) {
    out.pairs.reserve(static_cast<std::size_t>(total));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (a != b) out.pairs.emplace_back(a, b);
    out.scale = 1.0;
    return out;
  }
  std::uniform_int_distribution<int> first(0, n - 1);
  std::uniform_int_distribution<int> second(0, n - 2);
  out.pairs.reserve(static_cast<std::size_t>(max_pairs));
  for (int k = 0; k < max_pairs; ++k) {
    const int a = first(rng);
    int b = second(rng);
    if (b >= a) ++b;
    out.pairs.emplace_back(a, b);
  }
  out.scale = total / max_pairs;
  return out;
}

Mat4Of<double> to_array(const DeviationMatrix& m) {
  Mat4Of<double> out{};
  for (int k = 0; k < 16; ++k) out[static_cast<std::size_t>(k)] = m(k / 4, k % 4);
  return out;
}

std::vector<Mat4Of<double>> field_matrices(const DeviationModel& model, std::span<const Vec3> points) {
  std::vector<Mat4Of<double>> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(to_array(model.at(p)));
  return out;
}

std::vector<Mat4Of<double>> field_matrices(const DeviationField& field, const Eigen::Matrix3Xd& points) {
  const FieldOutputs values = field.eval_batch(points);
  std::vector<Mat4Of<double>> out(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    auto& m = out[static_cast<std::size_t>(c)];
    for (int k = 0; k < 15; ++k) m[static_cast<std::size_t>(k)] = values(k, c);
    m[15] = 1.0;
  }
  return out;
}

}  // namespace sketchpersp
