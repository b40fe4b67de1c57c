#pragma once

#include "sketchpersp/autodiff.hpp"
#include "sketchpersp/error.hpp"
#include "sketchpersp/field.hpp"
#include "sketchpersp/geom.hpp"
#include "sketchpersp/matching.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace sketchpersp {

template <class T>
struct Point2 {
  T x;
  T y;
};

using IndexPair = std::pair<int, int>;

/// Everything the loss terms need from one contour/sketch pair, flattened:
/// vertex k of the pair is curve c, sample i with k = curves[c].offset + i.
struct PairGeometry {
  struct Curve {
    int offset = 0;
    int size = 0;
    bool closed = false;
  };

  std::vector<Curve> curves;
  std::vector<Vec2> p;        // analytic image positions
  std::vector<Vec3> anchors;  // object-space anchors
  std::vector<Vec4> clip;     // C * [anchor; 1]
  std::vector<double> alpha;  // confidence, 0 for unmatched vertices
  std::vector<int> matched;   // flat indices of matched vertices
  std::vector<Vec2> q;        // stroke position per matched vertex
  double scale_x = 1.0;       // NDC -> normalized image space
  double scale_y = 1.0;

  int vertex_count() const { return static_cast<int>(p.size()); }
  Eigen::Matrix3Xd anchor_matrix() const;
};

/// Analytic positions are recomputed from the anchors so that the identity
/// field reproduces them exactly.
PairGeometry make_pair_geometry(std::span<const AnchoredPolyline> contours,
                                std::span<const AnchoredPolyline> strokes, const MatchSet& matches,
                                const CameraRig& rig);

/// Contour anchors plus a regular grid over [-1, 1]^3, with every ordered
/// pair of samples closer than the kernel cutoff.
struct SmoothnessSampleSet {
  Eigen::Matrix3Xd points;
  int grid_count = 0;  // the first grid_count columns are grid vertices
  std::vector<IndexPair> near_pairs;

  /// Pairs farther apart than `cutoff` are left out of near_pairs.
  static SmoothnessSampleSet build(int grid_resolution, std::span<const Vec3> anchors, double cutoff);
  Eigen::Index size() const { return points.cols(); }
};

/// Kernel weights below exp(-12.5) are treated as zero.
inline constexpr double kSmoothCutoffSigmas = 5.0;

/// Ordered pairs (i != j) of columns no farther apart than `cutoff`.
std::vector<IndexPair> neighbor_pairs(const Eigen::Matrix3Xd& points, double cutoff);

/// Ordered pairs (i != j) drawn uniformly with their estimator scale. When
/// the full set of ordered pairs is no larger than `max_pairs` it is
/// enumerated exactly.
struct PairSample {
  std::vector<IndexPair> pairs;
  double scale = 0.0;  // multiplies the sampled sum to estimate the full sum
};

PairSample sample_pairs(int n, int max_pairs, std::mt19937_64& rng);

// --- deviated projection -----------------------------------------------------

template <class T>
Point2<T> deviate(const Mat4Of<T>& d, const Vec4& clip, double sx, double sy) {
  T h[4];
  for (int r = 0; r < 4; ++r) {
    h[r] = d[4 * r] * clip[0] + d[4 * r + 1] * clip[1] + d[4 * r + 2] * clip[2] + d[4 * r + 3] * clip[3];
  }
  if (!(std::abs(ad::value(h[3])) >= 1e-12))
    throw Error(ErrorKind::ProjectionSingularity, "deviated w-component vanished");
  return {h[0] / h[3] * sx, h[1] / h[3] * sy};
}

template <class T>
std::vector<Point2<T>> deviated_outputs(const PairGeometry& g, std::span<const Mat4Of<T>> d) {
  std::vector<Point2<T>> out;
  out.reserve(g.p.size());
  for (std::size_t k = 0; k < g.p.size(); ++k) out.push_back(deviate(d[k], g.clip[k], g.scale_x, g.scale_y));
  return out;
}

Mat4Of<double> to_array(const DeviationMatrix& m);
std::vector<Mat4Of<double>> field_matrices(const DeviationModel& model, std::span<const Vec3> points);
std::vector<Mat4Of<double>> field_matrices(const DeviationField& field, const Eigen::Matrix3Xd& points);

// --- loss terms --------------------------------------------------------------

/// Confidence-weighted L1 distance of deviated vertices to their stroke
/// matches, normalized by the mean analytic match distance plus epsilon.
template <class T>
T loss_data(const PairGeometry& g, std::span<const Point2<T>> out, double epsilon) {
  const auto n = g.matched.size();
  if (n == 0) throw Error(ErrorKind::UndefinedLoss, "data loss needs at least one match");
  double avg = 0.0;
  for (std::size_t m = 0; m < n; ++m) avg += (g.p[static_cast<std::size_t>(g.matched[m])] - g.q[m]).lpNorm<1>();
  avg = avg / static_cast<double>(n) + epsilon;
  T sum = T(0.0);
  for (std::size_t m = 0; m < n; ++m) {
    const auto k = static_cast<std::size_t>(g.matched[m]);
    sum += g.alpha[k] * (ad::abs(out[k].x - g.q[m].x()) + ad::abs(out[k].y - g.q[m].y()));
  }
  return sum / (avg * static_cast<double>(n));
}

template <class T>
Point2<T> displacement(const PairGeometry& g, std::span<const Point2<T>> out, int k) {
  const auto& o = out[static_cast<std::size_t>(k)];
  const auto& p = g.p[static_cast<std::size_t>(k)];
  return {o.x - p.x(), o.y - p.y()};
}

/// For each interior vertex i and each ordered choice (j, k) of its two
/// neighbors: the deviated edge i->k against the deviated edge i->j mapped by
/// the analytic similarity that takes p_j - p_i onto p_k - p_i.
template <class T>
T loss_shape(const PairGeometry& g, std::span<const Point2<T>> out, double epsilon,
             int* skipped = nullptr) {
  T sum = T(0.0);
  int skip = 0;
  for (const auto& c : g.curves) {
    if (c.size < 3) continue;
    for (int s = 0; s < c.size; ++s) {
      if (!c.closed && (s == 0 || s == c.size - 1)) continue;
      const int i = c.offset + s;
      const int prev = c.offset + (s + c.size - 1) % c.size;
      const int next = c.offset + (s + 1) % c.size;
      const double a = std::min({g.alpha[static_cast<std::size_t>(prev)], g.alpha[static_cast<std::size_t>(i)],
                                 g.alpha[static_cast<std::size_t>(next)]});
      const double weight = 1.0 - a + epsilon;
      for (int order = 0; order < 2; ++order) {
        const int j = order == 0 ? prev : next;
        const int k = order == 0 ? next : prev;
        const Vec2 u = g.p[static_cast<std::size_t>(j)] - g.p[static_cast<std::size_t>(i)];
        const Vec2 v = g.p[static_cast<std::size_t>(k)] - g.p[static_cast<std::size_t>(i)];
        const double lu = u.norm();
        const double lv = v.norm();
        if (!(lu > 0.0) || !(lv > 0.0)) {
          ++skip;
          continue;
        }
        // ratio * R as a 2x2 matrix [[a, -b], [b, a]].
        const double cs = u.dot(v) / (lu * lv);
        const double sn = (u.x() * v.y() - u.y() * v.x()) / (lu * lv);
        const double ra = lv / lu * cs;
        const double rb = lv / lu * sn;
        // Written in displacements from the analytic positions, since S u = v.
        const auto di = displacement(g, out, i);
        const auto dj = displacement(g, out, j);
        const auto dk = displacement(g, out, k);
        const T ex = dj.x - di.x;
        const T ey = dj.y - di.y;
        const T rx = (dk.x - di.x) - (ra * ex - rb * ey);
        const T ry = (dk.y - di.y) - (rb * ex + ra * ey);
        sum += weight * (rx * rx + ry * ry);
      }
    }
  }
  if (skipped) *skipped = skip;
  return sum;
}

/// Mean squared normal component of deviated edges, relative to the analytic
/// edge length and normal.
template <class T>
T loss_slope(const PairGeometry& g, std::span<const Point2<T>> out) {
  T sum = T(0.0);
  int count = 0;
  for (const auto& c : g.curves) {
    const int edges = c.closed ? c.size : c.size - 1;
    for (int e = 0; e < edges; ++e) {
      const int a = c.offset + e;
      const int b = c.offset + (e + 1) % c.size;
      const Vec2 d = g.p[static_cast<std::size_t>(b)] - g.p[static_cast<std::size_t>(a)];
      const double len = d.norm();
      if (!(len > 0.0)) continue;
      const Vec2 n(-d.y() / len, d.x() / len);
      const auto db = displacement(g, out, b);
      const auto da = displacement(g, out, a);
      const T r = (n.x() * (db.x - da.x) + n.y() * (db.y - da.y)) / len;
      sum += r * r;
      ++count;
    }
  }
  if (count == 0) return T(0.0);
  return sum / static_cast<double>(count);
}

template <class T>
T frobenius_distance(const Mat4Of<T>& a, const Mat4Of<T>& b) {
  T s = T(0.0);
  for (std::size_t k = 0; k < 15; ++k) {
    const T d = a[k] - b[k];
    s += d * d;
  }
  return ad::safe_sqrt(s);
}

/// Kernel-weighted Frobenius differences of the field over sampled pairs of
/// columns of `points` (with `d` holding the field at each column), scaled to
/// estimate the full double sum and divided by the sample-set size.
template <class T>
T loss_smooth(const Eigen::Matrix3Xd& points, std::span<const Mat4Of<T>> d, const PairSample& pairs,
              double sigma, Eigen::Index set_size) {
  T sum = T(0.0);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (const auto& [a, b] : pairs.pairs) {
    const double dist2 = (points.col(a) - points.col(b)).squaredNorm();
    const double w = std::exp(-dist2 * inv);
    if (w == 0.0) continue;
    sum += w * frobenius_distance(d[static_cast<std::size_t>(a)], d[static_cast<std::size_t>(b)]);
  }
  return sum * (pairs.scale / static_cast<double>(set_size));
}

/// Change of relative clip-space depth between anchor pairs when both are
/// transformed by the first anchor's deviation matrix.
template <class T>
T loss_depth(const PairGeometry& g, std::span<const Mat4Of<T>> d, const PairSample& pairs) {
  T sum = T(0.0);
  for (const auto& [i, j] : pairs.pairs) {
    const auto& di = d[static_cast<std::size_t>(i)];
    const Vec4& ci = g.clip[static_cast<std::size_t>(i)];
    const Vec4& cj = g.clip[static_cast<std::size_t>(j)];
    const Vec4 delta = ci - cj;
    const T dz = di[8] * delta[0] + di[9] * delta[1] + di[10] * delta[2] + di[11] * delta[3];
    sum += ad::abs(dz - (ci[2] - cj[2]));
  }
  return sum * pairs.scale;
}

}  // namespace sketchpersp
