#include "scenes.hpp"

#include "sketchpersp/error.hpp"
#include "sketchpersp/losses.hpp"
#include "sketchpersp/training.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sketchpersp;
using namespace sketchpersp::testing;

namespace {

// One open curve with flat analytic positions; clip coordinates are the
// homogeneous points themselves so that the identity reproduces p.
PairGeometry flat_geometry(std::vector<Vec2> p, bool closed = false) {
  PairGeometry g;
  g.curves.push_back({0, static_cast<int>(p.size()), closed});
  for (const auto& x : p) {
    g.p.push_back(x);
    g.anchors.emplace_back(x.x(), x.y(), 0.0);
    g.clip.emplace_back(x.x(), x.y(), 0.5, 1.0);
    g.alpha.push_back(0.0);
  }
  return g;
}

std::vector<Point2<double>> as_points(const std::vector<Vec2>& v) {
  std::vector<Point2<double>> out;
  for (const auto& x : v) out.push_back({x.x(), x.y()});
  return out;
}

std::vector<Point2<double>> similarity(const std::vector<Point2<double>>& v, double s, double angle, Vec2 t) {
  std::vector<Point2<double>> out;
  const double c = std::cos(angle), sn = std::sin(angle);
  for (const auto& x : v) out.push_back({s * (c * x.x - sn * x.y) + t.x(), s * (sn * x.x + c * x.y) + t.y()});
  return out;
}

TrainConfig isolated(int term) {
  TrainConfig c;
  c.architecture = tiny_architecture();
  c.weights = {0, 0, 0, 0, 0};
  double* w[] = {&c.weights.data, &c.weights.shape, &c.weights.slope, &c.weights.smooth, &c.weights.depth};
  if (term < 5)
    *w[term] = 1.0;
  else
    c.weights = LossWeights{};
  c.smooth_pairs = 512;
  c.depth_pairs = 64;
  c.grid_resolution = 3;
  c.smooth_sigma = 0.2;  // wide enough that the sampled pairs are not all far apart
  return c;
}

}  // namespace

TEST(Losses, ShapeHandValue) {
  // Straight analytic line, deviated last vertex turned by 90 degrees about
  // the middle one. Each of the two neighbor orderings leaves a residual
  // (-1, 1), i.e. 2 per ordering, with weight 1 + eps for unmatched samples.
  auto g = flat_geometry({Vec2(-1, 0), Vec2(0, 0), Vec2(1, 0)});
  const auto out = as_points({Vec2(-1, 0), Vec2(0, 0), Vec2(0, 1)});
  EXPECT_NEAR(loss_shape<double>(g, out, 1e-6), 4.0 * (1.0 + 1e-6), 1e-12);
  g.alpha = {1.0, 1.0, 1.0};
  EXPECT_NEAR(loss_shape<double>(g, out, 1e-6), 4.0 * 1e-6, 1e-15);
}

TEST(Losses, SlopeHandValue) {
  // Two unit edges; the second deviated edge gains a normal component 0.5.
  auto g = flat_geometry({Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)});
  const auto out = as_points({Vec2(0, 0), Vec2(1, 0), Vec2(2, 0.5)});
  EXPECT_NEAR(loss_slope<double>(g, out), 0.25 / 2.0, 1e-15);
}

TEST(Losses, DataHandValue) {
  auto g = flat_geometry({Vec2(0, 0), Vec2(1, 0)});
  g.alpha = {0.5, 0.0};
  g.matched = {0};
  g.q = {Vec2(0.1, 0.2)};
  // Mean analytic distance 0.3; deviated output at q leaves nothing.
  const auto at_q = as_points({Vec2(0.1, 0.2), Vec2(1, 0)});
  EXPECT_NEAR(loss_data<double>(g, at_q, 0.0), 0.0, 1e-15);
  const auto analytic = as_points({Vec2(0, 0), Vec2(1, 0)});
  EXPECT_NEAR(loss_data<double>(g, analytic, 0.0), 0.5, 1e-15);
  g.matched.clear();
  g.q.clear();
  EXPECT_THROW(loss_data<double>(g, analytic, 0.0), Error);
}

TEST(Losses, ShapeAndSlopeInvariances) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec2> p;
  for (int i = 0; i < 12; ++i) p.emplace_back(0.1 * i, 0.05 * std::sin(i));
  auto g = flat_geometry(p);
  const auto identity = as_points(p);
  EXPECT_NEAR(loss_shape<double>(g, identity, 1e-6), 0.0, 1e-20);
  EXPECT_NEAR(loss_slope<double>(g, identity), 0.0, 1e-20);
  // A similarity keeps the zero of the shape term; translation and uniform
  // scale keep the zero of the slope term.
  EXPECT_NEAR(loss_shape<double>(g, similarity(identity, 1.7, 0.4, Vec2(0.3, -2)), 1e-6), 0.0, 1e-9);
  EXPECT_NEAR(loss_slope<double>(g, similarity(identity, 1.7, 0.0, Vec2(0.3, -2))), 0.0, 1e-9);

  // Away from zero: rigid motions leave the shape term unchanged and
  // translations leave the slope term unchanged.
  std::vector<Point2<double>> noisy;
  for (const auto& x : identity) noisy.push_back({x.x + 0.01 * u(rng), x.y + 0.01 * u(rng)});
  const double shape = loss_shape<double>(g, noisy, 1e-6);
  EXPECT_NEAR(loss_shape<double>(g, similarity(noisy, 1.0, 0.8, Vec2(1, 2)), 1e-6), shape, 1e-12);
  EXPECT_NEAR(loss_shape<double>(g, similarity(noisy, 2.0, 0.8, Vec2(1, 2)), 1e-6), 4.0 * shape, 1e-12);
  const double slope = loss_slope<double>(g, noisy);
  EXPECT_NEAR(loss_slope<double>(g, similarity(noisy, 1.0, 0.0, Vec2(1, 2))), slope, 1e-12);
}

TEST(Losses, SmoothAndDepthVanishForConstantField) {
  std::mt19937_64 rng(1);
  const auto pair = random_small_pair(rng);
  const auto g = make_pair_geometry(pair.contours, pair.strokes, pair.matches, pair.rig);
  Mat4 m = Mat4::Identity();
  m(0, 1) = 0.1;
  std::vector<Mat4Of<double>> d(g.anchors.size(), to_array(DeviationMatrix(m)));
  const auto pairs = sample_pairs(static_cast<int>(g.anchors.size()), 1 << 20, rng);
  EXPECT_DOUBLE_EQ(loss_smooth<double>(g.anchor_matrix(), d, pairs, 0.1, g.vertex_count()), 0.0);
  EXPECT_NEAR(loss_depth<double>(g, d, pairs), 0.0, 1e-12);
}

TEST(Losses, IdentityWithPerfectMatchesIsAFixedPoint) {
  const auto mesh = std::make_shared<const TriangleMesh>(make_cube());
  const auto rig = default_rig();
  const auto contours = render_contours(*mesh, rig);
  std::vector<TrainingPair> pairs = {correspondence_pair(contours.curves, contours.curves, rig)};
  TrainConfig config;
  config.architecture = tiny_architecture();
  const LossProblem problem(pairs, config);
  std::mt19937_64 rng(0);
  const auto samples = problem.draw(rng);
  const DeviationField field(config.architecture, 3);
  const auto t = problem.evaluate(field, samples);
  for (double v : {t.data, t.shape, t.slope, t.smooth, t.depth, t.total}) EXPECT_LE(std::abs(v), 1e-10);
}

TEST(Losses, SamplePairsEnumeratesOrScales) {
  std::mt19937_64 rng(9);
  const auto all = sample_pairs(5, 100, rng);
  EXPECT_EQ(all.pairs.size(), 20u);
  EXPECT_DOUBLE_EQ(all.scale, 1.0);
  const auto some = sample_pairs(100, 50, rng);
  EXPECT_EQ(some.pairs.size(), 50u);
  EXPECT_DOUBLE_EQ(some.scale, 9900.0 / 50.0);
  for (const auto& [a, b] : some.pairs) EXPECT_NE(a, b);
}

TEST(Losses, SmoothnessEstimatorIsUnbiased) {
  // Mean of the sampled estimate over many draws approaches the exact sum.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  const int n = 60;
  Eigen::Matrix3Xd pts(3, n);
  std::vector<Mat4Of<double>> d(n);
  for (int i = 0; i < n; ++i) {
    pts.col(i) = Vec3(u(rng), u(rng), u(rng));
    Mat4 m = Mat4::Identity();
    m(0, 0) = 1.0 + 0.3 * pts(0, i) * pts(1, i);
    d[static_cast<std::size_t>(i)] = to_array(DeviationMatrix(m));
  }
  const double exact = loss_smooth<double>(pts, d, sample_pairs(n, n * n, rng), 0.5, n);
  double mean = 0.0;
  const int draws = 4000;
  for (int k = 0; k < draws; ++k) mean += loss_smooth<double>(pts, d, sample_pairs(n, 200, rng), 0.5, n);
  mean /= draws;
  EXPECT_NEAR(mean / exact, 1.0, 0.01);
}

TEST(Losses, NeighborPairsMatchBruteForce) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::Matrix3Xd pts(3, 300);
  for (int i = 0; i < 300; ++i) pts.col(i) = Vec3(u(rng), u(rng), u(rng));
  const auto pairs = neighbor_pairs(pts, 0.3);
  std::vector<IndexPair> brute;
  for (int i = 0; i < 300; ++i)
    for (int j = 0; j < 300; ++j)
      if (i != j && (pts.col(i) - pts.col(j)).norm() <= 0.3) brute.emplace_back(i, j);
  EXPECT_EQ(pairs, brute);
}

class LossGradient : public ::testing::TestWithParam<int> {};

TEST_P(LossGradient, MatchesCentralDifferences) {
  const int term = GetParam();
  const auto config = isolated(term);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(100 + seed);
    std::vector<TrainingPair> pairs = {random_small_pair(rng), random_small_pair(rng)};
    const LossProblem problem(pairs, config);
    auto samples = problem.draw(rng);
    DeviationField field(config.architecture, seed);
    perturb(field, 0.05, seed);
    int skipped = 0;
    EXPECT_LE(gradient_error(problem, field, samples, 40, 1e-4, seed, &skipped), 1e-4) << "term " << term << " seed " << seed;
    EXPECT_LE(skipped, 4);
  }
}

INSTANTIATE_TEST_SUITE_P(Terms, LossGradient, ::testing::Range(0, 6));
