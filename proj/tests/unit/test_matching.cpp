#include "viterbi_oracle.hpp"

#include "sketchpersp/error.hpp"
#include "sketchpersp/matching.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

using namespace sketchpersp;
using namespace sketchpersp::testing;

namespace {

AnchoredPolyline polyline(std::vector<Vec2> pts) {
  AnchoredPolyline p;
  p.points = std::move(pts);
  return p;
}

AnchoredPolyline horizontal(double y, double x0, double x1, double step) {
  AnchoredPolyline p;
  for (double x = x0; x <= x1 + 1e-12; x += step) p.points.emplace_back(x, y);
  return p;
}

}  // namespace

TEST(Scores, CompatibilityHandValues) {
  const Vec2 t(1, 0);
  EXPECT_DOUBLE_EQ(compatibility(Vec2(0, 0), Vec2(0, 0), t, t, 0.02), 1.0);
  // Distance 0.02 with aligned tangents: exp(-1/2).
  EXPECT_NEAR(compatibility(Vec2(0, 0), Vec2(0.02, 0), t, t, 0.02), std::exp(-0.5), 1e-15);
  // Perpendicular tangents add 1 to the distance.
  EXPECT_NEAR(compatibility(Vec2(0, 0), Vec2(0, 0), t, Vec2(0, 1), 1.0), std::exp(-0.5), 1e-15);
  // Opposite tangents are the same line direction.
  EXPECT_DOUBLE_EQ(compatibility(Vec2(0, 0), Vec2(0, 0), t, -t, 0.02), 1.0);
}

TEST(Scores, ConsistencyAndConfidence) {
  EXPECT_DOUBLE_EQ(consistency(Vec2(0, 0), Vec2(1, 0), Vec2(5, 5), Vec2(6, 5), 0.1), 1.0);
  EXPECT_NEAR(consistency(Vec2(0, 0), Vec2(1, 0), Vec2(0, 0), Vec2(1, 0.1), 0.1), std::exp(-0.5), 1e-15);
  EXPECT_DOUBLE_EQ(confidence(1.0, 1.0, 0.3), 1.0);
  EXPECT_NEAR(confidence(1.0, 1.3, 0.3), std::exp(-0.5), 1e-15);
}

TEST(Candidates, SortedByDistanceWithinRadius) {
  StrokeSet strokes({horizontal(0.0, -1, 1, 0.01), horizontal(0.05, -1, 1, 0.01)});
  const Vec2 p(0.123, 0.01);
  const auto c = strokes.candidate_set(p, 0.06);
  ASSERT_FALSE(c.empty());
  for (std::size_t k = 0; k < c.size(); ++k) {
    EXPECT_LE(c[k].distance, 0.06);
    EXPECT_NEAR(c[k].distance, (c[k].position - p).norm(), 1e-15);
    if (k > 0) {
      EXPECT_LE(c[k - 1].distance, c[k].distance);
    }
  }
  std::size_t brute = 0;
  for (const auto& s : strokes.strokes())
    for (const auto& q : s.points)
      if ((q - p).norm() <= 0.06) ++brute;
  EXPECT_EQ(c.size(), brute);
  EXPECT_TRUE(strokes.candidate_set(Vec2(5, 5), 0.06).empty());
  EXPECT_THROW(strokes.candidate_set(p, 0.0), Error);
}

TEST(Viterbi, EqualsBruteForceOnRandomInstances) {
  std::mt19937_64 rng(42);
  MatchParams params;
  for (int k = 0; k < 200; ++k) {
    const auto inst = random_viterbi_instance(rng);
    const auto dec = viterbi_decode(inst.curve, inst.candidates, params);
    EXPECT_NEAR(dec.log_score, brute_force_best(inst, params), 1e-9);
    EXPECT_NEAR(dec.log_score, path_log_score(inst.curve, inst.candidates, dec.choice, params), 1e-9);
    for (std::size_t i = 0; i < inst.curve.size(); ++i)
      EXPECT_EQ(dec.choice[i] < 0, inst.candidates[i].empty());
  }
}

TEST(Viterbi, SingleCandidateIsForced) {
  const auto curve = polyline({Vec2(0, 0), Vec2(0.01, 0), Vec2(0.02, 0)});
  CandidateSets sets(3);
  for (int i = 0; i < 3; ++i) sets[static_cast<std::size_t>(i)].push_back({0, i, Vec2(0.01 * i, 0.005), Vec2(1, 0), 0.005});
  const auto dec = viterbi_decode(curve, sets, MatchParams{});
  EXPECT_EQ(dec.choice, (std::vector<int>{0, 0, 0}));
  EXPECT_NEAR(dec.log_score, path_log_score(curve, sets, dec.choice, MatchParams{}), 1e-15);
}

TEST(Viterbi, MonotoneInCandidateRadius) {
  StrokeSet strokes({horizontal(0.03, -0.5, 0.5, 0.01), horizontal(-0.07, -0.5, 0.5, 0.013)});
  const auto curve = horizontal(0.0, -0.3, 0.3, 0.014);
  double previous = -std::numeric_limits<double>::infinity();
  for (double r : {0.035, 0.05, 0.08, 0.12}) {
    MatchParams p;
    p.candidate_radius = r;
    const auto dec = viterbi_match(curve, strokes, p);
    ASSERT_TRUE(dec.matched());
    // Compare full-curve scores only once every vertex has candidates.
    if (std::all_of(dec.choice.begin(), dec.choice.end(), [](int c) { return c >= 0; })) {
      EXPECT_GE(dec.log_score, previous - 1e-12);
      previous = dec.log_score;
    }
  }
}

TEST(Viterbi, NoCandidatesMeansUnmatchedCurve) {
  StrokeSet strokes({horizontal(0.5, -0.5, 0.5, 0.01)});
  const auto dec = viterbi_match(horizontal(0.0, -0.3, 0.3, 0.014), strokes, MatchParams{});
  EXPECT_FALSE(dec.matched());
}

TEST(Matching, IdenticalStrokeMatchesItself) {
  const auto curve = horizontal(0.1, -0.3, 0.3, 0.014);
  StrokeSet strokes({curve});
  std::vector<AnchoredPolyline> curves = {curve};
  const auto m = match_curves(curves, strokes, MatchParams{});
  ASSERT_EQ(m.entries.size(), curve.size());
  EXPECT_TRUE(m.unmatched.empty());
  for (const auto& e : m.entries) {
    EXPECT_EQ(e.j, e.i);
    EXPECT_DOUBLE_EQ(e.sv, 1.0);
    EXPECT_DOUBLE_EQ(e.alpha, 1.0);
  }
}

TEST(Matching, ConflictResolutionLeavesNoSharedStrokeVertex) {
  // Two parallel curves with one stroke between them and a second stroke
  // farther away: after resolution one curve moves to the second stroke.
  const auto upper = horizontal(0.02, -0.2, 0.2, 0.014);
  const auto lower = horizontal(-0.02, -0.2, 0.2, 0.014);
  StrokeSet strokes({horizontal(0.0, -0.3, 0.3, 0.014), horizontal(-0.09, -0.3, 0.3, 0.014)});
  std::vector<AnchoredPolyline> curves = {upper, lower};
  MatchParams params;
  const auto first = match_first_round(curves, strokes, params);
  std::set<std::pair<int, int>> first_strokes[2];
  for (const auto& e : first.entries) first_strokes[e.curve].insert({e.stroke, e.j});
  int shared = 0;
  for (const auto& q : first_strokes[0]) shared += static_cast<int>(first_strokes[1].count(q));
  ASSERT_GT(shared, 0);

  const auto resolved = match_curves(curves, strokes, params);
  std::map<std::pair<int, int>, int> owner;
  for (const auto& e : resolved.entries) {
    auto [it, inserted] = owner.try_emplace({e.stroke, e.j}, e.curve);
    if (!inserted) {
      EXPECT_EQ(it->second, e.curve);
    }
  }
  std::set<int> strokes_used[2];
  for (const auto& e : resolved.entries) strokes_used[e.curve].insert(e.stroke);
  EXPECT_TRUE(strokes_used[0].count(0) || strokes_used[1].count(0));
  EXPECT_TRUE(strokes_used[1].count(1));
}

TEST(Matching, ConfidenceFallsWithAngleDifference) {
  // Straight curve against a stroke bent by 10 degrees at the middle vertex.
  const double slope = std::tan(10.0 * std::numbers::pi / 180.0);
  AnchoredPolyline curve, bent;
  for (int k = -5; k <= 5; ++k) {
    const double x = 0.014 * k;
    curve.points.emplace_back(x, 0.0);
    bent.points.emplace_back(x, k > 0 ? x * slope : 0.0);
  }
  std::vector<AnchoredPolyline> curves = {curve};
  const MatchParams params;
  auto m = match_curves(curves, StrokeSet({bent}), params);
  const auto* mid = m.find(0, 5);
  ASSERT_NE(mid, nullptr);
  ASSERT_EQ(mid->j, 5);
  const double turn = 10.0 * std::numbers::pi / 180.0;
  EXPECT_NEAR(mid->alpha, std::exp(-turn * turn / (2.0 * params.sigma2 * params.sigma2)), 1e-9);
  EXPECT_LT(mid->alpha, 1.0);
  for (const auto& e : m.entries)
    if (e.j == e.i && e.i >= 1 && e.i <= 3) {
      EXPECT_DOUBLE_EQ(e.alpha, 1.0);
    }
}
