#pragma once

#include "sketchpersp/matching.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace sketchpersp::testing {

struct ViterbiInstance {
  AnchoredPolyline curve;
  CandidateSets candidates;
};

/// 2 to 8 curve vertices with 0 to 5 candidates each, scattered around the
/// vertex with random tangents.
inline ViterbiInstance random_viterbi_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nv(2, 8);
  std::uniform_int_distribution<int> nc(0, 5);
  std::uniform_real_distribution<double> u(-0.03, 0.03);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
  ViterbiInstance inst;
  const int n = nv(rng);
  for (int i = 0; i < n; ++i) inst.curve.points.emplace_back(0.02 * i + u(rng), 0.3 * u(rng));
  inst.candidates.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int m = nc(rng);
    for (int s = 0; s < m; ++s) {
      const double a = ang(rng);
      Candidate c;
      c.stroke = s % 2;
      c.index = 10 * i + s;
      c.position = inst.curve.points[static_cast<std::size_t>(i)] + Vec2(u(rng), u(rng));
      c.tangent = Vec2(std::cos(a), std::sin(a));
      c.distance = (c.position - inst.curve.points[static_cast<std::size_t>(i)]).norm();
      inst.candidates[static_cast<std::size_t>(i)].push_back(c);
    }
  }
  return inst;
}

/// Exhaustive maximum of path_log_score over every assignment of the
/// vertices that have candidates.
inline double brute_force_best(const ViterbiInstance& inst, const MatchParams& params) {
  const auto n = inst.curve.size();
  std::vector<int> choice(n, -1);
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == n) {
      best = std::max(best, path_log_score(inst.curve, inst.candidates, choice, params));
      return;
    }
    if (inst.candidates[i].empty()) {
      choice[i] = -1;
      self(self, i + 1);
      return;
    }
    any = true;
    for (std::size_t s = 0; s < inst.candidates[i].size(); ++s) {
      choice[i] = static_cast<int>(s);
      self(self, i + 1);
    }
    choice[i] = -1;
  };
  rec(rec, 0);
  return any ? best : 0.0;
}

}  // namespace sketchpersp::testing
