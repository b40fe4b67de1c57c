#include "sketchpersp/matching.hpp"

#include "sketchpersp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <tuple>

namespace sketchpersp {

void MatchParams::validate() const {
  if (!(sigma1 > 0) || !(sigma2 > 0) || !(candidate_radius > 0) || !(conflict_radius_factor > 0) ||
      !(edge_sigma() > 0))
    throw Error(ErrorKind::Domain, "matching parameters must be positive");
}

const MatchEntry* MatchSet::find(int curve, int i) const {
  for (const auto& e : entries)
    if (e.curve == curve && e.i == i) return &e;
  return nullptr;
}

bool CurveDecoding::matched() const {
  return std::any_of(choice.begin(), choice.end(), [](int c) { return c >= 0; });
}

// --- StrokeSet ---------------------------------------------------------------

namespace {

long long grid_key(long long x, long long y) { return x * 2000003LL + y; }

bool tie_less(const Candidate& a, const Candidate& b) {
  return std::tie(a.stroke, a.index) < std::tie(b.stroke, b.index);
}

}  // namespace

StrokeSet::StrokeSet(std::vector<AnchoredPolyline> strokes) : strokes_(std::move(strokes)) {
  Eigen::AlignedBox2d box;
  std::size_t count = 0;
  for (const auto& s : strokes_) {
    if (s.size() < 2) throw Error(ErrorKind::DegenerateInput, "stroke with fewer than 2 samples");
    std::vector<Vec2> t(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) t[i] = tangent_at(s, i);
    tangents_.push_back(std::move(t));
    for (const auto& p : s.points) box.extend(p);
    count += s.size();
  }
  if (count > 0) {
    const double span = box.sizes().maxCoeff();
    cell_ = std::max(span / std::sqrt(static_cast<double>(count)), 1e-6);
  }
  for (std::size_t s = 0; s < strokes_.size(); ++s)
    for (std::size_t i = 0; i < strokes_[s].size(); ++i) {
      const auto [cx, cy] = cell_of(strokes_[s].points[i]);
      grid_[grid_key(cx, cy)].emplace_back(static_cast<int>(s), static_cast<int>(i));
    }
}

std::pair<long long, long long> StrokeSet::cell_of(const Vec2& p) const {
  return {static_cast<long long>(std::floor(p.x() / cell_)),
          static_cast<long long>(std::floor(p.y() / cell_))};
}

std::vector<Candidate> StrokeSet::candidate_set(const Vec2& p, double radius) const {
  if (!(radius > 0)) throw Error(ErrorKind::Domain, "candidate radius must be positive");
  std::vector<Candidate> out;
  const auto [lx, ly] = cell_of(p - Vec2(radius, radius));
  const auto [hx, hy] = cell_of(p + Vec2(radius, radius));
  const auto cells = (hx - lx + 1) * (hy - ly + 1);
  auto consider = [&](int s, int i) {
    const double d = (strokes_[s].points[i] - p).norm();
    if (d <= radius) out.push_back(Candidate{s, i, strokes_[s].points[i], tangents_[s][i], d});
  };
  if (cells > static_cast<long long>(grid_.size()) * 4) {
    for (std::size_t s = 0; s < strokes_.size(); ++s)
      for (std::size_t i = 0; i < strokes_[s].size(); ++i) consider(static_cast<int>(s), static_cast<int>(i));
  } else {
    for (long long x = lx; x <= hx; ++x)
      for (long long y = ly; y <= hy; ++y) {
        auto it = grid_.find(grid_key(x, y));
        if (it == grid_.end()) continue;
        for (const auto& [s, i] : it->second) consider(s, i);
      }
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return tie_less(a, b);
  });
  return out;
}

std::vector<Candidate> candidate_set(const Vec2& p, const StrokeSet& strokes, double radius) {
  return strokes.candidate_set(p, radius);
}

// --- scores ------------------------------------------------------------------

namespace {

double log_compatibility(const Vec2& p, const Vec2& q, const Vec2& tp, const Vec2& tq, double sigma1) {
  const double da = (p - q).norm();
  const double dt = 1.0 - std::abs(tp.dot(tq));
  const double d = da + dt;
  return -d * d / (2.0 * sigma1 * sigma1);
}

double log_consistency(const Vec2& p_i, const Vec2& p_next, const Vec2& q_i, const Vec2& q_next,
                       double sigma) {
  const double dp = ((p_next - p_i) - (q_next - q_i)).norm();
  return -dp * dp / (2.0 * sigma * sigma);
}

}  // namespace

double compatibility(const Vec2& p, const Vec2& q, const Vec2& tangent_p, const Vec2& tangent_q,
                     double sigma1) {
  return std::exp(log_compatibility(p, q, tangent_p, tangent_q, sigma1));
}

double consistency(const Vec2& p_i, const Vec2& p_next, const Vec2& q_i, const Vec2& q_next,
                   double sigma) {
  return std::exp(log_consistency(p_i, p_next, q_i, q_next, sigma));
}

double confidence(double angle_p, double angle_q, double sigma2) {
  const double d = angle_p - angle_q;
  return std::exp(-d * d / (2.0 * sigma2 * sigma2));
}

// --- decoding ----------------------------------------------------------------

namespace {

std::vector<Vec2> curve_tangents(const AnchoredPolyline& curve) {
  std::vector<Vec2> t(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) t[i] = tangent_at(curve, i);
  return t;
}

}  // namespace

double path_log_score(const AnchoredPolyline& curve, const CandidateSets& candidates,
                      std::span<const int> choice, const MatchParams& params) {
  const auto tangents = curve_tangents(curve);
  double score = 0.0;
  const auto n = curve.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (choice[i] < 0) continue;
    const auto& c = candidates[i][static_cast<std::size_t>(choice[i])];
    score += log_compatibility(curve.points[i], c.position, tangents[i], c.tangent, params.sigma1);
    if (i + 1 < n && choice[i + 1] >= 0) {
      const auto& d = candidates[i + 1][static_cast<std::size_t>(choice[i + 1])];
      score += log_consistency(curve.points[i], curve.points[i + 1], c.position, d.position,
                               params.edge_sigma());
    }
  }
  return score;
}

CurveDecoding viterbi_decode(const AnchoredPolyline& curve, const CandidateSets& candidates,
                             const MatchParams& params) {
  const auto n = curve.size();
  if (candidates.size() != n) throw Error(ErrorKind::Domain, "one candidate set per vertex required");
  const auto tangents = curve_tangents(curve);
  CurveDecoding out;
  out.choice.assign(n, -1);

  std::vector<std::vector<double>> delta(n);
  std::vector<std::vector<int>> back(n);
  // Segments of consecutive vertices with non-empty candidate sets are
  // independent chains; each is decoded separately.
  std::size_t i = 0;
  while (i < n) {
    if (candidates[i].empty()) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    std::size_t end = i;
    while (end < n && !candidates[end].empty()) ++end;

    for (std::size_t k = begin; k < end; ++k) {
      const auto& cands = candidates[k];
      delta[k].assign(cands.size(), 0.0);
      back[k].assign(cands.size(), -1);
      for (std::size_t s = 0; s < cands.size(); ++s) {
        const double emit =
            log_compatibility(curve.points[k], cands[s].position, tangents[k], cands[s].tangent, params.sigma1);
        if (k == begin) {
          delta[k][s] = emit;
          continue;
        }
        const auto& prev = candidates[k - 1];
        double best = -std::numeric_limits<double>::infinity();
        int arg = -1;
        for (std::size_t r = 0; r < prev.size(); ++r) {
          const double v = delta[k - 1][r] + log_consistency(curve.points[k - 1], curve.points[k],
                                                             prev[r].position, cands[s].position,
                                                             params.edge_sigma());
          if (v > best || (v == best && arg >= 0 && tie_less(prev[r], prev[static_cast<std::size_t>(arg)]))) {
            best = v;
            arg = static_cast<int>(r);
          }
        }
        delta[k][s] = best + emit;
        back[k][s] = arg;
      }
    }
    const auto& last = candidates[end - 1];
    int arg = 0;
    for (std::size_t s = 1; s < last.size(); ++s) {
      const double v = delta[end - 1][s];
      const double b = delta[end - 1][static_cast<std::size_t>(arg)];
      if (v > b || (v == b && tie_less(last[s], last[static_cast<std::size_t>(arg)]))) arg = static_cast<int>(s);
    }
    out.log_score += delta[end - 1][static_cast<std::size_t>(arg)];
    for (std::size_t k = end; k-- > begin;) {
      out.choice[k] = arg;
      arg = back[k][static_cast<std::size_t>(arg)];
    }
    i = end;
  }
  return out;
}

CandidateSets build_candidates(const AnchoredPolyline& curve, const StrokeSet& strokes, double radius) {
  CandidateSets sets(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) sets[i] = strokes.candidate_set(curve.points[i], radius);
  return sets;
}

CurveDecoding viterbi_match(const AnchoredPolyline& curve, const StrokeSet& strokes,
                            const MatchParams& params) {
  return viterbi_decode(curve, build_candidates(curve, strokes, params.candidate_radius), params);
}

// --- matching over all curves ------------------------------------------------

namespace {

void append_decoding(MatchSet& out, int c, const AnchoredPolyline& curve, const CandidateSets& cands,
                     const CurveDecoding& dec, const StrokeSet& strokes, const MatchParams& params) {
  const auto tangents = curve_tangents(curve);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (dec.choice[i] < 0) {
      out.unmatched.emplace_back(c, static_cast<int>(i));
      continue;
    }
    const auto& cand = cands[i][static_cast<std::size_t>(dec.choice[i])];
    MatchEntry e;
    e.curve = c;
    e.i = static_cast<int>(i);
    e.stroke = cand.stroke;
    e.j = cand.index;
    e.sv = compatibility(curve.points[i], cand.position, tangents[i],
                         strokes.tangent(cand.stroke, cand.index), params.sigma1);
    out.entries.push_back(e);
  }
}

void sort_matches(MatchSet& m) {
  std::sort(m.entries.begin(), m.entries.end(),
            [](const MatchEntry& a, const MatchEntry& b) { return std::tie(a.curve, a.i) < std::tie(b.curve, b.i); });
  std::sort(m.unmatched.begin(), m.unmatched.end());
}

using StrokeVertex = std::pair<int, int>;

}  // namespace

MatchSet match_first_round(std::span<const AnchoredPolyline> curves, const StrokeSet& strokes,
                           const MatchParams& params) {
  params.validate();
  MatchSet out;
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto cands = build_candidates(curves[c], strokes, params.candidate_radius);
    const auto dec = viterbi_decode(curves[c], cands, params);
    append_decoding(out, static_cast<int>(c), curves[c], cands, dec, strokes, params);
  }
  sort_matches(out);
  return out;
}

MatchSet resolve_conflicts(const MatchSet& first_round, std::span<const AnchoredPolyline> curves,
                           const StrokeSet& strokes, const MatchParams& params) {
  params.validate();
  std::map<StrokeVertex, std::set<int>> claims;
  for (const auto& e : first_round.entries) claims[{e.stroke, e.j}].insert(e.curve);
  std::set<StrokeVertex> contested;
  for (const auto& [q, owners] : claims)
    if (owners.size() >= 2) contested.insert(q);
  if (contested.empty()) return first_round;

  // Conflicted contour vertices, grouped per curve.
  std::map<int, std::set<int>> conflicted;
  for (const auto& e : first_round.entries)
    if (contested.count({e.stroke, e.j})) conflicted[e.curve].insert(e.i);

  // Second round: widened search without the contested stroke vertices.
  std::map<std::pair<int, int>, MatchEntry> second;
  const double wide = params.candidate_radius * params.conflict_radius_factor;
  for (const auto& [c, verts] : conflicted) {
    const auto& curve = curves[static_cast<std::size_t>(c)];
    CandidateSets cands(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
      if (!verts.count(static_cast<int>(i))) {
        cands[i] = strokes.candidate_set(curve.points[i], params.candidate_radius);
        continue;
      }
      for (auto& cand : strokes.candidate_set(curve.points[i], wide))
        if (!contested.count({cand.stroke, cand.index})) cands[i].push_back(cand);
    }
    const auto dec = viterbi_decode(curve, cands, params);
    MatchSet tmp;
    append_decoding(tmp, c, curve, cands, dec, strokes, params);
    for (const auto& e : tmp.entries)
      if (verts.count(e.i)) second[{c, e.i}] = e;
  }

  // Per conflicted vertex, keep the round with the better compatibility; a
  // contested stroke vertex stays with the single best claimant that prefers it.
  std::map<std::pair<int, int>, const MatchEntry*> first_of;
  for (const auto& e : first_round.entries) first_of[{e.curve, e.i}] = &e;
  std::map<StrokeVertex, const MatchEntry*> keeper;
  for (const auto& e : first_round.entries) {
    if (!contested.count({e.stroke, e.j})) continue;
    auto r2 = second.find({e.curve, e.i});
    const bool prefers_first = r2 == second.end() || e.sv >= r2->second.sv;
    if (!prefers_first) continue;
    auto& k = keeper[{e.stroke, e.j}];
    if (!k || e.sv > k->sv || (e.sv == k->sv && std::tie(e.curve, e.i) < std::tie(k->curve, k->i))) k = &e;
  }

  MatchSet out;
  for (const auto& e : first_round.entries) {
    if (!contested.count({e.stroke, e.j})) {
      out.entries.push_back(e);
      continue;
    }
    auto it = keeper.find({e.stroke, e.j});
    if (it != keeper.end() && it->second->curve == e.curve) {
      auto r2 = second.find({e.curve, e.i});
      if (r2 == second.end() || e.sv >= r2->second.sv) {
        out.entries.push_back(e);
        continue;
      }
    }
    auto r2 = second.find({e.curve, e.i});
    if (r2 != second.end())
      out.entries.push_back(r2->second);
    else
      out.unmatched.emplace_back(e.curve, e.i);
  }
  out.unmatched.insert(out.unmatched.end(), first_round.unmatched.begin(), first_round.unmatched.end());

  // Second-round picks may collide with each other or with other curves'
  // matches; the claimant with the highest compatibility keeps the vertex.
  std::map<StrokeVertex, std::pair<double, int>> best;
  for (const auto& e : out.entries) {
    auto [it, inserted] = best.try_emplace({e.stroke, e.j}, e.sv, e.curve);
    if (!inserted && (e.sv > it->second.first || (e.sv == it->second.first && e.curve < it->second.second)))
      it->second = {e.sv, e.curve};
  }
  std::vector<MatchEntry> kept;
  for (const auto& e : out.entries) {
    if (best[{e.stroke, e.j}].second == e.curve)
      kept.push_back(e);
    else
      out.unmatched.emplace_back(e.curve, e.i);
  }
  out.entries = std::move(kept);
  sort_matches(out);
  return out;
}

void assign_confidence(MatchSet& matches, std::span<const AnchoredPolyline> curves,
                       const StrokeSet& strokes, const MatchParams& params) {
  std::map<int, std::vector<std::size_t>> per_curve;
  std::vector<bool> defined(matches.entries.size(), false);
  for (std::size_t k = 0; k < matches.entries.size(); ++k) {
    auto& e = matches.entries[k];
    per_curve[e.curve].push_back(k);
    const auto& curve = curves[static_cast<std::size_t>(e.curve)];
    const auto& stroke = strokes.strokes()[static_cast<std::size_t>(e.stroke)];
    if (has_angle(curve, static_cast<std::size_t>(e.i)) && has_angle(stroke, static_cast<std::size_t>(e.j))) {
      e.alpha = confidence(angle_at(curve, static_cast<std::size_t>(e.i)),
                           angle_at(stroke, static_cast<std::size_t>(e.j)), params.sigma2);
      defined[k] = true;
    }
  }
  for (auto& [c, idx] : per_curve) {
    for (std::size_t k : idx) {
      if (defined[k]) continue;
      auto& e = matches.entries[k];
      int best_gap = std::numeric_limits<int>::max();
      double alpha = 1.0;
      for (std::size_t m : idx) {
        if (!defined[m]) continue;
        const int gap = std::abs(matches.entries[m].i - e.i);
        if (gap < best_gap) {
          best_gap = gap;
          alpha = matches.entries[m].alpha;
        }
      }
      e.alpha = alpha;
    }
  }
}

MatchSet match_curves(std::span<const AnchoredPolyline> curves, const StrokeSet& strokes,
                      const MatchParams& params) {
  auto first = match_first_round(curves, strokes, params);
  auto resolved = resolve_conflicts(first, curves, strokes, params);
  assign_confidence(resolved, curves, strokes, params);
  return resolved;
}

}  // namespace sketchpersp
