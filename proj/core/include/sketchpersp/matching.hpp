#pragma once

#include "sketchpersp/geom.hpp"

#include <numbers>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sketchpersp {

struct MatchParams {
  double sigma1 = 0.02;                 // image-space kernel width of S^v and S^e
  double sigma2 = std::numbers::pi / 8;  // angle kernel width of the confidence
  double candidate_radius = 0.06;
  double conflict_radius_factor = 2.0;
  /// Width of the edge-consistency kernel; defaults to sigma1.
  std::optional<double> sigma_edge;

  double edge_sigma() const { return sigma_edge.value_or(sigma1); }
  void validate() const;
};

struct MatchEntry {
  int curve = 0;
  int i = 0;
  int stroke = 0;
  int j = 0;
  double sv = 0.0;
  double alpha = 1.0;
};

struct MatchSet {
  std::vector<MatchEntry> entries;
  std::vector<std::pair<int, int>> unmatched;  // (curve, i)

  const MatchEntry* find(int curve, int i) const;
};

struct Candidate {
  int stroke = 0;
  int index = 0;
  Vec2 position;
  Vec2 tangent;
  double distance = 0.0;
};
using CandidateSets = std::vector<std::vector<Candidate>>;

/// Resampled sketch strokes plus the per-vertex data matching needs.
class StrokeSet {
 public:
  explicit StrokeSet(std::vector<AnchoredPolyline> strokes);

  const std::vector<AnchoredPolyline>& strokes() const { return strokes_; }
  std::size_t size() const { return strokes_.size(); }
  bool empty() const { return strokes_.empty(); }
  const Vec2& position(int stroke, int index) const { return strokes_[stroke].points[index]; }
  const Vec2& tangent(int stroke, int index) const { return tangents_[stroke][index]; }

  /// Stroke vertices within `radius` of p, nearest first; ties by stroke then index.
  std::vector<Candidate> candidate_set(const Vec2& p, double radius) const;

 private:
  std::vector<AnchoredPolyline> strokes_;
  std::vector<std::vector<Vec2>> tangents_;
  double cell_ = 0.05;
  std::unordered_map<long long, std::vector<std::pair<int, int>>> grid_;

  std::pair<long long, long long> cell_of(const Vec2& p) const;
};

/// Free-function form of StrokeSet::candidate_set.
std::vector<Candidate> candidate_set(const Vec2& p, const StrokeSet& strokes, double radius);

/// S^v: Gaussian of the summed distance and tangent-misalignment terms.
double compatibility(const Vec2& p, const Vec2& q, const Vec2& tangent_p, const Vec2& tangent_q,
                     double sigma1);
/// S^e: Gaussian of the mismatch between the contour edge and the stroke-vertex pair.
double consistency(const Vec2& p_i, const Vec2& p_next, const Vec2& q_i, const Vec2& q_next,
                   double sigma);
/// Per-match confidence from the difference of polyline angles.
double confidence(double angle_p, double angle_q, double sigma2);

struct CurveDecoding {
  std::vector<int> choice;  // index into the vertex's candidate list, -1 if excluded
  double log_score = 0.0;
  bool matched() const;
};

/// Log of the HMM score of an assignment. Vertices with choice -1 and the
/// edges touching them are left out.
double path_log_score(const AnchoredPolyline& curve, const CandidateSets& candidates,
                      std::span<const int> choice, const MatchParams& params);

/// Maximizes the HMM score over the given candidate sets (log domain).
/// Ties are broken toward the lowest stroke id, then the lowest stroke index.
CurveDecoding viterbi_decode(const AnchoredPolyline& curve, const CandidateSets& candidates,
                             const MatchParams& params);

CandidateSets build_candidates(const AnchoredPolyline& curve, const StrokeSet& strokes,
                               double radius);

/// Candidate building followed by decoding for one curve.
CurveDecoding viterbi_match(const AnchoredPolyline& curve, const StrokeSet& strokes,
                            const MatchParams& params);

/// Independent per-curve matching (first round), without confidences.
MatchSet match_first_round(std::span<const AnchoredPolyline> curves, const StrokeSet& strokes,
                           const MatchParams& params);

/// Second round for contour vertices of different curves claiming the same
/// stroke vertex; afterwards no stroke vertex is claimed by two curves.
MatchSet resolve_conflicts(const MatchSet& first_round, std::span<const AnchoredPolyline> curves,
                           const StrokeSet& strokes, const MatchParams& params);

/// Fills MatchEntry::alpha. Entries whose contour or stroke vertex has no
/// angle take the value of the nearest entry on the same curve that has one.
void assign_confidence(MatchSet& matches, std::span<const AnchoredPolyline> curves,
                       const StrokeSet& strokes, const MatchParams& params);

/// First round, conflict resolution and confidences.
MatchSet match_curves(std::span<const AnchoredPolyline> curves, const StrokeSet& strokes,
                      const MatchParams& params);

}  // namespace sketchpersp
