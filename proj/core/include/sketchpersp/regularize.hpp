#pragma once

#include "sketchpersp/contour.hpp"
#include "sketchpersp/field.hpp"
#include "sketchpersp/mesh.hpp"

#include <utility>
#include <vector>

namespace sketchpersp {

/// Replaces every sample position with its deviated projection.
ContourSet deviate_contours(const ContourSet& set, const CameraRig& rig, const DeviationModel& model);

/// Visibility in deviated space. A sample stays visible unless the first
/// surface hit on its view ray is nearer to the camera in deviated depth
/// (clip-space z of D * C * [x; 1] before the divide). With the identity
/// deviation this is exactly the analytic ray test.
std::vector<std::vector<bool>> deviated_visibility(const ContourSet& set, const TriangleMesh& mesh,
                                                   const CameraRig& rig, const DeviationModel& model);

struct RegularizeReport {
  int hidden_samples = 0;
  int t_junctions = 0;  // run endpoints created by trimming
  int snapped = 0;
  int unresolved = 0;   // endpoints with no occluding curve within 2l
};

/// Distance from `p` to the nearest curve of `set` other than `curve`, and
/// the closest point on it.
std::pair<double, Vec2> nearest_on_other_curves(const ContourSet& set, std::size_t curve, const Vec2& p);

/// Moves run endpoints created by trimming onto the nearest other curve when
/// the gap is larger than `interval` but no larger than 2 * `interval`.
/// Gaps up to one interval are already at sampling resolution.
void snap_t_junctions(ContourSet& set, const std::vector<std::array<bool, 2>>& junctions,
                      double interval, RegularizeReport& report);

/// Deviated visibility trim followed by T-junction snapping. `deviated`
/// holds untrimmed curves whose points are deviated projections. Only
/// junctions next to a visibility flip, or pulled farther from the occluder
/// than in the analytic projection, are snapped; the identity deviation
/// therefore reproduces visibility_trim.
ContourSet regularize_topology(const ContourSet& deviated, const TriangleMesh& mesh, const CameraRig& rig,
                               const DeviationModel& model, double interval,
                               RegularizeReport* report = nullptr);

}  // namespace sketchpersp
