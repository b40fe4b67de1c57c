#pragma once

#include "sketchpersp/geom.hpp"
#include "sketchpersp/mesh.hpp"

#include <array>
#include <numbers>
#include <string_view>
#include <vector>

namespace sketchpersp {

enum class ContourKind { Silhouette, Sharp, Boundary };

std::string_view to_string(ContourKind kind);
ContourKind contour_kind_from_string(std::string_view name);

inline constexpr double kDefaultSharpAngle = std::numbers::pi / 3.0;

struct EdgeFlags {
  bool silhouette = false;
  bool sharp = false;
  bool boundary = false;

  bool any() const { return silhouette || sharp || boundary; }
};

/// Curves in image space with mandatory 3D anchors. `kinds[i]` labels
/// `curves[i]`; `first_edge[i]` is the smallest mesh edge index in the
/// chain the curve came from and fixes the output order.
struct ContourSet {
  std::vector<AnchoredPolyline> curves;
  std::vector<ContourKind> kinds;
  std::vector<int> first_edge;

  std::size_t size() const { return curves.size(); }
  bool empty() const { return curves.empty(); }
  void push_back(AnchoredPolyline curve, ContourKind kind, int edge);
};

/// Per-edge feature flags. A face is front-facing when its normal points
/// toward the camera as seen from the edge midpoint; silhouettes separate a
/// front-facing face from one that is not.
std::vector<EdgeFlags> classify_edges(const TriangleMesh& mesh, const CameraRig& rig,
                                      double sharp_angle = kDefaultSharpAngle);

/// Chains silhouette, sharp and boundary edges into maximal polylines.
/// An edge with several flags is labelled boundary, then silhouette, then
/// sharp. Chains continue through vertices of degree two within a kind.
/// Throws EmptyContour if nothing is found.
ContourSet extract_contours(const TriangleMesh& mesh, const CameraRig& rig,
                            double sharp_angle = kDefaultSharpAngle);

/// Projects each chain with the analytic camera and resamples it at `interval`.
/// Curves that project to a single point are dropped.
ContourSet project_contours(const ContourSet& set, const CameraRig& rig, double interval);

/// Removes samples whose anchor is occluded by the mesh, splitting curves at
/// visibility changes.
ContourSet visibility_trim(const ContourSet& set, const TriangleMesh& mesh, const CameraRig& rig);

/// Per-sample visibility used by visibility_trim.
bool anchor_visible(const Vec3& anchor, const class FaceBvh& bvh, const CameraRig& rig,
                    double epsilon);
double visibility_epsilon(const TriangleMesh& mesh);

/// Where an output curve of split_runs came from.
struct RunEnds {
  std::array<bool, 2> junction{};  // first/last sample borders a removed sample
  std::size_t curve = 0;
  std::array<std::size_t, 2> index{};  // source indices of the first and last sample
};

/// Keeps runs of samples with keep[i] set; runs shorter than two samples are
/// dropped. `runs`, if given, receives one entry per output curve.
ContourSet split_runs(const ContourSet& set, const std::vector<std::vector<bool>>& keep,
                      std::vector<RunEnds>* runs = nullptr);

struct ContourOptions {
  /// Resampling interval as a fraction of the normalized image diagonal.
  double sampling_factor = 0.005;
  double sharp_angle = kDefaultSharpAngle;
  bool include_hidden = false;

  double interval(const Viewport& viewport) const { return sampling_factor * viewport.normalized_diagonal(); }
};

/// Extraction, projection, resampling and (unless hidden contours are
/// requested) visibility trimming in one call.
ContourSet render_contours(const TriangleMesh& mesh, const CameraRig& rig, const ContourOptions& options = {});

}  // namespace sketchpersp
