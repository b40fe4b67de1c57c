#pragma once

#include "sketchpersp/contour.hpp"
#include "sketchpersp/field.hpp"
#include "sketchpersp/matching.hpp"
#include "sketchpersp/regularize.hpp"
#include "sketchpersp/svg.hpp"
#include "sketchpersp/training.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sketchpersp {

// --- configuration ------------------------------------------------------------

/// Reads a JSON config; keys not present keep the values of `base`.
/// Unknown keys are rejected.
TrainConfig parse_config(const std::string& text, const TrainConfig& base = {});
TrainConfig load_config(const std::filesystem::path& path, const TrainConfig& base = {});
std::string serialize_config(const TrainConfig& config);

// --- contour and match files --------------------------------------------------

struct ContourFile {
  ContourSet contours;
  CameraRig rig;
};

/// JSON sidecar with the camera and, per curve, its kind, image-space
/// samples and 3D anchors. This is what later stages read back.
std::string serialize_contours(const ContourSet& set, const CameraRig& rig);
ContourFile parse_contours(const std::string& text);
ContourFile load_contours(const std::filesystem::path& path);

SvgDocument contour_svg(const ContourSet& set, const Viewport& viewport, const std::string& color);

std::string serialize_matches(const MatchSet& matches);
MatchSet parse_matches(const std::string& text);
MatchSet load_matches(const std::filesystem::path& path);

/// Sketch strokes in image space, resampled at `interval`. Strokes with
/// fewer than two distinct points are dropped.
std::vector<AnchoredPolyline> prepare_strokes(const SvgDocument& sketch, const Viewport& target, double interval);

// --- rendering and evaluation --------------------------------------------------

/// Contours of `mesh` drawn through the deviation `model`, with deviated
/// visibility and T-junction snapping unless hidden contours are requested.
ContourSet render_deviated(const TriangleMesh& mesh, const CameraRig& rig, const DeviationModel& model,
                           const ContourOptions& options, RegularizeReport* report = nullptr);

/// Normalized L1 Chamfer distance between the samples of two curve sets.
double curve_chamfer(const std::vector<AnchoredPolyline>& a, const std::vector<AnchoredPolyline>& b,
                     const Viewport& viewport);

struct ConsistencyResult {
  double angle = 0.0;
  double chamfer = 0.0;
  LossHistory history;
};

/// Renders `field` at the object rotated by `angle` about the vertical
/// axis, fits a fresh field to that render, and compares the two fields'
/// renders at the original view.
ConsistencyResult view_consistency(const DeviationField& field, const TriangleMesh& mesh, const CameraRig& rig,
                                   const TrainConfig& config, double angle);

// --- commands -----------------------------------------------------------------

enum class Stage { Init, Aug1, Aug2 };
Stage parse_stage(const std::string& s);
std::string to_string(Stage s);

struct Metrics {
  double analytic_vs_sketch = 0.0;
  double output_vs_sketch = 0.0;
  std::optional<RegularizeReport> regularization;
  std::optional<ConsistencyResult> consistency;
};

std::string serialize_metrics(const Metrics& m);

/// Writes contours.svg and anchors.json.
ContourFile cmd_extract(const std::filesystem::path& mesh, const std::filesystem::path& camera,
                        const TrainConfig& config, const std::filesystem::path& out_dir);

/// Writes matches.json and overlay.svg. Throws DegenerateInput after writing
/// when the sketch holds no usable stroke.
MatchSet cmd_match(const std::filesystem::path& contours, const std::filesystem::path& sketch,
                   const TrainConfig& config, const std::filesystem::path& out_dir);

/// Initial training and augmentation stages up to `stage`. Writes
/// field_<stage>.json per finished stage, field.json and loss.csv. On a
/// numerical failure the last good field is saved as field_last_good.json
/// before the error propagates.
DeviationField cmd_train(const std::filesystem::path& contours, const std::filesystem::path& sketch,
                         const std::filesystem::path& matches, const std::optional<std::filesystem::path>& mesh,
                         const TrainConfig& config, Stage stage, const std::filesystem::path& out_dir);

/// Augmentation stages on top of an existing checkpoint.
DeviationField cmd_augment(const std::filesystem::path& checkpoint, const std::filesystem::path& contours,
                           const std::filesystem::path& sketch, const std::filesystem::path& matches,
                           const std::filesystem::path& mesh, const TrainConfig& config, Stage stage,
                           const std::filesystem::path& out_dir);

/// Writes deviated.svg (black deviated over orange analytic curves) and
/// deviated_anchors.json.
ContourSet cmd_infer(const std::filesystem::path& checkpoint, const std::filesystem::path& mesh,
                     const std::filesystem::path& camera, const TrainConfig& config,
                     const std::filesystem::path& out_dir);

/// Writes metrics.json. The consistency experiment runs when an angle is
/// given and needs the mesh.
Metrics cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& contours,
                 const std::filesystem::path& sketch, const std::optional<std::filesystem::path>& mesh,
                 std::optional<double> consistency_angle, const TrainConfig& config,
                 const std::filesystem::path& out_dir);

}  // namespace sketchpersp
