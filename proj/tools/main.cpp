#include <sketchpersp/error.hpp>
#include <sketchpersp/pipeline.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace sketchpersp;

namespace {

constexpr int kInputError = 2;
constexpr int kNumericalError = 3;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ProjectionSingularity:
    case ErrorKind::NumericalFailure:
      return kNumericalError;
    default:
      return kInputError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn and apply non-linear drawing perspective from a sketch/contour pair"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::optional<fs::path> config_path;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  fs::path out_dir = ".";
  std::string stage_name;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed overriding the config");
  app.add_flag("--deterministic", deterministic, "Single-threaded, reproducible execution (the default)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--stage", stage_name, "Last training stage: init, aug1 or aug2");

  fs::path mesh, camera, contours, sketch, matches, checkpoint;
  std::optional<fs::path> opt_mesh;
  std::optional<double> consistency_degrees;

  auto* extract = app.add_subcommand("extract", "Extract, project and trim contours of a mesh");
  extract->add_option("--mesh", mesh, "OBJ mesh")->required();
  extract->add_option("--camera", camera, "Camera JSON")->required();

  auto* match = app.add_subcommand("match", "Match contour curves to sketch strokes");
  match->add_option("--contours", contours, "anchors.json from extract")->required();
  match->add_option("--sketch", sketch, "Sketch SVG")->required();

  auto* train_cmd = app.add_subcommand("train", "Learn a deviation field");
  train_cmd->add_option("--contours", contours, "anchors.json from extract")->required();
  train_cmd->add_option("--sketch", sketch, "Sketch SVG")->required();
  train_cmd->add_option("--matches", matches, "matches.json from match")->required();
  train_cmd->add_option("--mesh", opt_mesh, "OBJ mesh, needed for augmentation");

  auto* augment = app.add_subcommand("augment", "Self-augmentation stages on a trained field");
  augment->add_option("--checkpoint", checkpoint, "Field checkpoint")->required();
  augment->add_option("--contours", contours, "anchors.json from extract")->required();
  augment->add_option("--sketch", sketch, "Sketch SVG")->required();
  augment->add_option("--matches", matches, "matches.json from match")->required();
  augment->add_option("--mesh", mesh, "OBJ mesh")->required();

  auto* infer = app.add_subcommand("infer", "Render deviated contours of a mesh");
  infer->add_option("--checkpoint", checkpoint, "Field checkpoint")->required();
  infer->add_option("--mesh", mesh, "OBJ mesh")->required();
  infer->add_option("--camera", camera, "Camera JSON")->required();

  auto* eval = app.add_subcommand("eval", "Chamfer metrics and the view-consistency experiment");
  eval->add_option("--checkpoint", checkpoint, "Field checkpoint")->required();
  eval->add_option("--contours", contours, "anchors.json from extract")->required();
  eval->add_option("--sketch", sketch, "Sketch SVG")->required();
  eval->add_option("--mesh", opt_mesh, "OBJ mesh; enables regularized renders");
  eval->add_option("--consistency-angle", consistency_degrees, "Rotation in degrees for the D to D' experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  try {
    TrainConfig config;
    if (config_path) config = load_config(*config_path);
    if (seed) config.seed = *seed;
    (void)deterministic;

    if (*extract) {
      const auto f = cmd_extract(mesh, camera, config, out_dir);
      std::printf("%zu contour curves written to %s\n", f.contours.size(), out_dir.string().c_str());
    } else if (*match) {
      const auto m = cmd_match(contours, sketch, config, out_dir);
      std::printf("%zu matched, %zu unmatched vertices\n", m.entries.size(), m.unmatched.size());
    } else if (*train_cmd) {
      const Stage stage = stage_name.empty() ? (opt_mesh ? Stage::Aug2 : Stage::Init) : parse_stage(stage_name);
      const auto field = cmd_train(contours, sketch, matches, opt_mesh, config, stage, out_dir);
      std::printf("trained through stage %s\n", field.provenance.stage.c_str());
    } else if (*augment) {
      const Stage stage = stage_name.empty() ? Stage::Aug2 : parse_stage(stage_name);
      const auto field = cmd_augment(checkpoint, contours, sketch, matches, mesh, config, stage, out_dir);
      std::printf("augmented through stage %s\n", field.provenance.stage.c_str());
    } else if (*infer) {
      const auto set = cmd_infer(checkpoint, mesh, camera, config, out_dir);
      std::printf("%zu deviated curves written to %s\n", set.size(), out_dir.string().c_str());
    } else if (*eval) {
      std::optional<double> angle;
      if (consistency_degrees) angle = *consistency_degrees * std::numbers::pi / 180.0;
      const auto m = cmd_eval(checkpoint, contours, sketch, opt_mesh, angle, config, out_dir);
      std::printf("analytic vs sketch %.6g, output vs sketch %.6g\n", m.analytic_vs_sketch, m.output_vs_sketch);
      if (m.consistency) std::printf("view consistency %.6g\n", m.consistency->chamfer);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", std::string(to_string(e.kind())).c_str(), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  }
  return 0;
}
