#pragma once

#include "sketchpersp/geom.hpp"

#include <filesystem>
#include <string>

namespace sketchpersp {

/// Camera files are JSON objects with a "viewport" {width, height} and either
/// explicit "projection" and "modelview" matrices (16 numbers, row-major) or
/// pinhole parameters: "eye", "target", "up", "near", "far" and "fov_degrees"
/// (perspective) or "orthographic": true with "half_height". "aspect"
/// defaults to width / height.
CameraRig parse_camera(const std::string& text);
CameraRig load_camera(const std::filesystem::path& path);
/// Always written with explicit matrices.
std::string serialize_camera(const CameraRig& rig);
void save_camera(const CameraRig& rig, const std::filesystem::path& path);

}  // namespace sketchpersp
