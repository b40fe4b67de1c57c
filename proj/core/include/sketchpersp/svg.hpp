#pragma once

#include "sketchpersp/geom.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sketchpersp {

inline constexpr const char* kAnalyticColor = "#FFA500";
inline constexpr const char* kDeviatedColor = "#000000";
inline constexpr const char* kMatchColor = "#3080FF";

/// One polyline of an SVG document. Points are in normalized image space;
/// the file stores pixel coordinates.
struct SvgPath {
  AnchoredPolyline curve;
  std::string kind;  // written as the class attribute
  std::string color = kDeviatedColor;
  double width = 1.0;
};

struct SvgDocument {
  Viewport viewport;
  std::vector<SvgPath> paths;
};

/// Paths are written as M/L polylines. A closed curve repeats its first
/// point at the end and is tagged with data-closed="true".
std::string write_svg(const SvgDocument& doc);
void save_svg(const SvgDocument& doc, const std::filesystem::path& path);

/// Reads <path> (M, L, H, V, Z and their relative forms), <polyline>,
/// <polygon> and <line> elements. Curved path commands are rejected. The
/// viewport comes from width/height, falling back to the viewBox.
SvgDocument parse_svg(const std::string& text);
SvgDocument load_svg(const std::filesystem::path& path);

}  // namespace sketchpersp
