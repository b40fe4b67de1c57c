#pragma once

#include "sketchpersp/geom.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace sketchpersp {

struct MeshEdge {
  int v0 = 0;  // v0 < v1
  int v1 = 0;
  std::vector<int> faces;
};

class TriangleMesh {
 public:
  TriangleMesh() = default;
  /// Validates indices, drops zero-area faces and builds face normals and edges.
  TriangleMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& faces() const { return faces_; }
  const std::vector<Vec3>& face_normals() const { return normals_; }
  const std::vector<MeshEdge>& edges() const { return edges_; }

  bool empty() const { return faces_.empty(); }
  Eigen::AlignedBox3d bounds() const;

  /// Center at the origin and scale uniformly so the mesh fits [-1, 1]^3.
  TriangleMesh normalized() const;

 private:
  void build();

  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> faces_;
  std::vector<Vec3> normals_;
  std::vector<MeshEdge> edges_;
};

/// Reads vertices and faces from a Wavefront OBJ file; polygons are fan
/// triangulated. Throws Parse on malformed input or missing file.
TriangleMesh load_obj(const std::filesystem::path& path, bool normalize = true);
TriangleMesh parse_obj(const std::string& text, bool normalize = true);
void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

// Procedural shapes, all inside [-1, 1]^3.
TriangleMesh make_cube(double half_size = 1.0);
TriangleMesh make_icosphere(int level, double radius = 1.0);
TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments,
                        int minor_segments);
/// Closed surface of revolution around the y axis with a bottle-like
/// profile (body, shoulder, neck), capped at both ends.
TriangleMesh make_bottle(int segments = 48);
TriangleMesh make_single_triangle();

}  // namespace sketchpersp
