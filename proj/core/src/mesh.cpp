#include "sketchpersp/mesh.hpp"

#include "sketchpersp/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace sketchpersp {

TriangleMesh::TriangleMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces)
    : vertices_(std::move(vertices)) {
  const auto nv = static_cast<int>(vertices_.size());
  for (const auto& v : vertices_)
    if (!v.allFinite()) throw Error(ErrorKind::Parse, "non-finite mesh vertex");
  for (const auto& f : faces) {
    for (int idx : f)
      if (idx < 0 || idx >= nv) throw Error(ErrorKind::Parse, "face index out of range");
    const Vec3 n = (vertices_[f[1]] - vertices_[f[0]]).cross(vertices_[f[2]] - vertices_[f[0]]);
    if (n.norm() <= 1e-14) continue;
    faces_.push_back(f);
  }
  build();
}

void TriangleMesh::build() {
  normals_.clear();
  edges_.clear();
  normals_.reserve(faces_.size());
  std::map<std::pair<int, int>, std::size_t> lookup;
  for (std::size_t fi = 0; fi < faces_.size(); ++fi) {
    const auto& f = faces_[fi];
    normals_.push_back(
        (vertices_[f[1]] - vertices_[f[0]]).cross(vertices_[f[2]] - vertices_[f[0]]).normalized());
    for (int k = 0; k < 3; ++k) {
      int a = f[k];
      int b = f[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      auto [it, inserted] = lookup.try_emplace({a, b}, edges_.size());
      if (inserted) edges_.push_back(MeshEdge{a, b, {}});
      edges_[it->second].faces.push_back(static_cast<int>(fi));
    }
  }
}

Eigen::AlignedBox3d TriangleMesh::bounds() const {
  Eigen::AlignedBox3d box;
  for (const auto& v : vertices_) box.extend(v);
  return box;
}

TriangleMesh TriangleMesh::normalized() const {
  if (vertices_.empty()) return *this;
  const auto box = bounds();
  const Vec3 center = box.center();
  const double half = 0.5 * box.sizes().maxCoeff();
  const double scale = half > 0.0 ? 1.0 / half : 1.0;
  TriangleMesh out = *this;
  for (auto& v : out.vertices_) v = (v - center) * scale;
  out.build();
  return out;
}

TriangleMesh parse_obj(const std::string& text, bool normalize) {
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z()))
        throw Error(ErrorKind::Parse, "bad vertex on line " + std::to_string(lineno));
      verts.push_back(v);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ls >> tok) {
        // v, v/vt, v//vn, v/vt/vn
        const auto slash = tok.find('/');
        int idx = 0;
        try {
          idx = std::stoi(tok.substr(0, slash));
        } catch (const std::exception&) {
          throw Error(ErrorKind::Parse, "bad face index on line " + std::to_string(lineno));
        }
        if (idx < 0) idx = static_cast<int>(verts.size()) + idx + 1;
        poly.push_back(idx - 1);
      }
      if (poly.size() < 3) throw Error(ErrorKind::Parse, "face with fewer than 3 vertices on line " + std::to_string(lineno));
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) faces.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  if (faces.empty()) throw Error(ErrorKind::Parse, "OBJ has no faces");
  TriangleMesh mesh(std::move(verts), std::move(faces));
  if (mesh.empty()) throw Error(ErrorKind::Parse, "OBJ has only degenerate faces");
  return normalize ? mesh.normalized() : mesh;
}

TriangleMesh load_obj(const std::filesystem::path& path, bool normalize) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open mesh file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_obj(buf.str(), normalize);
}

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Parse, "cannot write " + path.string());
  out.precision(17);
  for (const auto& v : mesh.vertices()) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

TriangleMesh make_cube(double h) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) v.emplace_back(i & 1 ? h : -h, i & 2 ? h : -h, i & 4 ? h : -h);
  // Outward winding.
  std::vector<std::array<int, 3>> f = {
      {0, 2, 3}, {0, 3, 1},  // z = -h
      {4, 5, 7}, {4, 7, 6},  // z = +h
      {0, 1, 5}, {0, 5, 4},  // y = -h
      {2, 6, 7}, {2, 7, 3},  // y = +h
      {0, 4, 6}, {0, 6, 2},  // x = -h
      {1, 3, 7}, {1, 7, 5},  // x = +h
  };
  return TriangleMesh(std::move(v), std::move(f));
}

TriangleMesh make_icosphere(int level, double radius) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int idx = static_cast<int>(v.size()) - 1;
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto& tri : f) {
      const int a = midpoint(tri[0], tri[1]);
      const int b = midpoint(tri[1], tri[2]);
      const int c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  for (auto& p : v) p *= radius;
  return TriangleMesh(std::move(v), std::move(f));
}

TriangleMesh make_torus(double major_radius, double minor_radius, int nu, int nv) {
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> f;
  for (int i = 0; i < nu; ++i) {
    const double u = 2.0 * std::numbers::pi * i / nu;
    for (int j = 0; j < nv; ++j) {
      const double w = 2.0 * std::numbers::pi * j / nv;
      const double r = major_radius + minor_radius * std::cos(w);
      v.emplace_back(r * std::cos(u), minor_radius * std::sin(w), r * std::sin(u));
    }
  }
  auto id = [&](int i, int j) { return ((i + nu) % nu) * nv + ((j + nv) % nv); };
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      f.push_back({id(i, j), id(i, j + 1), id(i + 1, j + 1)});
      f.push_back({id(i, j), id(i + 1, j + 1), id(i + 1, j)});
    }
  return TriangleMesh(std::move(v), std::move(f));
}

TriangleMesh make_bottle(int segments) {
  // (radius, height) profile from the bottom center to the top center.
  const std::vector<std::pair<double, double>> profile = {
      {0.55, -1.0}, {0.60, -0.95}, {0.60, 0.10}, {0.55, 0.30}, {0.40, 0.45},
      {0.25, 0.55}, {0.20, 0.65},  {0.20, 0.95}, {0.23, 1.0}};
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> f;
  const int rings = static_cast<int>(profile.size());
  for (const auto& [r, y] : profile)
    for (int s = 0; s < segments; ++s) {
      const double a = 2.0 * std::numbers::pi * s / segments;
      v.emplace_back(r * std::cos(a), y, r * std::sin(a));
    }
  auto id = [&](int ring, int s) { return ring * segments + ((s + segments) % segments); };
  for (int ring = 0; ring + 1 < rings; ++ring)
    for (int s = 0; s < segments; ++s) {
      f.push_back({id(ring, s), id(ring + 1, s), id(ring + 1, s + 1)});
      f.push_back({id(ring, s), id(ring + 1, s + 1), id(ring, s + 1)});
    }
  const int bottom = static_cast<int>(v.size());
  v.emplace_back(0.0, profile.front().second, 0.0);
  const int top = static_cast<int>(v.size());
  v.emplace_back(0.0, profile.back().second, 0.0);
  for (int s = 0; s < segments; ++s) {
    f.push_back({bottom, id(0, s), id(0, s + 1)});
    f.push_back({top, id(rings - 1, s + 1), id(rings - 1, s)});
  }
  return TriangleMesh(std::move(v), std::move(f));
}

TriangleMesh make_single_triangle() {
  return TriangleMesh({{-0.8, -0.6, 0.0}, {0.8, -0.6, 0.0}, {0.0, 0.8, 0.0}}, {{0, 1, 2}});
}

}  // namespace sketchpersp
