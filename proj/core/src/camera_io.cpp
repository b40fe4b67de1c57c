#include "sketchpersp/camera_io.hpp"

#include "sketchpersp/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sketchpersp {

namespace {

using nlohmann::json;

Mat4 read_matrix(const json& j, const char* name) {
  const auto v = j.at(name).get<std::vector<double>>();
  if (v.size() != 16) throw Error(ErrorKind::Parse, std::string("camera '") + name + "' needs 16 numbers");
  Mat4 m;
  for (int k = 0; k < 16; ++k) m(k / 4, k % 4) = v[static_cast<std::size_t>(k)];
  return m;
}

Vec3 read_vec3(const json& j, const char* name) {
  const auto v = j.at(name).get<std::vector<double>>();
  if (v.size() != 3) throw Error(ErrorKind::Parse, std::string("camera '") + name + "' needs 3 numbers");
  return {v[0], v[1], v[2]};
}

std::vector<double> flatten(const Mat4& m) {
  std::vector<double> v(16);
  for (int k = 0; k < 16; ++k) v[static_cast<std::size_t>(k)] = m(k / 4, k % 4);
  return v;
}

}  // namespace

CameraRig parse_camera(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("camera file is not JSON: ") + e.what());
  }
  try {
    Viewport vp;
    if (j.contains("viewport")) {
      vp.width = j["viewport"].at("width").get<double>();
      vp.height = j["viewport"].at("height").get<double>();
    }
    if (!(vp.width > 0) || !(vp.height > 0)) throw Error(ErrorKind::Parse, "camera viewport must be positive");
    if (j.contains("projection") || j.contains("modelview"))
      return CameraRig(read_matrix(j, "projection"), read_matrix(j, "modelview"), vp);

    const Vec3 eye = read_vec3(j, "eye");
    const Vec3 target = j.contains("target") ? read_vec3(j, "target") : Vec3::Zero();
    const Vec3 up = j.contains("up") ? read_vec3(j, "up") : Vec3::UnitY();
    if ((target - eye).norm() == 0.0 || (target - eye).cross(up).norm() == 0.0)
      throw Error(ErrorKind::Parse, "camera eye, target and up are degenerate");
    const double near = j.value("near", 0.1);
    const double far = j.value("far", 100.0);
    const double aspect = j.value("aspect", vp.width / vp.height);
    if (!(near > 0) || !(far > near) || !(aspect > 0))
      throw Error(ErrorKind::Parse, "camera needs 0 < near < far and a positive aspect");
    Mat4 p;
    if (j.value("orthographic", false)) {
      const double hh = j.at("half_height").get<double>();
      if (!(hh > 0)) throw Error(ErrorKind::Parse, "orthographic half_height must be positive");
      p = orthographic(hh * aspect, hh, near, far);
    } else {
      const double fov = j.at("fov_degrees").get<double>();
      if (!(fov > 0) || !(fov < 180)) throw Error(ErrorKind::Parse, "fov_degrees must be in (0, 180)");
      p = perspective(fov * std::numbers::pi / 180.0, aspect, near, far);
    }
    return CameraRig(p, look_at(eye, target, up), vp);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed camera: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Domain) throw Error(ErrorKind::Parse, e.what());
    throw;
  }
}

CameraRig load_camera(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_camera(buf.str());
}

std::string serialize_camera(const CameraRig& rig) {
  json j;
  j["viewport"] = {{"width", rig.viewport().width}, {"height", rig.viewport().height}};
  j["projection"] = flatten(rig.projection());
  j["modelview"] = flatten(rig.modelview());
  return j.dump(1);
}

void save_camera(const CameraRig& rig, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Parse, "cannot write " + path.string());
  out << serialize_camera(rig) << '\n';
}

}  // namespace sketchpersp
