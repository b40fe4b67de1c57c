#include "sketchpersp/svg.hpp"

#include "sketchpersp/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace sketchpersp {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Attributes = std::map<std::string, std::string>;

Attributes parse_attributes(const std::string& s) {
  Attributes out;
  std::size_t i = 0;
  auto is_name = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' || c == '.';
  };
  while (i < s.size()) {
    while (i < s.size() && !is_name(s[i])) ++i;
    const std::size_t name_begin = i;
    while (i < s.size() && is_name(s[i])) ++i;
    const std::string name = s.substr(name_begin, i - name_begin);
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size() || s[i] != '=') continue;
    ++i;
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size() || (s[i] != '"' && s[i] != '\'')) throw Error(ErrorKind::Parse, "unquoted SVG attribute " + name);
    const char quote = s[i++];
    const std::size_t end = s.find(quote, i);
    if (end == std::string::npos) throw Error(ErrorKind::Parse, "unterminated SVG attribute " + name);
    out[name] = s.substr(i, end - i);
    i = end + 1;
  }
  return out;
}

struct Element {
  std::string name;
  std::string attributes;
};

// Start tags in document order; comments, declarations and end tags are skipped.
std::vector<Element> start_tags(const std::string& text) {
  std::vector<Element> out;
  std::size_t i = 0;
  while ((i = text.find('<', i)) != std::string::npos) {
    if (text.compare(i, 4, "<!--") == 0) {
      const std::size_t end = text.find("-->", i);
      if (end == std::string::npos) break;
      i = end + 3;
      continue;
    }
    ++i;
    if (i < text.size() && (text[i] == '/' || text[i] == '?' || text[i] == '!')) continue;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != '>' && text[j] != '/')
      ++j;
    Element e;
    e.name = text.substr(i, j - i);
    // Scan to the closing '>' outside quotes.
    char quote = 0;
    std::size_t k = j;
    for (; k < text.size(); ++k) {
      const char c = text[k];
      if (quote) {
        if (c == quote) quote = 0;
      } else if (c == '"' || c == '\'') {
        quote = c;
      } else if (c == '>') {
        break;
      }
    }
    if (k >= text.size()) throw Error(ErrorKind::Parse, "unterminated <" + e.name + "> element");
    e.attributes = text.substr(j, k - j);
    out.push_back(std::move(e));
    i = k + 1;
  }
  return out;
}

class Scanner {
 public:
  explicit Scanner(const std::string& s) : s_(s) {}

  void skip_separators() {
    while (pos_ < s_.size() && (std::isspace(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == ',')) ++pos_;
  }
  bool done() {
    skip_separators();
    return pos_ >= s_.size();
  }
  bool at_number() {
    skip_separators();
    if (pos_ >= s_.size()) return false;
    const char c = s_[pos_];
    return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
  }
  double number() {
    skip_separators();
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) throw Error(ErrorKind::Parse, "expected a number in SVG data near offset " + std::to_string(pos_));
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }
  char command() {
    skip_separators();
    return s_[pos_++];
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

double length_attribute(const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str()) throw Error(ErrorKind::Parse, "bad SVG length '" + v + "'");
  return x;
}

struct Frame {
  Viewport viewport;
  double min_x = 0.0;
  double min_y = 0.0;
  double sx = 1.0;
  double sy = 1.0;

  Vec2 to_image(double x, double y) const {
    return viewport.image_from_pixel(Vec2((x - min_x) * sx, (y - min_y) * sy));
  }
};

Frame read_frame(const Attributes& a) {
  Frame f;
  std::optional<std::array<double, 4>> box;
  if (auto it = a.find("viewBox"); it != a.end()) {
    Scanner sc(it->second);
    std::array<double, 4> b{};
    for (auto& v : b) v = sc.number();
    box = b;
  }
  const auto w = a.find("width");
  const auto h = a.find("height");
  if (w != a.end() && h != a.end() && w->second.find('%') == std::string::npos) {
    f.viewport = {length_attribute(w->second), length_attribute(h->second)};
  } else if (box) {
    f.viewport = {(*box)[2], (*box)[3]};
  } else {
    throw Error(ErrorKind::Parse, "SVG has neither width/height nor viewBox");
  }
  if (!(f.viewport.width > 0) || !(f.viewport.height > 0)) throw Error(ErrorKind::Parse, "SVG viewport is empty");
  if (box) {
    if (!((*box)[2] > 0) || !((*box)[3] > 0)) throw Error(ErrorKind::Parse, "SVG viewBox is empty");
    f.min_x = (*box)[0];
    f.min_y = (*box)[1];
    f.sx = f.viewport.width / (*box)[2];
    f.sy = f.viewport.height / (*box)[3];
  }
  return f;
}

// Splits path data into subpaths; each becomes its own polyline.
std::vector<std::pair<std::vector<Vec2>, bool>> path_polylines(const std::string& d) {
  std::vector<std::pair<std::vector<Vec2>, bool>> out;
  Scanner sc(d);
  Vec2 cur(0, 0);
  Vec2 start(0, 0);
  std::vector<Vec2> pts;
  bool closed = false;
  auto flush = [&] {
    if (!pts.empty()) out.emplace_back(std::move(pts), closed);
    pts.clear();
    closed = false;
  };
  char cmd = 0;
  while (!sc.done()) {
    if (!sc.at_number()) {
      cmd = sc.command();
    } else if (cmd == 0) {
      throw Error(ErrorKind::Parse, "path data must start with a command");
    } else if (cmd == 'M') {
      cmd = 'L';
    } else if (cmd == 'm') {
      cmd = 'l';
    }
    const bool rel = std::islower(static_cast<unsigned char>(cmd)) != 0;
    switch (std::toupper(static_cast<unsigned char>(cmd))) {
      case 'M': {
        flush();
        const double x = sc.number();
        const double y = sc.number();
        cur = rel ? cur + Vec2(x, y) : Vec2(x, y);
        start = cur;
        pts.push_back(cur);
        break;
      }
      case 'L': {
        const double x = sc.number();
        const double y = sc.number();
        cur = rel ? cur + Vec2(x, y) : Vec2(x, y);
        pts.push_back(cur);
        break;
      }
      case 'H': {
        const double x = sc.number();
        cur.x() = rel ? cur.x() + x : x;
        pts.push_back(cur);
        break;
      }
      case 'V': {
        const double y = sc.number();
        cur.y() = rel ? cur.y() + y : y;
        pts.push_back(cur);
        break;
      }
      case 'Z': {
        closed = true;
        cur = start;
        flush();
        cmd = 0;
        break;
      }
      default:
        throw Error(ErrorKind::Parse, std::string("unsupported path command '") + cmd + "'");
    }
  }
  flush();
  return out;
}

std::vector<Vec2> point_list(const std::string& s) {
  Scanner sc(s);
  std::vector<Vec2> pts;
  while (!sc.done()) {
    const double x = sc.number();
    const double y = sc.number();
    pts.emplace_back(x, y);
  }
  return pts;
}

}  // namespace

std::string write_svg(const SvgDocument& doc) {
  const auto& vp = doc.viewport;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(vp.width) << "\" height=\""
      << fmt(vp.height) << "\" viewBox=\"0 0 " << fmt(vp.width) << ' ' << fmt(vp.height) << "\">\n";
  for (const auto& p : doc.paths) {
    if (p.curve.size() == 0) continue;
    out << "  <path";
    if (!p.kind.empty()) out << " class=\"" << p.kind << '"';
    if (p.curve.closed) out << " data-closed=\"true\"";
    out << " fill=\"none\" stroke=\"" << p.color << "\" stroke-width=\"" << fmt(p.width) << "\" d=\"";
    for (std::size_t i = 0; i <= p.curve.size(); ++i) {
      if (i == p.curve.size() && !p.curve.closed) break;
      const Vec2 px = vp.pixel_from_image(p.curve.points[i % p.curve.size()]);
      out << (i == 0 ? "M" : " L") << fmt(px.x()) << ' ' << fmt(px.y());
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void save_svg(const SvgDocument& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Parse, "cannot write " + path.string());
  out << write_svg(doc);
}

SvgDocument parse_svg(const std::string& text) {
  const auto tags = start_tags(text);
  auto root = std::find_if(tags.begin(), tags.end(), [](const Element& e) { return e.name == "svg"; });
  if (root == tags.end()) throw Error(ErrorKind::Parse, "no <svg> element");
  const Frame frame = read_frame(parse_attributes(root->attributes));
  SvgDocument doc;
  doc.viewport = frame.viewport;

  for (const auto& element : tags) {
    const std::string& tag = element.name;
    if (tag != "path" && tag != "polyline" && tag != "polygon" && tag != "line") continue;
    const Attributes a = parse_attributes(element.attributes);
    SvgPath base;
    if (auto c = a.find("class"); c != a.end()) base.kind = c->second;
    if (auto c = a.find("stroke"); c != a.end()) base.color = c->second;
    if (auto c = a.find("stroke-width"); c != a.end()) base.width = length_attribute(c->second);

    std::vector<std::pair<std::vector<Vec2>, bool>> polys;
    if (tag == "path") {
      auto d = a.find("d");
      if (d == a.end()) continue;
      polys = path_polylines(d->second);
      auto flag = a.find("data-closed");
      if (flag != a.end() && flag->second == "true") {
        for (auto& [pts, closed] : polys) {
          if (pts.size() > 1 && pts.front() == pts.back()) pts.pop_back();
          closed = true;
        }
      }
    } else if (tag == "polyline" || tag == "polygon") {
      auto pts = a.find("points");
      if (pts == a.end()) continue;
      polys.emplace_back(point_list(pts->second), tag == "polygon");
    } else {
      auto get = [&](const char* k) {
        auto v = a.find(k);
        return v == a.end() ? 0.0 : length_attribute(v->second);
      };
      polys.push_back({{Vec2(get("x1"), get("y1")), Vec2(get("x2"), get("y2"))}, false});
    }
    for (auto& [pts, closed] : polys) {
      SvgPath p = base;
      p.curve.closed = closed;
      p.curve.source_id = static_cast<int>(doc.paths.size());
      for (const auto& q : pts) p.curve.points.push_back(frame.to_image(q.x(), q.y()));
      doc.paths.push_back(std::move(p));
    }
  }
  return doc;
}

SvgDocument load_svg(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_svg(buf.str());
}

}  // namespace sketchpersp
