#include "sketchpersp/pipeline.hpp"

#include "sketchpersp/camera_io.hpp"
#include "sketchpersp/error.hpp"
#include "sketchpersp/mesh.hpp"

#include <json.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

namespace sketchpersp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Parse, "cannot write " + path.string());
  out << text;
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string(what) + " is not valid JSON: " + e.what());
  }
}

using Setter = std::function<void(const json&)>;

void apply_section(const json& j, const std::map<std::string, Setter>& setters, const std::string& section) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, "config section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorKind::Parse, "unknown config key '" + section + key + "'");
    it->second(value);
  }
}

template <class T>
Setter set(T& target) {
  return [&target](const json& v) { target = v.get<T>(); };
}

}  // namespace

// --- configuration ------------------------------------------------------------

TrainConfig parse_config(const std::string& text, const TrainConfig& base) {
  TrainConfig c = base;
  const json j = parse_json(text, "config");
  double sharp_degrees = c.contours.sharp_angle * 180.0 / std::numbers::pi;
  std::string optimizer = c.optimizer == Optimizer::Adam ? "adam" : "sgd";
  std::string activation = c.architecture.activation == Activation::Tanh ? "tanh" : "softplus";
  try {
    apply_section(
        j,
        {{"seed", set(c.seed)},
         {"weights",
          [&](const json& s) {
            apply_section(s,
                          {{"data", set(c.weights.data)},
                           {"shape", set(c.weights.shape)},
                           {"slope", set(c.weights.slope)},
                           {"smooth", set(c.weights.smooth)},
                           {"depth", set(c.weights.depth)}},
                          "weights.");
          }},
         {"matching",
          [&](const json& s) {
            apply_section(s,
                          {{"sigma1", set(c.matching.sigma1)},
                           {"sigma2", set(c.matching.sigma2)},
                           {"candidate_radius", set(c.matching.candidate_radius)},
                           {"conflict_radius_factor", set(c.matching.conflict_radius_factor)},
                           {"sigma_edge",
                            [&](const json& v) {
                              if (v.is_null())
                                c.matching.sigma_edge.reset();
                              else
                                c.matching.sigma_edge = v.get<double>();
                            }}},
                          "matching.");
          }},
         {"contours",
          [&](const json& s) {
            apply_section(s,
                          {{"sampling_factor", set(c.contours.sampling_factor)},
                           {"sharp_angle_degrees", set(sharp_degrees)},
                           {"include_hidden", set(c.contours.include_hidden)}},
                          "contours.");
          }},
         {"field",
          [&](const json& s) {
            apply_section(s,
                          {{"hidden_layers", set(c.architecture.hidden_layers)},
                           {"hidden_width", set(c.architecture.hidden_width)},
                           {"encoding_levels", set(c.architecture.encoding_levels)},
                           {"activation", set(activation)}},
                          "field.");
          }},
         {"training",
          [&](const json& s) {
            apply_section(s,
                          {{"smooth_sigma",
                            [&](const json& v) {
                              if (v.is_null())
                                c.smooth_sigma.reset();
                              else
                                c.smooth_sigma = v.get<double>();
                            }},
                           {"data_epsilon", set(c.data_epsilon)},
                           {"shape_epsilon", set(c.shape_epsilon)},
                           {"grid_resolution", set(c.grid_resolution)},
                           {"smooth_pairs", set(c.smooth_pairs)},
                           {"depth_pairs", set(c.depth_pairs)},
                           {"optimizer", set(optimizer)},
                           {"learning_rate", set(c.learning_rate)},
                           {"final_learning_rate_scale", set(c.final_learning_rate_scale)},
                           {"initial_iterations", set(c.initial_iterations)},
                           {"augment_iterations", set(c.augment_iterations)},
                           {"synthetic_pairs_per_iteration", set(c.synthetic_pairs_per_iteration)},
                           {"freeze_samples", set(c.freeze_samples)},
                           {"augment_from_scratch", set(c.augment_from_scratch)},
                           {"stage1_degrees", set(c.stage1_degrees)},
                           {"stage2_degrees", set(c.stage2_degrees)}},
                          "training.");
          }}},
        "");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("bad config value: ") + e.what());
  }
  c.contours.sharp_angle = sharp_degrees * std::numbers::pi / 180.0;
  if (optimizer == "adam")
    c.optimizer = Optimizer::Adam;
  else if (optimizer == "sgd")
    c.optimizer = Optimizer::Sgd;
  else
    throw Error(ErrorKind::Parse, "optimizer must be 'adam' or 'sgd'");
  if (activation == "tanh")
    c.architecture.activation = Activation::Tanh;
  else if (activation == "softplus")
    c.architecture.activation = Activation::Softplus;
  else
    throw Error(ErrorKind::Parse, "activation must be 'tanh' or 'softplus'");
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Parse, std::string("invalid config: ") + e.what());
  }
  return c;
}

TrainConfig load_config(const fs::path& path, const TrainConfig& base) { return parse_config(read_text(path), base); }

std::string serialize_config(const TrainConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["weights"] = {{"data", c.weights.data},
                  {"shape", c.weights.shape},
                  {"slope", c.weights.slope},
                  {"smooth", c.weights.smooth},
                  {"depth", c.weights.depth}};
  j["matching"] = {{"sigma1", c.matching.sigma1},
                   {"sigma2", c.matching.sigma2},
                   {"candidate_radius", c.matching.candidate_radius},
                   {"conflict_radius_factor", c.matching.conflict_radius_factor},
                   {"sigma_edge", c.matching.sigma_edge ? json(*c.matching.sigma_edge) : json(nullptr)}};
  j["contours"] = {{"sampling_factor", c.contours.sampling_factor},
                   {"sharp_angle_degrees", c.contours.sharp_angle * 180.0 / std::numbers::pi},
                   {"include_hidden", c.contours.include_hidden}};
  j["field"] = {{"hidden_layers", c.architecture.hidden_layers},
                {"hidden_width", c.architecture.hidden_width},
                {"encoding_levels", c.architecture.encoding_levels},
                {"activation", c.architecture.activation == Activation::Tanh ? "tanh" : "softplus"}};
  j["training"] = {{"smooth_sigma", c.smooth_sigma ? json(*c.smooth_sigma) : json(nullptr)},
                   {"data_epsilon", c.data_epsilon},
                   {"shape_epsilon", c.shape_epsilon},
                   {"grid_resolution", c.grid_resolution},
                   {"smooth_pairs", c.smooth_pairs},
                   {"depth_pairs", c.depth_pairs},
                   {"optimizer", c.optimizer == Optimizer::Adam ? "adam" : "sgd"},
                   {"learning_rate", c.learning_rate},
                   {"final_learning_rate_scale", c.final_learning_rate_scale},
                   {"initial_iterations", c.initial_iterations},
                   {"augment_iterations", c.augment_iterations},
                   {"synthetic_pairs_per_iteration", c.synthetic_pairs_per_iteration},
                   {"freeze_samples", c.freeze_samples},
                   {"augment_from_scratch", c.augment_from_scratch},
                   {"stage1_degrees", c.stage1_degrees},
                   {"stage2_degrees", c.stage2_degrees}};
  return j.dump(2);
}

// --- contour and match files --------------------------------------------------

std::string serialize_contours(const ContourSet& set, const CameraRig& rig) {
  json j;
  j["format"] = "sketchpersp-contours";
  j["camera"] = json::parse(serialize_camera(rig));
  json curves = json::array();
  for (std::size_t c = 0; c < set.size(); ++c) {
    const auto& curve = set.curves[c];
    json pts = json::array();
    json anc = json::array();
    for (const auto& p : curve.points) pts.push_back({p.x(), p.y()});
    for (const auto& a : curve.anchors) anc.push_back({a.x(), a.y(), a.z()});
    curves.push_back({{"kind", std::string(to_string(set.kinds[c]))},
                      {"closed", curve.closed},
                      {"first_edge", set.first_edge[c]},
                      {"points", pts},
                      {"anchors", anc}});
  }
  j["curves"] = curves;
  return j.dump(1);
}

ContourFile parse_contours(const std::string& text) {
  const json j = parse_json(text, "contour file");
  try {
    if (j.at("format").get<std::string>() != "sketchpersp-contours")
      throw Error(ErrorKind::Parse, "not a contour file");
    ContourFile f;
    f.rig = parse_camera(j.at("camera").dump());
    for (const auto& jc : j.at("curves")) {
      AnchoredPolyline curve;
      curve.closed = jc.at("closed").get<bool>();
      for (const auto& p : jc.at("points")) curve.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      for (const auto& a : jc.at("anchors"))
        curve.anchors.emplace_back(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
      if (curve.anchors.size() != curve.points.size() || curve.size() < 2)
        throw Error(ErrorKind::Parse, "contour curve needs >= 2 samples with one anchor each");
      const int edge = jc.at("first_edge").get<int>();
      curve.source_id = edge;
      f.contours.push_back(std::move(curve), contour_kind_from_string(jc.at("kind").get<std::string>()), edge);
    }
    return f;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed contour file: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Domain) throw Error(ErrorKind::Parse, e.what());
    throw;
  }
}

ContourFile load_contours(const fs::path& path) { return parse_contours(read_text(path)); }

SvgDocument contour_svg(const ContourSet& set, const Viewport& viewport, const std::string& color) {
  SvgDocument doc;
  doc.viewport = viewport;
  for (std::size_t c = 0; c < set.size(); ++c)
    doc.paths.push_back(SvgPath{set.curves[c], std::string(to_string(set.kinds[c])), color, 1.5});
  return doc;
}

std::string serialize_matches(const MatchSet& m) {
  json entries = json::array();
  for (const auto& e : m.entries)
    entries.push_back({{"curve", e.curve}, {"i", e.i}, {"stroke", e.stroke}, {"j", e.j}, {"sv", e.sv}, {"alpha", e.alpha}});
  json unmatched = json::array();
  for (const auto& [c, i] : m.unmatched) unmatched.push_back({{"curve", c}, {"i", i}});
  json j;
  j["matches"] = entries;
  j["unmatched"] = unmatched;
  return j.dump(1);
}

MatchSet parse_matches(const std::string& text) {
  const json j = parse_json(text, "match file");
  try {
    MatchSet m;
    for (const auto& e : j.at("matches"))
      m.entries.push_back(MatchEntry{e.at("curve").get<int>(), e.at("i").get<int>(), e.at("stroke").get<int>(),
                                     e.at("j").get<int>(), e.at("sv").get<double>(), e.at("alpha").get<double>()});
    for (const auto& u : j.at("unmatched")) m.unmatched.emplace_back(u.at("curve").get<int>(), u.at("i").get<int>());
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed match file: ") + e.what());
  }
}

MatchSet load_matches(const fs::path& path) { return parse_matches(read_text(path)); }

std::vector<AnchoredPolyline> prepare_strokes(const SvgDocument& sketch, const Viewport& target, double interval) {
  std::vector<AnchoredPolyline> out;
  const auto& vp = sketch.viewport;
  const bool same = vp.width == target.width && vp.height == target.height;
  for (const auto& p : sketch.paths) {
    AnchoredPolyline s = p.curve;
    s.anchors.clear();
    if (!same)
      for (auto& q : s.points) q = target.image_from_pixel(vp.pixel_from_image(q).cwiseProduct(
                                   Vec2(target.width / vp.width, target.height / vp.height)));
    if (s.size() < 2 || !(s.length() > 0.0)) continue;
    AnchoredPolyline r = resample(s, interval);
    r.source_id = static_cast<int>(out.size());
    out.push_back(std::move(r));
  }
  return out;
}

// --- rendering and evaluation --------------------------------------------------

ContourSet render_deviated(const TriangleMesh& mesh, const CameraRig& rig, const DeviationModel& model,
                           const ContourOptions& options, RegularizeReport* report) {
  ContourOptions all = options;
  all.include_hidden = true;
  const ContourSet untrimmed = render_contours(mesh, rig, all);
  const ContourSet deviated = deviate_contours(untrimmed, rig, model);
  if (options.include_hidden) return deviated;
  return regularize_topology(deviated, mesh, rig, model, options.interval(rig.viewport()), report);
}

double curve_chamfer(const std::vector<AnchoredPolyline>& a, const std::vector<AnchoredPolyline>& b,
                     const Viewport& viewport) {
  return chamfer_l1(all_points(a), all_points(b), viewport.normalized_diagonal());
}

ConsistencyResult view_consistency(const DeviationField& field, const TriangleMesh& mesh, const CameraRig& rig,
                                   const TrainConfig& config, double angle) {
  const CameraRig turned = rotate_object(rig, Vec3::UnitY(), angle);
  const ContourSet analytic = render_contours(mesh, turned, config.contours);
  const ContourSet deviated = deviate_contours(analytic, turned, field);
  std::vector<std::vector<bool>> keep;
  if (!config.contours.include_hidden) keep = deviated_visibility(analytic, mesh, turned, field);
  const std::vector<TrainingPair> pairs = {correspondence_pair(
      analytic.curves, deviated.curves, turned, config.contours.include_hidden ? nullptr : &keep)};

  DeviationField second(field.architecture(), field.seed());
  second.provenance = {"consistency", "init"};
  ConsistencyResult r;
  r.angle = angle;
  r.history = train(pairs, config, second, config.initial_iterations, "consistency");
  const ContourSet a = render_deviated(mesh, rig, field, config.contours);
  const ContourSet b = render_deviated(mesh, rig, second, config.contours);
  r.chamfer = curve_chamfer(a.curves, b.curves, rig.viewport());
  return r;
}

// --- commands -----------------------------------------------------------------

Stage parse_stage(const std::string& s) {
  if (s == "init") return Stage::Init;
  if (s == "aug1") return Stage::Aug1;
  if (s == "aug2") return Stage::Aug2;
  throw Error(ErrorKind::Parse, "stage must be init, aug1 or aug2");
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Init:
      return "init";
    case Stage::Aug1:
      return "aug1";
    case Stage::Aug2:
      return "aug2";
  }
  return "init";
}

std::string serialize_metrics(const Metrics& m) {
  json j;
  j["analytic_vs_sketch"] = m.analytic_vs_sketch;
  j["output_vs_sketch"] = m.output_vs_sketch;
  j["ratio"] = m.analytic_vs_sketch > 0 ? json(m.output_vs_sketch / m.analytic_vs_sketch) : json(nullptr);
  if (m.regularization) {
    const auto& r = *m.regularization;
    j["regularization"] = {{"hidden_samples", r.hidden_samples},
                           {"t_junctions", r.t_junctions},
                           {"snapped", r.snapped},
                           {"unresolved", r.unresolved},
                           {"method", "deviated-depth visibility with T-junction snapping (simplified)"}};
  }
  if (m.consistency) j["consistency"] = {{"angle", m.consistency->angle}, {"chamfer", m.consistency->chamfer}};
  return j.dump(2);
}

ContourFile cmd_extract(const fs::path& mesh_path, const fs::path& camera, const TrainConfig& config,
                        const fs::path& out_dir) {
  const TriangleMesh mesh = load_obj(mesh_path);
  ContourFile f;
  f.rig = load_camera(camera);
  f.contours = render_contours(mesh, f.rig, config.contours);
  fs::create_directories(out_dir);
  save_svg(contour_svg(f.contours, f.rig.viewport(), kAnalyticColor), out_dir / "contours.svg");
  write_text(out_dir / "anchors.json", serialize_contours(f.contours, f.rig) + "\n");
  return f;
}

namespace {

struct PairInputs {
  ContourFile contours;
  std::vector<AnchoredPolyline> strokes;
};

PairInputs read_pair(const fs::path& contours, const fs::path& sketch, const TrainConfig& config) {
  PairInputs in;
  in.contours = load_contours(contours);
  const Viewport& vp = in.contours.rig.viewport();
  in.strokes = prepare_strokes(load_svg(sketch), vp, config.contours.interval(vp));
  return in;
}

TrainingPair input_pair(const PairInputs& in, MatchSet matches, const std::optional<fs::path>& mesh,
                        const std::string& name) {
  TrainingPair pair;
  pair.contours = in.contours.contours.curves;
  pair.strokes = in.strokes;
  pair.rig = in.contours.rig;
  pair.matches = std::move(matches);
  pair.provenance = name;
  if (mesh) pair.mesh = std::make_shared<const TriangleMesh>(load_obj(*mesh));
  return pair;
}

void save_stage(const DeviationField& field, const fs::path& out_dir) {
  save_field(field, out_dir / ("field_" + field.provenance.stage + ".json"));
}

DeviationField run_stages(DeviationField field, const std::vector<TrainingPair>& pairs, const TrainConfig& config,
                          int first_stage, Stage last, const fs::path& out_dir, LossHistory& history) {
  const int last_stage = last == Stage::Init ? 0 : last == Stage::Aug1 ? 1 : 2;
  try {
    for (int s = first_stage; s <= last_stage; ++s) {
      LossHistory h;
      if (s == 0) {
        h = train(pairs, config, field, config.initial_iterations, "init");
        field.provenance.stage = "init";
      } else {
        h = self_augment(field, pairs, config, s, s);
      }
      history.insert(history.end(), h.begin(), h.end());
      save_stage(field, out_dir);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NumericalFailure) {
      save_field(field, out_dir / "field_last_good.json");
      write_loss_csv(history, out_dir / "loss.csv");
    }
    throw;
  }
  save_field(field, out_dir / "field.json");
  write_loss_csv(history, out_dir / "loss.csv");
  return field;
}

}  // namespace

MatchSet cmd_match(const fs::path& contours, const fs::path& sketch, const TrainConfig& config,
                   const fs::path& out_dir) {
  const PairInputs in = read_pair(contours, sketch, config);
  const StrokeSet strokes(in.strokes);
  const MatchSet matches = match_curves(in.contours.contours.curves, strokes, config.matching);

  fs::create_directories(out_dir);
  write_text(out_dir / "matches.json", serialize_matches(matches) + "\n");
  const auto& vp = in.contours.rig.viewport();
  SvgDocument overlay = contour_svg(in.contours.contours, vp, kAnalyticColor);
  for (const auto& s : in.strokes) overlay.paths.push_back(SvgPath{s, "stroke", kDeviatedColor, 1.0});
  for (const auto& e : matches.entries) {
    AnchoredPolyline seg;
    seg.points = {in.contours.contours.curves[static_cast<std::size_t>(e.curve)].points[static_cast<std::size_t>(e.i)],
                  strokes.position(e.stroke, e.j)};
    overlay.paths.push_back(SvgPath{seg, "match", kMatchColor, 0.5});
  }
  save_svg(overlay, out_dir / "overlay.svg");
  if (in.strokes.empty()) throw Error(ErrorKind::DegenerateInput, "sketch contains no usable strokes");
  return matches;
}

DeviationField cmd_train(const fs::path& contours, const fs::path& sketch, const fs::path& matches,
                         const std::optional<fs::path>& mesh, const TrainConfig& config, Stage stage,
                         const fs::path& out_dir) {
  if (stage != Stage::Init && !mesh) throw Error(ErrorKind::Parse, "augmentation stages need --mesh");
  const PairInputs in = read_pair(contours, sketch, config);
  const std::vector<TrainingPair> pairs = {input_pair(in, load_matches(matches), mesh, sketch.stem().string())};
  DeviationField field(config.architecture, config.seed);
  field.provenance = {sketch.stem().string(), "init"};
  fs::create_directories(out_dir);
  LossHistory history;
  return run_stages(std::move(field), pairs, config, 0, stage, out_dir, history);
}

DeviationField cmd_augment(const fs::path& checkpoint, const fs::path& contours, const fs::path& sketch,
                           const fs::path& matches, const fs::path& mesh, const TrainConfig& config, Stage stage,
                           const fs::path& out_dir) {
  if (stage == Stage::Init) throw Error(ErrorKind::Parse, "augment needs --stage aug1 or aug2");
  DeviationField field = load_field(checkpoint, config.architecture);
  const PairInputs in = read_pair(contours, sketch, config);
  const std::vector<TrainingPair> pairs = {input_pair(in, load_matches(matches), mesh, sketch.stem().string())};
  const int first = field.provenance.stage == "aug1" ? 2 : 1;
  fs::create_directories(out_dir);
  LossHistory history;
  return run_stages(std::move(field), pairs, config, first, stage, out_dir, history);
}

ContourSet cmd_infer(const fs::path& checkpoint, const fs::path& mesh_path, const fs::path& camera,
                     const TrainConfig& config, const fs::path& out_dir) {
  const DeviationField field = load_field(checkpoint, config.architecture);
  const TriangleMesh mesh = load_obj(mesh_path);
  const CameraRig rig = load_camera(camera);
  const ContourSet analytic = render_contours(mesh, rig, config.contours);
  RegularizeReport report;
  const ContourSet deviated = render_deviated(mesh, rig, field, config.contours, &report);

  fs::create_directories(out_dir);
  SvgDocument doc = contour_svg(analytic, rig.viewport(), kAnalyticColor);
  for (auto& p : contour_svg(deviated, rig.viewport(), kDeviatedColor).paths) doc.paths.push_back(std::move(p));
  save_svg(doc, out_dir / "deviated.svg");
  write_text(out_dir / "deviated_anchors.json", serialize_contours(deviated, rig) + "\n");
  return deviated;
}

Metrics cmd_eval(const fs::path& checkpoint, const fs::path& contours, const fs::path& sketch,
                 const std::optional<fs::path>& mesh_path, std::optional<double> consistency_angle,
                 const TrainConfig& config, const fs::path& out_dir) {
  if (consistency_angle && !mesh_path) throw Error(ErrorKind::Parse, "the consistency experiment needs --mesh");
  const DeviationField field = load_field(checkpoint, config.architecture);
  const PairInputs in = read_pair(contours, sketch, config);
  if (in.strokes.empty()) throw Error(ErrorKind::DegenerateInput, "sketch contains no usable strokes");
  const CameraRig& rig = in.contours.rig;
  Metrics m;
  m.analytic_vs_sketch = curve_chamfer(in.contours.contours.curves, in.strokes, rig.viewport());
  if (mesh_path) {
    const TriangleMesh mesh = load_obj(*mesh_path);
    RegularizeReport report;
    const ContourSet out = render_deviated(mesh, rig, field, config.contours, &report);
    m.output_vs_sketch = curve_chamfer(out.curves, in.strokes, rig.viewport());
    m.regularization = report;
    if (consistency_angle) m.consistency = view_consistency(field, mesh, rig, config, *consistency_angle);
  } else {
    const ContourSet out = deviate_contours(in.contours.contours, rig, field);
    m.output_vs_sketch = curve_chamfer(out.curves, in.strokes, rig.viewport());
  }
  fs::create_directories(out_dir);
  write_text(out_dir / "metrics.json", serialize_metrics(m) + "\n");
  return m;
}

}  // namespace sketchpersp
