#include "sketchpersp/training.hpp"

#include "sketchpersp/error.hpp"
#include "sketchpersp/regularize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace sketchpersp {

void TrainConfig::validate() const {
  auto nonneg = [](double w) { return std::isfinite(w) && w >= 0.0; };
  if (!nonneg(weights.data) || !nonneg(weights.shape) || !nonneg(weights.slope) || !nonneg(weights.smooth) ||
      !nonneg(weights.depth))
    throw Error(ErrorKind::Domain, "loss weights must be finite and non-negative");
  matching.validate();
  if (!(smoothness_sigma() > 0) || !(data_epsilon > 0) || !(shape_epsilon > 0) || !(learning_rate > 0) ||
      !(final_learning_rate_scale > 0 && final_learning_rate_scale <= 1) ||
      !(contours.sampling_factor > 0))
    throw Error(ErrorKind::Domain, "widths, epsilons and step size must be positive, and the final rate scale in (0, 1]");
  if (grid_resolution < 2 || smooth_pairs < 1 || depth_pairs < 1)
    throw Error(ErrorKind::Domain, "sample counts must be positive");
  if (initial_iterations < 0 || augment_iterations < 0 || synthetic_pairs_per_iteration < 0)
    throw Error(ErrorKind::Domain, "iteration counts must be non-negative");
}

TrainingPair correspondence_pair(std::vector<AnchoredPolyline> contours, std::vector<AnchoredPolyline> targets,
                                 const CameraRig& rig, const std::vector<std::vector<bool>>* keep) {
  if (contours.size() != targets.size())
    throw Error(ErrorKind::DegenerateInput, "one target curve per contour curve required");
  TrainingPair pair;
  pair.rig = rig;
  for (std::size_t c = 0; c < contours.size(); ++c) {
    if (contours[c].size() != targets[c].size())
      throw Error(ErrorKind::DegenerateInput, "target curve differs in sample count");
    targets[c].anchors.clear();
    for (std::size_t i = 0; i < contours[c].size(); ++i) {
      const int ci = static_cast<int>(c);
      const int ii = static_cast<int>(i);
      if (keep && !(*keep)[c][i]) {
        pair.matches.unmatched.emplace_back(ci, ii);
        continue;
      }
      pair.matches.entries.push_back(MatchEntry{ci, ii, ci, ii, 1.0, 1.0});
    }
  }
  pair.contours = std::move(contours);
  pair.strokes = std::move(targets);
  return pair;
}

// --- LossProblem -------------------------------------------------------------

LossProblem::LossProblem(std::span<const TrainingPair> pairs, const TrainConfig& config) : config_(config) {
  config_.validate();
  if (pairs.empty()) throw Error(ErrorKind::DegenerateInput, "no training pairs");
  std::vector<Vec3> all_anchors;
  for (const auto& pair : pairs) {
    geometry_.push_back(make_pair_geometry(pair.contours, pair.strokes, pair.matches, pair.rig));
    const auto& g = geometry_.back();
    if (g.matched.empty())
      throw Error(ErrorKind::UndefinedLoss, "training pair '" + pair.provenance + "' has no matches");
    anchors_.push_back(g.anchor_matrix());
    synthetic_.push_back(pair.synthetic);
    all_anchors.insert(all_anchors.end(), g.anchors.begin(), g.anchors.end());
  }
  smooth_ = SmoothnessSampleSet::build(config_.grid_resolution, all_anchors,
                                       kSmoothCutoffSigmas * config_.smoothness_sigma());
}

namespace {

// First k entries of a partial Fisher-Yates shuffle of 0..n-1, sorted.
std::vector<int> choose(int n, int k, std::mt19937_64& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

LossProblem::Samples LossProblem::draw(std::mt19937_64& rng) const {
  Samples s;
  std::vector<int> synthetic;
  for (std::size_t i = 0; i < geometry_.size(); ++i) {
    if (synthetic_[i])
      synthetic.push_back(static_cast<int>(i));
    else
      s.pairs.emplace_back(static_cast<int>(i), 1.0);
  }
  const int total = static_cast<int>(synthetic.size());
  const int k = config_.synthetic_pairs_per_iteration;
  if (k == 0 || k >= total) {
    for (int i : synthetic) s.pairs.emplace_back(i, 1.0);
  } else {
    const double w = static_cast<double>(total) / k;
    for (int i : choose(total, k, rng)) s.pairs.emplace_back(synthetic[static_cast<std::size_t>(i)], w);
  }
  for (const auto& [idx, w] : s.pairs)
    s.depth.push_back(sample_pairs(geometry_[static_cast<std::size_t>(idx)].vertex_count(), config_.depth_pairs, rng));

  // Uniform draws from the near pairs; the sampled points are gathered
  // into a compact matrix the pair indices refer to.
  const auto& near = smooth_.near_pairs;
  const auto total_near = static_cast<int>(near.size());
  std::vector<IndexPair> chosen;
  if (total_near <= config_.smooth_pairs) {
    chosen = near;
    s.smooth_pairs.scale = 1.0;
  } else {
    std::uniform_int_distribution<int> pick(0, total_near - 1);
    chosen.reserve(static_cast<std::size_t>(config_.smooth_pairs));
    for (int k = 0; k < config_.smooth_pairs; ++k) chosen.push_back(near[static_cast<std::size_t>(pick(rng))]);
    s.smooth_pairs.scale = static_cast<double>(total_near) / config_.smooth_pairs;
  }
  std::map<int, int> column;
  for (const auto& [a, b] : chosen) {
    column.emplace(a, 0);
    column.emplace(b, 0);
  }
  s.smooth_points.resize(3, static_cast<Eigen::Index>(column.size()));
  int next = 0;
  for (auto& [src, dst] : column) {
    dst = next;
    s.smooth_points.col(next++) = smooth_.points.col(src);
  }
  s.smooth_pairs.pairs.reserve(chosen.size());
  for (const auto& [a, b] : chosen) s.smooth_pairs.pairs.emplace_back(column[a], column[b]);
  return s;
}

template <class T, class Eval>
LossTerms LossProblem::compute(const Samples& samples, Eval&& eval, T* total) const {
  T data = T(0.0), shape = T(0.0), slope = T(0.0), depth = T(0.0);
  for (std::size_t k = 0; k < samples.pairs.size(); ++k) {
    const auto [idx, w] = samples.pairs[k];
    const auto& g = geometry_[static_cast<std::size_t>(idx)];
    const std::vector<Mat4Of<T>> d = eval(anchors_[static_cast<std::size_t>(idx)]);
    const std::vector<Point2<T>> out = deviated_outputs<T>(g, d);
    data += w * loss_data<T>(g, out, config_.data_epsilon);
    shape += w * loss_shape<T>(g, out, config_.shape_epsilon);
    slope += w * loss_slope<T>(g, out);
    depth += w * loss_depth<T>(g, d, samples.depth[k]);
  }
  const std::vector<Mat4Of<T>> ds = eval(samples.smooth_points);
  const T smooth = loss_smooth<T>(samples.smooth_points, ds, samples.smooth_pairs, config_.smoothness_sigma(),
                                  smooth_.size());
  const auto& wt = config_.weights;
  *total = wt.data * data + wt.shape * shape + wt.slope * slope + wt.smooth * smooth + wt.depth * depth;
  return LossTerms{ad::value(data),  ad::value(shape), ad::value(slope),
                   ad::value(smooth), ad::value(depth), ad::value(*total)};
}

LossTerms LossProblem::evaluate(const DeviationField& field, const Samples& samples) const {
  double total = 0.0;
  return compute<double>(samples, [&](const Eigen::Matrix3Xd& pts) { return field_matrices(field, pts); },
                         &total);
}

LossTerms LossProblem::evaluate_with_gradient(const DeviationField& field, const Samples& samples,
                                              Eigen::VectorXd& gradient) const {
  GradientTape tape(field);
  ad::Var total;
  const LossTerms terms =
      compute<ad::Var>(samples, [&](const Eigen::Matrix3Xd& pts) { return tape.record(pts); }, &total);
  if (!std::isfinite(terms.total)) {
    gradient = Eigen::VectorXd::Zero(field.parameter_count());
    return terms;
  }
  gradient = tape.gradient(total);
  return terms;
}

// --- optimization -------------------------------------------------------------

namespace {

bool finite(const LossTerms& t) {
  return std::isfinite(t.data) && std::isfinite(t.shape) && std::isfinite(t.slope) && std::isfinite(t.smooth) &&
         std::isfinite(t.depth) && std::isfinite(t.total);
}

std::string describe(const std::string& stage, int iteration, const LossTerms& t) {
  std::ostringstream s;
  s << stage << " iteration " << iteration << ": data=" << t.data << " shape=" << t.shape << " slope=" << t.slope
    << " smooth=" << t.smooth << " depth=" << t.depth << " total=" << t.total;
  return s.str();
}

std::uint32_t fnv1a(const std::string& s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) h = (h ^ c) * 16777619u;
  return h;
}

}  // namespace

LossHistory train(std::span<const TrainingPair> pairs, const TrainConfig& config, DeviationField& field,
                  int iterations, const std::string& stage) {
  if (iterations < 0) throw Error(ErrorKind::Domain, "iteration count must be non-negative");
  const LossProblem problem(pairs, config);
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    fnv1a(stage)};
  std::mt19937_64 rng(seq);

  LossHistory history;
  std::optional<LossProblem::Samples> frozen;
  if (config.freeze_samples) frozen = problem.draw(rng);

  const Eigen::Index n = field.parameter_count();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad;
  Eigen::VectorXd last_good = field.parameters();
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double adam_eps = 1e-8;

  auto fail = [&](int it, const LossTerms& t, const std::string& why) {
    field.parameters() = last_good;
    throw Error(ErrorKind::NumericalFailure, describe(stage, it, t) + (why.empty() ? "" : " (" + why + ")"));
  };

  for (int it = 0; it < iterations; ++it) {
    std::optional<LossProblem::Samples> fresh;
    if (!frozen) fresh = problem.draw(rng);
    const auto& samples = frozen ? *frozen : *fresh;
    LossTerms terms;
    try {
      terms = problem.evaluate_with_gradient(field, samples, grad);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ProjectionSingularity && e.kind() != ErrorKind::NumericalFailure) throw;
      fail(it, terms, e.what());
    }
    if (!finite(terms)) fail(it, terms, "non-finite loss");
    history.push_back({it, stage, terms});
    last_good = field.parameters();

    auto& p = field.parameters();
    const double progress = iterations > 1 ? static_cast<double>(it) / (iterations - 1) : 0.0;
    const double floor = config.final_learning_rate_scale;
    const double lr = config.learning_rate * (floor + (1.0 - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
    if (config.optimizer == Optimizer::Sgd) {
      p -= lr * grad;
    } else {
      const double t = it + 1;
      m1 = beta1 * m1 + (1.0 - beta1) * grad;
      m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(beta1, t);
      const double c2 = 1.0 - std::pow(beta2, t);
      p.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + adam_eps);
    }
    if (!p.allFinite()) fail(it, terms, "non-finite parameters");
  }

  std::optional<LossProblem::Samples> fresh;
  if (!frozen) fresh = problem.draw(rng);
  LossTerms final_terms;
  try {
    final_terms = problem.evaluate(field, frozen ? *frozen : *fresh);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ProjectionSingularity) throw;
    fail(iterations, final_terms, e.what());
  }
  if (!finite(final_terms)) fail(iterations, final_terms, "non-finite loss");
  history.push_back({iterations, stage, final_terms});
  return history;
}

// --- self-augmentation --------------------------------------------------------

std::vector<TrainingPair> synthetic_pairs(const DeviationField& field, const TrainingPair& base,
                                          const TrainConfig& config, std::span<const double> degrees,
                                          std::vector<double>* skipped) {
  if (!base.mesh) throw Error(ErrorKind::DegenerateInput, "self-augmentation needs the pair's mesh");
  std::vector<TrainingPair> out;
  for (double deg : degrees) {
    const CameraRig rig = rotate_object(base.rig, Vec3::UnitY(), deg * std::numbers::pi / 180.0);
    ContourSet analytic;
    try {
      analytic = render_contours(*base.mesh, rig, config.contours);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyContour) throw;
      if (skipped) skipped->push_back(deg);
      continue;
    }
    const ContourSet deviated = deviate_contours(analytic, rig, field);
    std::vector<std::vector<bool>> keep;
    if (!config.contours.include_hidden) keep = deviated_visibility(analytic, *base.mesh, rig, field);
    TrainingPair pair = correspondence_pair(analytic.curves, deviated.curves, rig,
                                            config.contours.include_hidden ? nullptr : &keep);
    if (pair.matches.entries.empty()) {
      if (skipped) skipped->push_back(deg);
      continue;
    }
    std::ostringstream name;
    name << "synthetic " << deg << " deg";
    pair.provenance = name.str();
    pair.synthetic = true;
    pair.mesh = base.mesh;
    out.push_back(std::move(pair));
  }
  return out;
}

LossHistory self_augment(DeviationField& field, std::span<const TrainingPair> base_pairs,
                         const TrainConfig& config, int first_stage, int last_stage) {
  if (first_stage < 1 || last_stage > 2) throw Error(ErrorKind::Domain, "augmentation stages are 1 and 2");
  LossHistory history;
  for (int stage = first_stage; stage <= last_stage; ++stage) {
    const auto& degrees = stage == 1 ? config.stage1_degrees : config.stage2_degrees;
    std::vector<TrainingPair> set;
    for (const auto& base : base_pairs) {
      if (base.synthetic) continue;
      set.push_back(base);
      if (!base.mesh) continue;
      auto extra = synthetic_pairs(field, base, config, degrees);
      for (auto& p : extra) set.push_back(std::move(p));
    }
    const std::string label = "aug" + std::to_string(stage);
    int iterations = config.augment_iterations;
    if (config.augment_from_scratch) {
      const FieldProvenance provenance = field.provenance;
      field = DeviationField(field.architecture(), field.seed());
      field.provenance = provenance;
      iterations = config.initial_iterations;
    }
    auto h = train(set, config, field, iterations, label);
    history.insert(history.end(), h.begin(), h.end());
    field.provenance.stage = label;
  }
  return history;
}

void write_loss_csv(const LossHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Parse, "cannot write " + path.string());
  out << "iteration,stage,data,shape,slope,smooth,depth,total\n";
  char buf[512];
  for (const auto& r : history) {
    const auto& t = r.terms;
    std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iteration, r.stage.c_str(),
                  t.data, t.shape, t.slope, t.smooth, t.depth, t.total);
    out << buf;
  }
}

}  // namespace sketchpersp
