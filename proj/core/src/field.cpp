#include "sketchpersp/field.hpp"

#include "sketchpersp/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace sketchpersp {

namespace {

constexpr int kOutputs = 15;
constexpr int kCheckpointVersion = 1;
constexpr const char* kCheckpointFormat = "sketchpersp-deviation-field";

const std::array<double, kOutputs> kIdentityBias = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0};

double softplus(double z) { return z > 30.0 ? z : std::log1p(std::exp(z)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::string activation_name(Activation a) { return a == Activation::Tanh ? "tanh" : "softplus"; }

Activation activation_from_name(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "softplus") return Activation::Softplus;
  throw Error(ErrorKind::Checkpoint, "unknown activation '" + s + "'");
}

}  // namespace

DeviationField::DeviationField(const FieldArchitecture& arch, std::uint64_t seed)
    : arch_(arch), seed_(seed) {
  if (arch.hidden_layers < 1 || arch.hidden_width < 1 || arch.encoding_levels < 0)
    throw Error(ErrorKind::Domain, "invalid field architecture");
  Eigen::Index offset = 0;
  int in = arch.input_dim();
  for (int l = 0; l <= arch.hidden_layers; ++l) {
    const int out = l == arch.hidden_layers ? kOutputs : arch.hidden_width;
    Layer layer{offset, offset + static_cast<Eigen::Index>(out) * in, out, in};
    offset = layer.bias_offset + out;
    layers_.push_back(layer);
    in = out;
  }
  params_ = Eigen::VectorXd::Zero(offset);

  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const double bound = std::sqrt(6.0 / (layer.rows + layer.cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(layer.rows) * layer.cols; ++k)
      params_[layer.weight_offset + k] = dist(rng);
  }
  const auto& last = layers_.back();
  for (int k = 0; k < kOutputs; ++k) params_[last.bias_offset + k] = kIdentityBias[static_cast<std::size_t>(k)];
}

DeviationField init_field(const FieldArchitecture& arch, std::uint64_t seed) {
  return DeviationField(arch, seed);
}

Eigen::Map<const Eigen::MatrixXd> DeviationField::weights(const Layer& l) const {
  return {params_.data() + l.weight_offset, l.rows, l.cols};
}

Eigen::Map<const Eigen::VectorXd> DeviationField::bias(const Layer& l) const {
  return {params_.data() + l.bias_offset, l.rows};
}

Eigen::MatrixXd DeviationField::encode(const Eigen::Matrix3Xd& points) const {
  if (!points.allFinite()) throw Error(ErrorKind::Domain, "field evaluated at a non-finite point");
  if (arch_.encoding_levels == 0) return points;
  Eigen::MatrixXd x(arch_.input_dim(), points.cols());
  x.topRows<3>() = points;
  for (int k = 0; k < arch_.encoding_levels; ++k) {
    const double freq = std::numbers::pi * std::ldexp(1.0, k);
    x.middleRows(3 + 6 * k, 3) = (points * freq).array().sin().matrix();
    x.middleRows(6 + 6 * k, 3) = (points * freq).array().cos().matrix();
  }
  return x;
}

FieldOutputs DeviationField::forward(const Eigen::Matrix3Xd& points, Cache& cache) const {
  cache.inputs.clear();
  cache.pre.clear();
  Eigen::MatrixXd h = encode(points);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    Eigen::MatrixXd z = weights(layer) * h;
    z.colwise() += bias(layer);
    cache.inputs.push_back(std::move(h));
    if (l + 1 == layers_.size()) return z;
    if (arch_.activation == Activation::Tanh) {
      h = z.array().tanh().matrix();
    } else {
      h = z.unaryExpr([](double v) { return softplus(v); });
    }
    cache.pre.push_back(std::move(z));
  }
  return {};  // unreachable
}

FieldOutputs DeviationField::eval_batch(const Eigen::Matrix3Xd& points) const {
  Cache cache;
  return forward(points, cache);
}

DeviationMatrix DeviationField::eval(const Vec3& point) const {
  const FieldOutputs out = eval_batch(point);
  std::array<double, kOutputs> v{};
  for (int k = 0; k < kOutputs; ++k) v[static_cast<std::size_t>(k)] = out(k, 0);
  return DeviationMatrix::from_free_values(v);
}

void DeviationField::backward(const Cache& cache, const FieldOutputs& grad_outputs,
                              Eigen::VectorXd& grad) const {
  if (grad.size() != params_.size()) grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd delta = grad_outputs;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const auto& input = cache.inputs[l];
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + layer.weight_offset, layer.rows, layer.cols);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + layer.bias_offset, layer.rows);
    gw.noalias() += delta * input.transpose();
    gb += delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd up = weights(layer).transpose() * delta;
    const auto& z = cache.pre[l - 1];
    if (arch_.activation == Activation::Tanh) {
      delta = up.array() * (1.0 - input.array().square());
    } else {
      delta = up.array() * z.unaryExpr([](double v) { return sigmoid(v); }).array();
    }
  }
}

Vec2 apply(const DeviationModel& model, const CameraRig& rig, const Vec3& point) {
  return project_to_image(point, rig, model.at(point));
}

// --- GradientTape ------------------------------------------------------------

GradientTape::GradientTape(const DeviationField& field) : field_(field), scope_(tape_) {}

GradientTape::~GradientTape() = default;

std::vector<Mat4Of<ad::Var>> GradientTape::record(const Eigen::Matrix3Xd& points) {
  Batch batch;
  const FieldOutputs out = field_.forward(points, batch.cache);
  batch.count = points.cols();
  batch.first_leaf = static_cast<int>(tape_.size());
  std::vector<Mat4Of<ad::Var>> mats(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    auto& m = mats[static_cast<std::size_t>(c)];
    for (int k = 0; k < kOutputs; ++k) m[static_cast<std::size_t>(k)] = ad::Var::variable(out(k, c));
    m[15] = ad::Var(1.0);
  }
  batches_.push_back(std::move(batch));
  return mats;
}

Eigen::VectorXd GradientTape::gradient(const ad::Var& loss) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(field_.parameter_count());
  if (loss.is_constant()) return grad;
  if (!std::isfinite(loss.value()))
    throw Error(ErrorKind::NumericalFailure, "gradient of a non-finite loss");
  tape_.backward(loss.id());
  for (const auto& batch : batches_) {
    FieldOutputs g(kOutputs, batch.count);
    for (Eigen::Index c = 0; c < batch.count; ++c)
      for (int k = 0; k < kOutputs; ++k)
        g(k, c) = tape_.adjoint(batch.first_leaf + static_cast<int>(c) * kOutputs + k);
    field_.backward(batch.cache, g, grad);
  }
  if (!grad.allFinite()) throw Error(ErrorKind::ProjectionSingularity, "non-finite gradient");
  return grad;
}

// --- checkpoints -------------------------------------------------------------

std::string serialize_field(const DeviationField& field) {
  const auto& a = field.architecture();
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["architecture"] = {{"input_dim", a.input_dim()},
                       {"hidden_layers", a.hidden_layers},
                       {"hidden_width", a.hidden_width},
                       {"output_dim", kOutputs},
                       {"encoding_levels", a.encoding_levels},
                       {"activation", activation_name(a.activation)}};
  j["seed"] = field.seed();
  j["provenance"] = {{"input_pair", field.provenance.input_pair}, {"stage", field.provenance.stage}};
  const auto& p = field.parameters();
  j["parameters"] = std::vector<double>(p.data(), p.data() + p.size());
  return j.dump(1);
}

void save_field(const DeviationField& field, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Checkpoint, "cannot write " + path.string());
  out << serialize_field(field) << '\n';
}

DeviationField deserialize_field(const std::string& text, const std::optional<FieldArchitecture>& expected) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Checkpoint, std::string("unreadable checkpoint: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw Error(ErrorKind::Checkpoint, "not a deviation-field checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw Error(ErrorKind::Checkpoint, "unsupported checkpoint version");
    const auto& ja = j.at("architecture");
    FieldArchitecture arch;
    arch.hidden_layers = ja.at("hidden_layers").get<int>();
    arch.hidden_width = ja.at("hidden_width").get<int>();
    arch.encoding_levels = ja.at("encoding_levels").get<int>();
    arch.activation = activation_from_name(ja.at("activation").get<std::string>());
    if (ja.at("output_dim").get<int>() != kOutputs || ja.at("input_dim").get<int>() != arch.input_dim())
      throw Error(ErrorKind::Checkpoint, "inconsistent architecture descriptor");
    if (expected && !(*expected == arch)) throw Error(ErrorKind::Checkpoint, "architecture mismatch");
    DeviationField field(arch, j.at("seed").get<std::uint64_t>());
    const auto params = j.at("parameters").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(params.size()) != field.parameter_count())
      throw Error(ErrorKind::Checkpoint, "parameter count does not match architecture");
    field.parameters() = Eigen::Map<const Eigen::VectorXd>(params.data(), field.parameter_count());
    field.provenance.input_pair = j.at("provenance").at("input_pair").get<std::string>();
    field.provenance.stage = j.at("provenance").at("stage").get<std::string>();
    return field;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Checkpoint, std::string("malformed checkpoint: ") + e.what());
  }
}

DeviationField load_field(const std::filesystem::path& path, const std::optional<FieldArchitecture>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Checkpoint, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize_field(buf.str(), expected);
}

}  // namespace sketchpersp
