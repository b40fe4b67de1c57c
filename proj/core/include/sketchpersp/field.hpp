#pragma once

#include "sketchpersp/autodiff.hpp"
#include "sketchpersp/geom.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sketchpersp {

using FieldOutputs = Eigen::Matrix<double, 15, Eigen::Dynamic>;

/// Row-major 4x4 matrix over an arbitrary scalar (double or ad::Var).
template <class T>
using Mat4Of = std::array<T, 16>;

enum class Activation { Tanh, Softplus };

struct FieldArchitecture {
  int hidden_layers = 4;
  int hidden_width = 128;
  /// Number of sin/cos frequency bands appended to the input; 0 disables.
  int encoding_levels = 0;
  Activation activation = Activation::Tanh;

  int input_dim() const { return 3 + 6 * encoding_levels; }
  bool operator==(const FieldArchitecture&) const = default;
};

struct FieldProvenance {
  std::string input_pair;
  std::string stage;
};

/// Anything that assigns a deviation matrix to a point of object space.
class DeviationModel {
 public:
  virtual ~DeviationModel() = default;
  virtual DeviationMatrix at(const Vec3& point) const = 0;
};

/// A deviation given by a closed-form function; used for synthetic targets.
class FunctionDeviation final : public DeviationModel {
 public:
  explicit FunctionDeviation(std::function<Mat4(const Vec3&)> fn) : fn_(std::move(fn)) {}
  DeviationMatrix at(const Vec3& point) const override { return DeviationMatrix(fn_(point)); }

 private:
  std::function<Mat4(const Vec3&)> fn_;
};

/// Fully connected network from a 3D point to the 15 free entries of a
/// deviation matrix (row-major, entry (4,4) fixed to 1).
class DeviationField final : public DeviationModel {
 public:
  /// Glorot-uniform hidden layers; zero output weights and identity output
  /// bias, so the field is exactly the identity after construction.
  DeviationField(const FieldArchitecture& arch, std::uint64_t seed);

  DeviationMatrix eval(const Vec3& point) const;
  DeviationMatrix at(const Vec3& point) const override { return eval(point); }
  FieldOutputs eval_batch(const Eigen::Matrix3Xd& points) const;

  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activations of hidden layers
  };
  FieldOutputs forward(const Eigen::Matrix3Xd& points, Cache& cache) const;
  /// Accumulates d(loss)/d(parameters) into `grad` given d(loss)/d(outputs).
  void backward(const Cache& cache, const FieldOutputs& grad_outputs, Eigen::VectorXd& grad) const;

  const FieldArchitecture& architecture() const { return arch_; }
  std::uint64_t seed() const { return seed_; }
  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  Eigen::Index parameter_count() const { return params_.size(); }

  FieldProvenance provenance;

 private:
  struct Layer {
    Eigen::Index weight_offset;
    Eigen::Index bias_offset;
    int rows;
    int cols;
  };

  Eigen::MatrixXd encode(const Eigen::Matrix3Xd& points) const;
  Eigen::Map<const Eigen::MatrixXd> weights(const Layer& l) const;
  Eigen::Map<const Eigen::VectorXd> bias(const Layer& l) const;

  FieldArchitecture arch_;
  std::uint64_t seed_;
  std::vector<Layer> layers_;
  Eigen::VectorXd params_;
};

DeviationField init_field(const FieldArchitecture& arch, std::uint64_t seed);

/// Deviated projection of `point` into normalized image space.
Vec2 apply(const DeviationModel& model, const CameraRig& rig, const Vec3& point);

/// Records field evaluations as tape leaves so that a scalar built from them
/// can be differentiated with respect to the field parameters.
class GradientTape {
 public:
  explicit GradientTape(const DeviationField& field);
  ~GradientTape();
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  /// One matrix per column of `points`.
  std::vector<Mat4Of<ad::Var>> record(const Eigen::Matrix3Xd& points);
  /// Reverse sweep from `loss` through the tape and the network.
  Eigen::VectorXd gradient(const ad::Var& loss);

  ad::Tape& tape() { return tape_; }

 private:
  struct Batch {
    DeviationField::Cache cache;
    int first_leaf;
    Eigen::Index count;
  };

  const DeviationField& field_;
  ad::Tape tape_;
  ad::TapeScope scope_;
  std::vector<Batch> batches_;
};

void save_field(const DeviationField& field, const std::filesystem::path& path);
std::string serialize_field(const DeviationField& field);
/// Throws Checkpoint on truncated/corrupt files, unknown versions, or (when
/// `expected` is given) an architecture mismatch.
DeviationField load_field(const std::filesystem::path& path,
                          const std::optional<FieldArchitecture>& expected = std::nullopt);
DeviationField deserialize_field(const std::string& text,
                                 const std::optional<FieldArchitecture>& expected = std::nullopt);

}  // namespace sketchpersp
