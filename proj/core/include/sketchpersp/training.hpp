#pragma once

#include "sketchpersp/contour.hpp"
#include "sketchpersp/field.hpp"
#include "sketchpersp/losses.hpp"
#include "sketchpersp/matching.hpp"
#include "sketchpersp/mesh.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace sketchpersp {

struct LossWeights {
  double data = 0.001;
  double shape = 10.0;
  double slope = 1.0;
  double smooth = 1.0;
  double depth = 1e-5;
};

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
  LossWeights weights;
  MatchParams matching;
  ContourOptions contours;
  FieldArchitecture architecture;

  /// Kernel width of the smoothness term; defaults to matching.sigma1.
  std::optional<double> smooth_sigma;
  double data_epsilon = 1e-6;
  double shape_epsilon = 1e-6;
  int grid_resolution = 9;
  int smooth_pairs = 4096;  // sampled ordered pairs per iteration
  int depth_pairs = 1024;   // sampled anchor pairs per training pair and iteration

  double smoothness_sigma() const { return smooth_sigma.value_or(matching.sigma1); }

  Optimizer optimizer = Optimizer::Adam;
  double learning_rate = 1e-3;
  /// Cosine anneal within each stage, from learning_rate down to this
  /// fraction of it; 1 keeps the rate constant.
  double final_learning_rate_scale = 0.1;
  int initial_iterations = 2000;
  int augment_iterations = 1000;
  /// Synthetic pairs visited per iteration during augmentation; 0 means all.
  int synthetic_pairs_per_iteration = 4;
  bool freeze_samples = false;  // draw the stochastic samples once and reuse them
  bool augment_from_scratch = false;
  std::vector<double> stage1_degrees = {-5, -4, -3, -2, -1, 1, 2, 3, 4, 5};
  std::vector<double> stage2_degrees = {-10, -9, -8, -7, -6, -5, -4, -3, -2, -1,
                                        1,   2,  3,  4,  5,  6,  7,  8,  9,  10};
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainingPair {
  std::vector<AnchoredPolyline> contours;
  std::vector<AnchoredPolyline> strokes;
  CameraRig rig;
  MatchSet matches;
  std::string provenance = "input";
  bool synthetic = false;
  /// Needed only for self-augmentation.
  std::shared_ptr<const TriangleMesh> mesh;
};

/// Pair whose "strokes" are the given curves sample for sample (identity
/// correspondences, confidence 1). Samples with keep[c][i] unset stay unmatched.
TrainingPair correspondence_pair(std::vector<AnchoredPolyline> contours, std::vector<AnchoredPolyline> targets,
                                 const CameraRig& rig, const std::vector<std::vector<bool>>* keep = nullptr);

struct LossTerms {
  double data = 0.0;
  double shape = 0.0;
  double slope = 0.0;
  double smooth = 0.0;
  double depth = 0.0;
  double total = 0.0;
};

/// The total loss over a set of training pairs together with the
/// stochastic samples (smoothness pairs, depth pairs, synthetic-pair
/// minibatch) each evaluation uses.
class LossProblem {
 public:
  LossProblem(std::span<const TrainingPair> pairs, const TrainConfig& config);

  struct Samples {
    std::vector<std::pair<int, double>> pairs;  // pair index, weight
    std::vector<PairSample> depth;              // aligned with `pairs`
    Eigen::Matrix3Xd smooth_points;
    PairSample smooth_pairs;                    // indices into smooth_points
  };

  Samples draw(std::mt19937_64& rng) const;
  LossTerms evaluate(const DeviationField& field, const Samples& samples) const;
  LossTerms evaluate_with_gradient(const DeviationField& field, const Samples& samples,
                                   Eigen::VectorXd& gradient) const;

  const std::vector<PairGeometry>& geometry() const { return geometry_; }
  const SmoothnessSampleSet& smoothness_set() const { return smooth_; }
  const TrainConfig& config() const { return config_; }

 private:
  template <class T, class Eval>
  LossTerms compute(const Samples& samples, Eval&& eval, T* total) const;

  TrainConfig config_;
  std::vector<PairGeometry> geometry_;
  std::vector<Eigen::Matrix3Xd> anchors_;
  std::vector<bool> synthetic_;
  SmoothnessSampleSet smooth_;
};

struct LossRecord {
  int iteration = 0;
  std::string stage;
  LossTerms terms;
};

using LossHistory = std::vector<LossRecord>;

/// Runs `iterations` optimizer steps on the summed loss. On a non-finite loss
/// or gradient the field is restored to the last good parameters and an
/// Error(NumericalFailure) naming the iteration and term values is thrown.
LossHistory train(std::span<const TrainingPair> pairs, const TrainConfig& config, DeviationField& field,
                  int iterations, const std::string& stage);

/// Synthetic pairs for one augmentation stage: the base pair's shape rotated
/// about the vertical axis by each angle, analytic contours paired with
/// their regularized deviated renders. Angles without contours are skipped.
std::vector<TrainingPair> synthetic_pairs(const DeviationField& field, const TrainingPair& base,
                                          const TrainConfig& config, std::span<const double> degrees,
                                          std::vector<double>* skipped = nullptr);

/// Augmentation stages `first_stage`..`last_stage` (each 1 or 2) on top of
/// a trained field.
LossHistory self_augment(DeviationField& field, std::span<const TrainingPair> base_pairs,
                         const TrainConfig& config, int first_stage, int last_stage);

void write_loss_csv(const LossHistory& history, const std::filesystem::path& path);

}  // namespace sketchpersp
