#include "scenes.hpp"

#include <sketchpersp/pipeline.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace sketchpersp;
using namespace sketchpersp::testing;

namespace {

std::vector<Vec2> random_points(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng));
  return pts;
}

void BM_Chamfer(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const auto a = random_points(n, 1);
  const auto b = random_points(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(chamfer_l1(a, b, 2.0));
  state.SetComplexityN(n);
}
BENCHMARK(BM_Chamfer)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_MatchCube(benchmark::State& state) {
  const auto rig = default_rig();
  const ContourOptions options;
  const auto analytic = render_contours(make_cube(), rig, options);
  const auto sketch = render_deviated(make_cube(), rig, x_scale_target(), options);
  std::vector<AnchoredPolyline> strokes;
  for (auto c : sketch.curves) {
    c.anchors.clear();
    strokes.push_back(c);
  }
  const StrokeSet set(strokes);
  MatchParams params;
  params.candidate_radius = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(match_curves(analytic.curves, set, params));
}
BENCHMARK(BM_MatchCube)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_FieldForwardBackward(benchmark::State& state) {
  const DeviationField field(FieldArchitecture{}, 1);
  const Eigen::Matrix3Xd pts = Eigen::Matrix3Xd::Random(3, state.range(0));
  const FieldOutputs seed = FieldOutputs::Ones(15, state.range(0));
  DeviationField::Cache cache;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(field.parameter_count());
  for (auto _ : state) {
    benchmark::DoNotOptimize(field.forward(pts, cache));
    field.backward(cache, seed, grad);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FieldForwardBackward)->Arg(256)->Arg(4096);

void BM_TrainingStep(benchmark::State& state) {
  const TrainConfig config;
  const auto mesh = std::make_shared<const TriangleMesh>(make_cube());
  const std::vector<TrainingPair> pairs = {synthetic_sketch_pair(mesh, default_rig(), x_scale_target(), config)};
  const LossProblem problem(pairs, config);
  const DeviationField field(config.architecture, 1);
  std::mt19937_64 rng(3);
  Eigen::VectorXd grad(field.parameter_count());
  for (auto _ : state) {
    const auto samples = problem.draw(rng);
    grad.setZero();
    benchmark::DoNotOptimize(problem.evaluate_with_gradient(field, samples, grad));
  }
}
BENCHMARK(BM_TrainingStep)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
