#include "scenes.hpp"

#include "sketchpersp/error.hpp"
#include "sketchpersp/field.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace sketchpersp;
using namespace sketchpersp::testing;

TEST(Field, StartsAtIdentity) {
  const DeviationField field(tiny_architecture(), 17);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 20; ++k) {
    const auto d = field.eval(Vec3(u(rng), u(rng), u(rng)));
    EXPECT_EQ(d.matrix(), Mat4::Identity());
  }
}

TEST(Field, SameSeedSameParameters) {
  const DeviationField a(tiny_architecture(), 5);
  const DeviationField b(tiny_architecture(), 5);
  const DeviationField c(tiny_architecture(), 6);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_NE(a.parameters(), c.parameters());
}

TEST(Field, BatchAgreesWithSinglePoint) {
  DeviationField field(tiny_architecture(), 2);
  perturb(field, 0.1, 2);
  Eigen::Matrix3Xd pts(3, 4);
  pts << 0.1, -0.5, 0.9, 0.0, 0.2, 0.3, -0.7, 0.0, -0.4, 0.8, 0.1, 0.0;
  const auto batch = field.eval_batch(pts);
  for (int c = 0; c < 4; ++c) {
    const auto d = field.eval(pts.col(c));
    for (int k = 0; k < 15; ++k) EXPECT_NEAR(batch(k, c), d(k / 4, k % 4), 1e-14);
  }
}

TEST(Field, BackwardMatchesCentralDifferences) {
  for (Activation act : {Activation::Tanh, Activation::Softplus}) {
    auto arch = tiny_architecture();
    arch.activation = act;
    arch.encoding_levels = 2;
    DeviationField field(arch, 4);
    perturb(field, 0.1, 4);
    Eigen::Matrix3Xd pts = Eigen::Matrix3Xd::Random(3, 5);
    FieldOutputs weights = FieldOutputs::Random(15, 5);
    DeviationField::Cache cache;
    field.forward(pts, cache);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(field.parameter_count());
    field.backward(cache, weights, grad);
    auto objective = [&](const DeviationField& f) { return (f.eval_batch(pts).array() * weights.array()).sum(); };
    DeviationField probe = field;
    for (Eigen::Index i = 0; i < field.parameter_count(); i += 7) {
      const double x = field.parameters()[i];
      probe.parameters()[i] = x + 1e-5;
      const double up = objective(probe);
      probe.parameters()[i] = x - 1e-5;
      const double down = objective(probe);
      probe.parameters()[i] = x;
      EXPECT_NEAR(grad[i], (up - down) / 2e-5, 1e-6 * std::max(1.0, std::abs(grad[i])));
    }
  }
}

TEST(Field, CheckpointRoundTripIsExact) {
  DeviationField field(tiny_architecture(), 8);
  perturb(field, 0.1, 8);
  field.provenance = {"input", "aug1"};
  const auto path = std::filesystem::temp_directory_path() / "sketchpersp_field_roundtrip.json";
  save_field(field, path);
  const auto back = load_field(path, tiny_architecture());
  EXPECT_EQ(back.parameters(), field.parameters());
  EXPECT_EQ(back.architecture(), field.architecture());
  EXPECT_EQ(back.provenance.stage, "aug1");
  EXPECT_EQ(serialize_field(back), serialize_field(field));
  std::filesystem::remove(path);
}

TEST(Field, CorruptCheckpointsAreRejected) {
  DeviationField field(tiny_architecture(), 8);
  const std::string text = serialize_field(field);
  auto expect_checkpoint_error = [](const std::string& t, const std::optional<FieldArchitecture>& arch) {
    try {
      deserialize_field(t, arch);
      FAIL() << "accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Checkpoint);
    }
  };
  expect_checkpoint_error(text.substr(0, text.size() / 2), std::nullopt);
  expect_checkpoint_error("{}", std::nullopt);
  auto other = tiny_architecture();
  other.hidden_width = 9;
  expect_checkpoint_error(text, other);
  EXPECT_THROW(load_field("/nonexistent/field.json"), Error);
}

TEST(Field, GradientTapeMatchesBackward) {
  DeviationField field(tiny_architecture(), 3);
  perturb(field, 0.1, 3);
  Eigen::Matrix3Xd pts = Eigen::Matrix3Xd::Random(3, 3);
  Eigen::VectorXd via_tape;
  {
    GradientTape tape(field);
    const auto m = tape.record(pts);
    ad::Var loss = 0.0;
    for (const auto& d : m) loss = loss + d[0] * d[5] + d[14];
    via_tape = tape.gradient(loss);
  }
  FieldOutputs values = field.eval_batch(pts);
  FieldOutputs seed = FieldOutputs::Zero(15, 3);
  for (int c = 0; c < 3; ++c) {
    seed(0, c) = values(5, c);
    seed(5, c) = values(0, c);
    seed(14, c) = 1.0;
  }
  DeviationField::Cache cache;
  field.forward(pts, cache);
  Eigen::VectorXd direct = Eigen::VectorXd::Zero(field.parameter_count());
  field.backward(cache, seed, direct);
  EXPECT_LE((via_tape - direct).norm(), 1e-12 * std::max(1.0, direct.norm()));
}

TEST(Autodiff, ElementaryDerivatives) {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  const ad::Var x = ad::Var::variable(0.7);
  const ad::Var y = ad::Var::variable(-1.3);
  const ad::Var f = ad::exp(x) * y + ad::log(x) / y - ad::abs(y) + ad::safe_sqrt(x) + ad::square(y);
  tape.backward(f.id());
  EXPECT_NEAR(tape.adjoint(x.id()), std::exp(0.7) * -1.3 + 1.0 / (0.7 * -1.3) + 0.5 / std::sqrt(0.7), 1e-12);
  EXPECT_NEAR(tape.adjoint(y.id()), std::exp(0.7) - std::log(0.7) / (1.3 * 1.3) + 1.0 + 2.0 * -1.3, 1e-12);
}
