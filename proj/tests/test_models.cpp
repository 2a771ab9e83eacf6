#include "dfw/models.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace dfw;
using dfw::testing::vec;

TEST_CASE("parameter counts") {
  const ModelSpec linear{ModelKind::kLinear, 2, {}, 3};
  CHECK(linear.parameter_count() == 9);
  CHECK(init_params(linear, 0).size() == 9);

  const ModelSpec mlp{ModelKind::kMlp, 4, {8}, 3};
  CHECK(mlp.parameter_count() == 4 * 8 + 8 + 8 * 3 + 3);
  CHECK(mlp.parameter_count() == 67);
}

TEST_CASE("init_params is deterministic, bounded per layer, zero on biases") {
  const ModelSpec spec{ModelKind::kMlp, 4, {8, 5}, 3};
  const ParamVector a = init_params(spec, 42);
  const ParamVector b = init_params(spec, 42);
  CHECK((a.array() == b.array()).all());
  CHECK((a - init_params(spec, 43)).norm() > 0.0);

  const Model model(spec);
  const Vector mask = model.regularized_mask();
  // Layer 1: 4x8 weights then 8 biases.
  CHECK(a.segment(0, 32).cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 4));
  CHECK(a.segment(32, 8).isZero());
  CHECK(a.segment(40, 40).cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 8));
  CHECK(a.segment(80, 5).isZero());
  CHECK(mask.sum() == doctest::Approx(32 + 40 + 15));
  CHECK((a.array() * (1.0 - mask.array())).matrix().isZero());
}

TEST_CASE("scores of simple linear models") {
  const ModelSpec spec{ModelKind::kLinear, 2, {}, 2};
  const Model model(spec);
  ParamVector w = ParamVector::Zero(6);
  // Identity weights, zero bias.
  w(0) = 1.0;
  w(3) = 1.0;
  const ScoresResult r = scores(model, w, vec({1.0, 0.0}));
  CHECK(r.scores(0) == 1.0);
  CHECK(r.scores(1) == 0.0);

  const ScoresResult zero = scores(model, ParamVector::Zero(6), vec({3.0, -7.0}));
  CHECK(zero.scores.isZero());
}

TEST_CASE("the one-parameter margin model") {
  const testing::MarginModel model;
  const ScoresResult r = scores(model, vec({0.5}), vec({1.0}));
  CHECK(r.scores(0) == 0.5);
  CHECK(r.scores(1) == 0.0);
}

TEST_CASE("dimension mismatches are rejected") {
  const Model model(ModelSpec{ModelKind::kMlp, 3, {4}, 2});
  const ParamVector w = init_params(model.spec(), 0);
  CHECK_THROWS_AS(scores(model, w, vec({1.0, 2.0})), std::invalid_argument);
  CHECK_THROWS_AS(scores(model, ParamVector::Zero(w.size() - 1), vec({1.0, 2.0, 3.0})), std::invalid_argument);
  CHECK_THROWS_AS(Model(ModelSpec{ModelKind::kMlp, 3, {0}, 2}), std::invalid_argument);
}

TEST_CASE("bias-free linear scores are positively homogeneous in the input") {
  std::mt19937_64 gen(9);
  const ModelSpec spec{ModelKind::kLinear, 5, {}, 4};
  const Model model(spec);
  for (int trial = 0; trial < 50; ++trial) {
    ParamVector w = testing::random_vector(gen, spec.parameter_count());
    w.tail(4).setZero();
    const Vector x = testing::random_vector(gen, 5);
    const double c = std::abs(testing::random_vector(gen, 1)(0)) + 0.1;
    const Vector lhs = scores(model, w, c * x).scores;
    const Vector rhs = c * scores(model, w, x).scores;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + rhs.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("regularizer gradient excludes biases and matches the tape") {
  const ModelSpec spec{ModelKind::kMlp, 3, {4}, 2};
  const Model model(spec);
  std::mt19937_64 gen(1);
  const ParamVector w = testing::random_vector(gen, spec.parameter_count());
  ad::Tape tape(w);
  const Gradient on_tape = tape.backward(build_regularizer(tape, model, 0.3));
  const Gradient direct = regularizer_gradient(model, w, 0.3);
  CHECK((on_tape - direct).norm() == 0.0);
  CHECK(direct.segment(12, 4).isZero());
}
