#include "dfw/autodiff.hpp"
#include "dfw/losses.hpp"
#include "dfw/models.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dfw;
using dfw::testing::vec;

namespace {

// Tape for w1 * w2.
ad::Tape product_tape(const Vector& w) {
  ad::Tape tape(w);
  tape.set_output(tape.mul(tape.param(0, 1, 1), tape.param(1, 1, 1)));
  return tape;
}

ad::Tape logsumexp_tape(const Vector& w) {
  ad::Tape tape(w);
  const ad::Var e = tape.add(tape.exp(tape.param(0, 1, 1)), tape.exp(tape.param(1, 1, 1)));
  tape.set_output(tape.log(e));
  return tape;
}

}  // namespace

TEST_CASE("forward_eval on hand-checkable tapes") {
  ad::Tape prod = product_tape(vec({1.0, 1.0}));
  CHECK(ad::forward_eval(prod, vec({3.0, 4.0})) == doctest::Approx(12.0));

  ad::Tape relu(vec({1.0}));
  relu.set_output(relu.relu(relu.param(0, 1, 1)));
  CHECK(ad::forward_eval(relu, vec({-2.0})) == 0.0);

  ad::Tape lse = logsumexp_tape(vec({1.0, 1.0}));
  CHECK(ad::forward_eval(lse, vec({0.0, 0.0})) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("backward_grad on hand-checkable tapes") {
  ad::Tape prod = product_tape(vec({3.0, 4.0}));
  const Gradient g = ad::backward_grad(prod, vec({3.0, 4.0}));
  CHECK(g(0) == 4.0);
  CHECK(g(1) == 3.0);

  ad::Tape max_tape(vec({1.0, 2.0}));
  max_tape.set_output(max_tape.row_max(max_tape.param(0, 1, 2)));
  const Gradient gm = ad::backward_grad(max_tape, vec({1.0, 2.0}));
  CHECK(gm(0) == 0.0);
  CHECK(gm(1) == 1.0);

  ad::Tape lse = logsumexp_tape(vec({0.0, 0.0}));
  const Gradient gl = ad::backward_grad(lse, vec({0.0, 0.0}));
  CHECK(gl(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(gl(1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("subgradient tie-break goes to the lowest index, relu'(0) = 0") {
  ad::Tape max_tape(vec({1.0, 1.0, 1.0}));
  max_tape.set_output(max_tape.row_max(max_tape.param(0, 1, 3)));
  const Gradient g = ad::backward_grad(max_tape, vec({1.0, 1.0, 1.0}));
  CHECK(g(0) == 1.0);
  CHECK(g(1) == 0.0);
  CHECK(g(2) == 0.0);

  ad::Tape relu(vec({0.0}));
  relu.set_output(relu.relu(relu.param(0, 1, 1)));
  CHECK(ad::backward_grad(relu, vec({0.0}))(0) == 0.0);
}

TEST_CASE("fd_gradient_oracle on analytic functions") {
  auto square = [](const ParamVector& w) { return w(0) * w(0); };
  CHECK(std::abs(ad::fd_gradient_oracle(square, vec({3.0}), 1e-5)(0) - 6.0) < 1e-8);

  auto product = [](const ParamVector& w) { return w(0) * w(1); };
  const Gradient g = ad::fd_gradient_oracle(product, vec({3.0, 4.0}), 1e-5);
  CHECK(std::abs(g(0) - 4.0) < 1e-8);
  CHECK(std::abs(g(1) - 3.0) < 1e-8);

  CHECK_THROWS_AS(ad::fd_gradient_oracle(square, vec({3.0}), 0.0), std::invalid_argument);
}

TEST_CASE("dimension errors are rejected") {
  ad::Tape prod = product_tape(vec({3.0, 4.0}));
  CHECK_THROWS_AS(ad::forward_eval(prod, vec({1.0, 2.0, 3.0})), std::invalid_argument);

  ad::Tape tape(vec({1.0, 2.0}));
  CHECK_THROWS_AS(tape.param(1, 1, 2), std::invalid_argument);

  const ad::Var row = tape.param(0, 1, 2);
  tape.set_output(row);
  CHECK_THROWS_AS(ad::backward_grad(tape, vec({1.0, 2.0})), std::invalid_argument);
  CHECK_THROWS_AS(tape.matmul(row, row), std::invalid_argument);
}

TEST_CASE("MLP hinge objective matches finite differences on 20 seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    std::mt19937_64 gen(seed);
    const ModelSpec spec = testing::random_mlp_spec(gen, 6, 8, 5);
    const Model model(spec);
    const Batch batch = testing::random_batch(gen, 3, spec.input_dim, spec.num_classes);
    // Random biases too: zero biases with dead units produce exact hinge ties.
    const ParamVector w = testing::random_vector(gen, spec.parameter_count());

    auto objective = [&](const ParamVector& at) {
      ad::Tape tape(at);
      const ad::Var f = model.build_scores(tape, batch.features);
      const ad::Var total = tape.add(build_mean_hinge(tape, f, batch.labels), build_regularizer(tape, model, 0.1));
      return tape.scalar(total);
    };
    ad::Tape tape(w);
    const ad::Var f = model.build_scores(tape, batch.features);
    tape.set_output(tape.add(build_mean_hinge(tape, f, batch.labels), build_regularizer(tape, model, 0.1)));
    const Gradient exact = ad::backward_grad(tape, w);
    const Gradient approx = ad::fd_gradient_oracle(objective, w, 1e-5);
    CHECK(testing::max_rel_error(exact, approx) < 1e-6);
  }
}

TEST_CASE("reverse sweep visits every node once and is deterministic") {
  std::mt19937_64 gen(7);
  ModelSpec spec{ModelKind::kMlp, 5, {7, 4}, 3};
  const Model model(spec);
  const Batch batch = testing::random_batch(gen, 4, 5, 3);
  const ParamVector w = init_params(spec, 1);
  ad::Tape tape(w);
  tape.set_output(build_mean_cross_entropy(tape, model.build_scores(tape, batch.features), batch.labels));
  const Gradient first = ad::backward_grad(tape, w);
  CHECK(tape.last_visit_count() == tape.size());
  const Gradient second = ad::backward_grad(tape, w);
  CHECK((first.array() == second.array()).all());
}

TEST_CASE("replaying a tape at new parameters matches a fresh recording") {
  std::mt19937_64 gen(3);
  ModelSpec spec{ModelKind::kMlp, 4, {6}, 3};
  const Model model(spec);
  const Batch batch = testing::random_batch(gen, 5, 4, 3);
  const ParamVector w1 = init_params(spec, 1);
  const ParamVector w2 = init_params(spec, 2);

  ad::Tape replayed(w1);
  replayed.set_output(build_mean_hinge(replayed, model.build_scores(replayed, batch.features), batch.labels));
  const double value = ad::forward_eval(replayed, w2);
  const Gradient g = ad::backward_grad(replayed, w2);

  ad::Tape fresh(w2);
  fresh.set_output(build_mean_hinge(fresh, model.build_scores(fresh, batch.features), batch.labels));
  CHECK(value == fresh.scalar(fresh.output()));
  CHECK((g - ad::backward_grad(fresh, w2)).norm() == 0.0);
}

TEST_CASE("jvp agrees with a central difference of the node value") {
  std::mt19937_64 gen(11);
  ModelSpec spec{ModelKind::kMlp, 3, {5}, 4};
  const Model model(spec);
  const Batch batch = testing::random_batch(gen, 6, 3, 4);
  const ParamVector w = init_params(spec, 5);
  const Vector v = testing::random_vector(gen, w.size());

  ad::Tape tape(w);
  const ad::Var f = model.build_scores(tape, batch.features);
  const Matrix tangent = tape.jvp(f, v);

  const double eps = 1e-6;
  const Matrix up = batch_scores(model, w + eps * v, batch.features);
  const Matrix down = batch_scores(model, w - eps * v, batch.features);
  CHECK(((up - down) / (2 * eps) - tangent).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("vjp with a one-hot seed equals backward of the selected entry") {
  std::mt19937_64 gen(5);
  ModelSpec spec{ModelKind::kLinear, 3, {}, 3};
  const Model model(spec);
  const Batch batch = testing::random_batch(gen, 2, 3, 3);
  const ParamVector w = init_params(spec, 2);

  ad::Tape tape(w);
  const ad::Var f = model.build_scores(tape, batch.features);
  Matrix seed = Matrix::Zero(2, 3);
  seed(1, 2) = 1.0;
  const Gradient via_vjp = tape.vjp(f, seed);
  const Gradient via_sum = tape.backward(tape.sum(tape.mul(tape.constant(seed), f)));
  CHECK((via_vjp - via_sum).norm() == 0.0);
}
