#pragma once

#include "dfw/autodiff.hpp"
#include "dfw/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace dfw::testing {

/// f(w, x) = (w x, 0): one parameter, two classes.
class MarginModel final : public ScoreModel {
 public:
  Index parameter_count() const override { return 1; }
  int num_classes() const override { return 2; }
  int input_dim() const override { return 1; }
  ad::Var build_scores(ad::Tape& tape, const Matrix& features) const override {
    Matrix embed(1, 2);
    embed << 1.0, 0.0;
    const ad::Var wx = tape.matmul(tape.constant(features), tape.param(0, 1, 1));
    return tape.matmul(wx, tape.constant(embed));
  }
  Vector regularized_mask() const override { return Vector::Ones(1); }
};

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline Vector random_vector(std::mt19937_64& gen, Index n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(gen);
  return v;
}

inline Batch random_batch(std::mt19937_64& gen, Index n, int dim, int classes) {
  Batch b;
  b.features.resize(n, dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, classes - 1);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < dim; ++j) b.features(i, j) = normal(gen);
    b.labels.push_back(label(gen));
  }
  return b;
}

/// A random small MLP spec within the given limits.
inline ModelSpec random_mlp_spec(std::mt19937_64& gen, int max_dim, int max_hidden, int max_classes) {
  std::uniform_int_distribution<int> dim(1, max_dim);
  std::uniform_int_distribution<int> hidden(1, max_hidden);
  std::uniform_int_distribution<int> classes(2, max_classes);
  std::uniform_int_distribution<int> layers(1, 2);
  ModelSpec spec;
  spec.kind = ModelKind::kMlp;
  spec.input_dim = dim(gen);
  const int depth = layers(gen);
  for (int k = 0; k < depth; ++k) spec.hidden_dims.push_back(hidden(gen));
  spec.num_classes = classes(gen);
  return spec;
}

/// ||a - b||_inf / max(||b||_inf, 1e-12).
inline double max_rel_error(const Vector& a, const Vector& b) {
  return (a - b).lpNorm<Eigen::Infinity>() / std::max(b.lpNorm<Eigen::Infinity>(), 1e-12);
}

}  // namespace dfw::testing
