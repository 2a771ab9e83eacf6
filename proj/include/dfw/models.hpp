#pragma once

#include "dfw/autodiff.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace dfw {

enum class ModelKind { kLinear, kMlp };

struct ModelSpec {
  ModelKind kind = ModelKind::kLinear;
  int input_dim = 1;
  std::vector<int> hidden_dims;  // ignored for linear models
  int num_classes = 2;

  /// Number of parameters; also the length `scores` accepts.
  Index parameter_count() const;
  void validate() const;
};

struct Sample {
  Vector features;
  int label = 0;
};

/// A mini-batch laid out as one sample per row.
struct Batch {
  Matrix features;
  std::vector<int> labels;

  Index size() const { return features.rows(); }
};

Batch make_batch(const std::vector<Sample>& samples);

/// A parameterized score function f(w, x) in R^|Y|.
///
/// Implementations record the batched scores on a tape so that any scalar
/// functional of them can be differentiated with respect to w.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual Index parameter_count() const = 0;
  virtual int num_classes() const = 0;
  virtual int input_dim() const = 0;

  /// Records f(w, X) on `tape` and returns the |B| x |Y| score node.
  virtual ad::Var build_scores(ad::Tape& tape, const Matrix& features) const = 0;

  /// 1 for slots penalized by the l2 regularizer, 0 otherwise (biases).
  virtual Vector regularized_mask() const = 0;
};

/// Linear or relu-MLP model described by a ModelSpec.
///
/// Layer k stores a fan_in x fan_out weight matrix (row-major) followed by a
/// fan_out bias.
class Model final : public ScoreModel {
 public:
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }

  Index parameter_count() const override { return spec_.parameter_count(); }
  int num_classes() const override { return spec_.num_classes; }
  int input_dim() const override { return spec_.input_dim; }
  ad::Var build_scores(ad::Tape& tape, const Matrix& features) const override;
  Vector regularized_mask() const override;

  /// Layer widths including input and output.
  std::vector<int> widths() const;

 private:
  ModelSpec spec_;
};

/// Uniform in +-sqrt(1/fan_in) for weights, zero biases.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

struct ScoresResult {
  Vector scores;
  ad::Tape tape;
  ad::Var node;
};

/// Scores of a single input plus the tape that produced them.
ScoresResult scores(const ScoreModel& model, const ParamVector& w, const Vector& features);

/// Scores of every row of `features` (no tape kept).
Matrix batch_scores(const ScoreModel& model, const ParamVector& w, const Matrix& features);

/// rho(w) = l2/2 ||w||^2 over regularized slots, recorded on the tape.
ad::Var build_regularizer(ad::Tape& tape, const ScoreModel& model, double l2);

/// Gradient of rho: l2 * w on regularized slots, zero on biases.
Gradient regularizer_gradient(const ScoreModel& model, const ParamVector& w, double l2);

}  // namespace dfw
