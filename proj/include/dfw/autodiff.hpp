#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <vector>

namespace dfw {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Flattened model parameters. Layout is fixed by the model that produced it.
using ParamVector = Vector;
/// Layout-aligned with the ParamVector it differentiates.
using Gradient = Vector;

namespace ad {

/// Handle to a node recorded on a Tape.
struct Var {
  int id = -1;
};

/// Dynamic computation graph over dense matrices.
///
/// Nodes are evaluated eagerly while the graph is recorded, so values are
/// available to the caller as soon as a node exists (the optimizers need the
/// forward scores before they can pick a dual direction). The recorded graph
/// can then be replayed at a different parameter vector with forward(),
/// differentiated with backward() (reverse mode) or pushed forward along a
/// tangent with jvp().
///
/// Parameter slots are row-major views into the flat parameter vector.
/// Binary add broadcasts a 1 x C row or an R x 1 column operand.
class Tape {
 public:
  enum class Op {
    kParam,
    kConstant,
    kAdd,
    kMul,
    kScale,
    kMatmul,
    kRelu,
    kExp,
    kLog,
    kRowMax,
    kSelect,
    kSum,
    kRowSum,
  };

  explicit Tape(ParamVector w);

  Var param(Index offset, Index rows, Index cols);
  Var constant(Matrix value);

  Var add(Var a, Var b);
  /// Elementwise product; shapes must match exactly.
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var matmul(Var a, Var b);
  /// max(x, 0); derivative at 0 is 0.
  Var relu(Var a);
  Var exp(Var a);
  Var log(Var a);
  /// Per-row maximum, R x 1. Gradient goes to the lowest-index maximizer.
  Var row_max(Var a);
  /// Per-row gather a(i, index[i]), R x 1.
  Var select(Var a, std::vector<int> index);
  /// Sum of all entries, 1 x 1.
  Var sum(Var a);
  /// Per-row sum, R x 1.
  Var row_sum(Var a);

  Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

  const Matrix& value(Var v) const;
  double scalar(Var v) const;

  /// Replays every node at w and returns the output node's value.
  double forward(const ParamVector& w);
  /// Reverse sweep from a scalar node; the tape must have been evaluated at
  /// the parameters it currently holds.
  Gradient backward(Var output);
  /// Reverse sweep from any node, seeded with `seed` (same shape as the node).
  Gradient vjp(Var node, const Matrix& seed);
  /// Directional derivative of node `output` along `tangent`.
  Matrix jvp(Var output, const Vector& tangent) const;

  void set_output(Var v);
  Var output() const { return output_; }

  const ParamVector& params() const { return w_; }
  Index num_params() const { return w_.size(); }
  std::size_t size() const { return nodes_.size(); }
  /// Number of nodes visited by the most recent backward sweep.
  std::size_t last_visit_count() const { return visits_; }

 private:
  struct Node {
    explicit Node(Op kind) : op(kind) {}

    Op op;
    int a = -1;
    int b = -1;
    Index offset = 0;
    Index rows = 0;
    Index cols = 0;
    double factor = 0.0;
    std::vector<int> index;  // select targets, or cached argmax for row_max
    Matrix value;
  };

  Var push(Node node);
  void evaluate(Node& node);
  const Node& at(Var v) const;

  ParamVector w_;
  std::vector<Node> nodes_;
  Var output_{};
  std::size_t visits_ = 0;
};

/// Evaluates the tape's designated output at w.
double forward_eval(Tape& tape, const ParamVector& w);

/// Gradient of the tape's designated scalar output at w.
Gradient backward_grad(Tape& tape, const ParamVector& w);

/// Central differences, one coordinate at a time.
Gradient fd_gradient_oracle(const std::function<double(const ParamVector&)>& fn,
                            const ParamVector& w, double epsilon);

}  // namespace ad
}  // namespace dfw
