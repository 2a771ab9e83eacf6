#include "dfw/autodiff.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace dfw::ad {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

// Broadcast `small` to the shape of `full`; `small` is same-shaped, 1 x C,
// R x 1 or 1 x 1.
Matrix broadcast(const Matrix& small, Index rows, Index cols) {
  if (small.rows() == rows && small.cols() == cols) return small;
  if (small.rows() == 1 && small.cols() == 1) return Matrix::Constant(rows, cols, small(0, 0));
  if (small.rows() == 1) return small.replicate(rows, 1);
  return small.replicate(1, cols);
}

// Adjoint of broadcast: sum the incoming adjoint back down to `rows x cols`.
Matrix reduce_to(const Matrix& grad, Index rows, Index cols) {
  if (grad.rows() == rows && grad.cols() == cols) return grad;
  if (rows == 1 && cols == 1) return Matrix::Constant(1, 1, grad.sum());
  if (rows == 1) return grad.colwise().sum();
  return grad.rowwise().sum();
}

bool broadcastable(const Matrix& full, const Matrix& small) {
  if (small.rows() == full.rows() && small.cols() == full.cols()) return true;
  if (small.rows() == 1 && small.cols() == 1) return true;
  if (small.rows() == 1 && small.cols() == full.cols()) return true;
  if (small.cols() == 1 && small.rows() == full.rows()) return true;
  return false;
}

}  // namespace

Tape::Tape(ParamVector w) : w_(std::move(w)) {}

const Tape::Node& Tape::at(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::out_of_range("tape: invalid node handle");
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

Var Tape::push(Node node) {
  evaluate(node);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::evaluate(Node& n) {
  auto in = [this](int id) -> const Matrix& { return nodes_[static_cast<std::size_t>(id)].value; };
  switch (n.op) {
    case Op::kParam:
      n.value = RowMajorMap(w_.data() + n.offset, n.rows, n.cols);
      break;
    case Op::kConstant:
      break;
    case Op::kAdd: {
      const Matrix& a = in(n.a);
      n.value = a + broadcast(in(n.b), a.rows(), a.cols());
      break;
    }
    case Op::kMul:
      n.value = in(n.a).cwiseProduct(in(n.b));
      break;
    case Op::kScale:
      n.value = n.factor * in(n.a);
      break;
    case Op::kMatmul:
      n.value.noalias() = in(n.a) * in(n.b);
      break;
    case Op::kRelu:
      n.value = in(n.a).cwiseMax(0.0);
      break;
    case Op::kExp:
      n.value = in(n.a).array().exp().matrix();
      break;
    case Op::kLog:
      n.value = in(n.a).array().log().matrix();
      break;
    case Op::kRowMax: {
      const Matrix& a = in(n.a);
      n.value.resize(a.rows(), 1);
      n.index.assign(static_cast<std::size_t>(a.rows()), 0);
      for (Index i = 0; i < a.rows(); ++i) {
        Index best = 0;
        for (Index j = 1; j < a.cols(); ++j) {
          if (a(i, j) > a(i, best)) best = j;
        }
        n.index[static_cast<std::size_t>(i)] = static_cast<int>(best);
        n.value(i, 0) = a(i, best);
      }
      break;
    }
    case Op::kSelect: {
      const Matrix& a = in(n.a);
      n.value.resize(a.rows(), 1);
      for (Index i = 0; i < a.rows(); ++i) n.value(i, 0) = a(i, n.index[static_cast<std::size_t>(i)]);
      break;
    }
    case Op::kSum:
      n.value = Matrix::Constant(1, 1, in(n.a).sum());
      break;
    case Op::kRowSum:
      n.value = in(n.a).rowwise().sum();
      break;
  }
}

Var Tape::param(Index offset, Index rows, Index cols) {
  if (offset < 0 || rows <= 0 || cols <= 0 || offset + rows * cols > w_.size()) {
    std::ostringstream os;
    os << "tape: parameter slot [" << offset << ", " << offset + rows * cols
       << ") outside parameter vector of length " << w_.size();
    throw std::invalid_argument(os.str());
  }
  Node n{Op::kParam};
  n.offset = offset;
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

Var Tape::constant(Matrix value) {
  Node n{Op::kConstant};
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  if (!broadcastable(va, vb)) {
    if (broadcastable(vb, va)) return add(b, a);
    throw std::invalid_argument("tape: add shape mismatch " + shape(va) + " vs " + shape(vb));
  }
  Node n{Op::kAdd};
  n.a = a.id;
  n.b = b.id;
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  if (va.rows() != vb.rows() || va.cols() != vb.cols()) {
    throw std::invalid_argument("tape: mul shape mismatch " + shape(va) + " vs " + shape(vb));
  }
  Node n{Op::kMul};
  n.a = a.id;
  n.b = b.id;
  return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
  at(a);
  Node n{Op::kScale};
  n.a = a.id;
  n.factor = factor;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  if (va.cols() != vb.rows()) {
    throw std::invalid_argument("tape: matmul shape mismatch " + shape(va) + " * " + shape(vb));
  }
  Node n{Op::kMatmul};
  n.a = a.id;
  n.b = b.id;
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  at(a);
  Node n{Op::kRelu};
  n.a = a.id;
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  at(a);
  Node n{Op::kExp};
  n.a = a.id;
  return push(std::move(n));
}

Var Tape::log(Var a) {
  at(a);
  Node n{Op::kLog};
  n.a = a.id;
  return push(std::move(n));
}

Var Tape::row_max(Var a) {
  if (at(a).value.cols() < 1) throw std::invalid_argument("tape: row_max of empty rows");
  Node n{Op::kRowMax};
  n.a = a.id;
  return push(std::move(n));
}

Var Tape::select(Var a, std::vector<int> index) {
  const Matrix& va = at(a).value;
  if (static_cast<Index>(index.size()) != va.rows()) {
    throw std::invalid_argument("tape: select needs one index per row");
  }
  for (int j : index) {
    if (j < 0 || j >= va.cols()) throw std::invalid_argument("tape: select index out of range");
  }
  Node n{Op::kSelect};
  n.a = a.id;
  n.index = std::move(index);
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  at(a);
  Node n{Op::kSum};
  n.a = a.id;
  return push(std::move(n));
}

Var Tape::row_sum(Var a) {
  at(a);
  Node n{Op::kRowSum};
  n.a = a.id;
  return push(std::move(n));
}

const Matrix& Tape::value(Var v) const { return at(v).value; }

double Tape::scalar(Var v) const {
  const Matrix& m = at(v).value;
  if (m.rows() != 1 || m.cols() != 1) {
    throw std::invalid_argument("tape: node is " + shape(m) + ", not a scalar");
  }
  return m(0, 0);
}

void Tape::set_output(Var v) {
  at(v);
  output_ = v;
}

double Tape::forward(const ParamVector& w) {
  if (w.size() != w_.size()) {
    std::ostringstream os;
    os << "tape: parameter vector has length " << w.size() << ", tape expects " << w_.size();
    throw std::invalid_argument(os.str());
  }
  w_ = w;
  for (Node& n : nodes_) evaluate(n);
  if (output_.id < 0) return 0.0;
  return scalar(output_);
}

Gradient Tape::backward(Var output) {
  const Node& out = at(output);
  if (out.value.rows() != 1 || out.value.cols() != 1) {
    throw std::invalid_argument("tape: backward needs a scalar output, got " + shape(out.value));
  }
  return vjp(output, Matrix::Ones(1, 1));
}

Gradient Tape::vjp(Var node, const Matrix& seed) {
  const Node& out = at(node);
  if (seed.rows() != out.value.rows() || seed.cols() != out.value.cols()) {
    throw std::invalid_argument("tape: seed is " + shape(seed) + ", node is " + shape(out.value));
  }
  Gradient grad = Gradient::Zero(w_.size());
  std::vector<Matrix> adj(nodes_.size());
  adj[static_cast<std::size_t>(node.id)] = seed;

  auto accumulate = [&](int id, const Matrix& g) {
    Matrix& slot = adj[static_cast<std::size_t>(id)];
    if (slot.size() == 0) {
      slot = g;
    } else {
      slot += g;
    }
  };

  visits_ = 0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    ++visits_;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    const Matrix& g = adj[static_cast<std::size_t>(i)];
    if (g.size() == 0) continue;
    auto in = [this](int id) -> const Matrix& { return nodes_[static_cast<std::size_t>(id)].value; };
    switch (n.op) {
      case Op::kParam:
        for (Index r = 0; r < n.rows; ++r) {
          for (Index c = 0; c < n.cols; ++c) grad(n.offset + r * n.cols + c) += g(r, c);
        }
        break;
      case Op::kConstant:
        break;
      case Op::kAdd: {
        const Matrix& b = in(n.b);
        accumulate(n.a, g);
        accumulate(n.b, reduce_to(g, b.rows(), b.cols()));
        break;
      }
      case Op::kMul:
        accumulate(n.a, g.cwiseProduct(in(n.b)));
        accumulate(n.b, g.cwiseProduct(in(n.a)));
        break;
      case Op::kScale:
        accumulate(n.a, n.factor * g);
        break;
      case Op::kMatmul:
        accumulate(n.a, g * in(n.b).transpose());
        accumulate(n.b, in(n.a).transpose() * g);
        break;
      case Op::kRelu: {
        const Matrix& a = in(n.a);
        accumulate(n.a, g.cwiseProduct((a.array() > 0.0).cast<double>().matrix()));
        break;
      }
      case Op::kExp:
        accumulate(n.a, g.cwiseProduct(n.value));
        break;
      case Op::kLog:
        accumulate(n.a, g.cwiseQuotient(in(n.a)));
        break;
      case Op::kRowMax:
      case Op::kSelect: {
        const Matrix& a = in(n.a);
        Matrix ga = Matrix::Zero(a.rows(), a.cols());
        for (Index r = 0; r < a.rows(); ++r) ga(r, n.index[static_cast<std::size_t>(r)]) = g(r, 0);
        accumulate(n.a, ga);
        break;
      }
      case Op::kSum: {
        const Matrix& a = in(n.a);
        accumulate(n.a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
        break;
      }
      case Op::kRowSum: {
        const Matrix& a = in(n.a);
        accumulate(n.a, g.replicate(1, a.cols()));
        break;
      }
    }
  }
  return grad;
}

Matrix Tape::jvp(Var output, const Vector& tangent) const {
  if (tangent.size() != w_.size()) {
    throw std::invalid_argument("tape: tangent length does not match parameter vector");
  }
  at(output);
  const auto last = static_cast<std::size_t>(output.id);
  std::vector<Matrix> dot(last + 1);
  for (std::size_t i = 0; i <= last; ++i) {
    const Node& n = nodes_[i];
    auto val = [this](int id) -> const Matrix& { return nodes_[static_cast<std::size_t>(id)].value; };
    auto tan = [&dot](int id) -> const Matrix& { return dot[static_cast<std::size_t>(id)]; };
    switch (n.op) {
      case Op::kParam:
        dot[i] = RowMajorMap(tangent.data() + n.offset, n.rows, n.cols);
        break;
      case Op::kConstant:
        dot[i] = Matrix::Zero(n.value.rows(), n.value.cols());
        break;
      case Op::kAdd:
        dot[i] = tan(n.a) + broadcast(tan(n.b), n.value.rows(), n.value.cols());
        break;
      case Op::kMul:
        dot[i] = tan(n.a).cwiseProduct(val(n.b)) + val(n.a).cwiseProduct(tan(n.b));
        break;
      case Op::kScale:
        dot[i] = n.factor * tan(n.a);
        break;
      case Op::kMatmul:
        dot[i] = tan(n.a) * val(n.b) + val(n.a) * tan(n.b);
        break;
      case Op::kRelu:
        dot[i] = tan(n.a).cwiseProduct((val(n.a).array() > 0.0).cast<double>().matrix());
        break;
      case Op::kExp:
        dot[i] = tan(n.a).cwiseProduct(n.value);
        break;
      case Op::kLog:
        dot[i] = tan(n.a).cwiseQuotient(val(n.a));
        break;
      case Op::kRowMax:
      case Op::kSelect: {
        const Matrix& ta = tan(n.a);
        dot[i].resize(ta.rows(), 1);
        for (Index r = 0; r < ta.rows(); ++r) dot[i](r, 0) = ta(r, n.index[static_cast<std::size_t>(r)]);
        break;
      }
      case Op::kSum:
        dot[i] = Matrix::Constant(1, 1, tan(n.a).sum());
        break;
      case Op::kRowSum:
        dot[i] = tan(n.a).rowwise().sum();
        break;
    }
  }
  return dot[last];
}

double forward_eval(Tape& tape, const ParamVector& w) {
  if (tape.output().id < 0) throw std::logic_error("tape: no output node designated");
  return tape.forward(w);
}

Gradient backward_grad(Tape& tape, const ParamVector& w) {
  if (tape.output().id < 0) throw std::logic_error("tape: no output node designated");
  if (w.size() != tape.num_params() || w != tape.params()) tape.forward(w);
  return tape.backward(tape.output());
}

Gradient fd_gradient_oracle(const std::function<double(const ParamVector&)>& fn,
                            const ParamVector& w, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("fd oracle: epsilon must be positive");
  Gradient g(w.size());
  ParamVector probe = w;
  for (Index i = 0; i < w.size(); ++i) {
    probe(i) = w(i) + epsilon;
    const double up = fn(probe);
    probe(i) = w(i) - epsilon;
    const double down = fn(probe);
    probe(i) = w(i);
    g(i) = (up - down) / (2.0 * epsilon);
  }
  return g;
}

}  // namespace dfw::ad
