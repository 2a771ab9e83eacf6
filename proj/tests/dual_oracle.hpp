#pragma once

// Reference solver for the dual of a linearized multi-class SVM proximal
// problem on a linear model, built from an explicit Jacobian. Shares no code
// with the Frank-Wolfe solver.

#include "dfw/models.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace dfw::testing {

struct LinearDualProblem {
  Matrix columns;  // P x (n*C): column (i, k) is grad of (f_k - f_{y_i}) / n
  Vector offsets;  // (n*C): (f_k - f_{y_i} + [k != y_i]) / n at w0
  Vector r;        // l2 * w0 on weight slots
  double eta = 1.0;
  Index classes = 0;
};

/// Linear model layout: d x C row-major weights, then C biases.
inline LinearDualProblem linear_dual_problem(const Matrix& x, const std::vector<int>& y, Index classes,
                                             const Vector& w0, double l2, double eta) {
  const Index n = x.rows();
  const Index d = x.cols();
  const Index p = d * classes + classes;
  LinearDualProblem prob;
  prob.columns = Matrix::Zero(p, n * classes);
  prob.offsets = Vector::Zero(n * classes);
  prob.r = Vector::Zero(p);
  prob.eta = eta;
  prob.classes = classes;
  for (Index j = 0; j < d * classes; ++j) prob.r(j) = l2 * w0(j);

  auto grad_score = [&](Index i, Index k) {
    Vector g = Vector::Zero(p);
    for (Index j = 0; j < d; ++j) g(j * classes + k) = x(i, j);
    g(d * classes + k) = 1.0;
    return g;
  };
  for (Index i = 0; i < n; ++i) {
    const Index yi = y[static_cast<std::size_t>(i)];
    const Vector gy = grad_score(i, yi);
    for (Index k = 0; k < classes; ++k) {
      const Vector gk = grad_score(i, k);
      prob.columns.col(i * classes + k) = (gk - gy) / static_cast<double>(n);
      prob.offsets(i * classes + k) =
          ((gk - gy).dot(w0) + (k == yi ? 0.0 : 1.0)) / static_cast<double>(n);
    }
  }
  return prob;
}

inline double linear_dual_value(const LinearDualProblem& prob, const Vector& alpha) {
  const Vector u = prob.r + prob.columns * alpha;
  return -0.5 * prob.eta * u.squaredNorm() + prob.offsets.dot(alpha);
}

/// Euclidean projection onto the probability simplex (sort-based).
inline Vector project_simplex(const Vector& v) {
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

/// Accelerated projected gradient ascent (FISTA with restart) on the dual.
inline double solve_linear_dual(const LinearDualProblem& prob, int iterations) {
  const Index m = prob.columns.cols();
  const Index n = m / prob.classes;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(prob.columns.transpose() * prob.columns, Eigen::EigenvaluesOnly);
  const double lipschitz = prob.eta * eig.eigenvalues().maxCoeff();
  const double step = 1.0 / lipschitz;

  auto project = [&](const Vector& v) {
    Vector out(m);
    for (Index i = 0; i < n; ++i) {
      out.segment(i * prob.classes, prob.classes) = project_simplex(v.segment(i * prob.classes, prob.classes));
    }
    return out;
  };
  auto gradient = [&](const Vector& a) {
    return Vector(-prob.eta * prob.columns.transpose() * (prob.r + prob.columns * a) + prob.offsets);
  };

  Vector alpha = Vector::Zero(m);
  for (Index i = 0; i < n; ++i) alpha(i * prob.classes) = 1.0;
  alpha = project(alpha);
  Vector momentum_point = alpha;
  double t = 1.0;
  double best = linear_dual_value(prob, alpha);
  for (int it = 0; it < iterations; ++it) {
    const Vector next = project(momentum_point + step * gradient(momentum_point));
    const double value = linear_dual_value(prob, next);
    if (value < best) {
      // Restart the momentum when the objective goes backwards.
      t = 1.0;
      momentum_point = alpha;
      continue;
    }
    best = value;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    momentum_point = next + ((t - 1.0) / t_next) * (next - alpha);
    alpha = next;
    t = t_next;
  }
  return best;
}

}  // namespace dfw::testing
