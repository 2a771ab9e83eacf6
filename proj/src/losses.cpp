#include "dfw/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace dfw {

namespace {

void check_label(const Vector& scores, int y) {
  if (y < 0 || y >= scores.size()) throw std::invalid_argument("loss: label out of range");
}

Matrix task_loss_matrix(Index rows, Index cols, const std::vector<int>& labels) {
  Matrix delta = Matrix::Ones(rows, cols);
  for (Index i = 0; i < rows; ++i) delta(i, labels[static_cast<std::size_t>(i)]) = 0.0;
  return delta;
}

}  // namespace

DirectionMode default_direction_mode(int num_classes) {
  return num_classes >= 4 ? DirectionMode::kSmoothed : DirectionMode::kConditional;
}

bool SimplexDirection::feasible(double tol) const {
  if (weights.size() == 0) return false;
  if ((weights.array() < 0.0).any()) return false;
  return std::abs(weights.sum() - 1.0) <= tol;
}

double task_loss(int ybar, int y) { return ybar == y ? 0.0 : 1.0; }

double hinge_loss(const Vector& scores, int y) {
  check_label(scores, y);
  if (scores.size() < 2) throw std::invalid_argument("hinge: need at least two classes");
  // Entry y of the augmented scores is 0, which supplies the outer max with 0.
  return augmented_scores(scores, y).values.maxCoeff();
}

double cross_entropy(const Vector& scores, int y) {
  check_label(scores, y);
  const double shift = scores.maxCoeff();
  return std::log((scores.array() - shift).exp().sum()) + (shift - scores(y));
}

AugmentedScores augmented_scores(const Vector& scores, int y) {
  check_label(scores, y);
  AugmentedScores b{Vector(scores.size()), y};
  for (Index k = 0; k < scores.size(); ++k) {
    b.values(k) = k == y ? 0.0 : scores(k) - scores(y) + 1.0;
  }
  return b;
}

SimplexDirection softmax_direction(const Vector& scores) {
  if (scores.size() == 0) throw std::invalid_argument("softmax: empty scores");
  const Vector e = (scores.array() - scores.maxCoeff()).exp().matrix();
  return {e / e.sum(), SimplexDirection::Source::kSoftmax};
}

SimplexDirection conditional_gradient_direction(const AugmentedScores& b) {
  if (b.values.size() == 0) throw std::invalid_argument("direction: empty augmented scores");
  Index best = 0;
  for (Index k = 1; k < b.values.size(); ++k) {
    if (b.values(k) > b.values(best)) best = k;
  }
  SimplexDirection s{Vector::Zero(b.values.size()), SimplexDirection::Source::kConditional};
  s.weights(best) = 1.0;
  return s;
}

SimplexDirection get_s(const AugmentedScores& b, const Vector& raw_scores, DirectionMode mode) {
  if (mode == DirectionMode::kConditional) return conditional_gradient_direction(b);
  if (raw_scores.size() != b.values.size()) {
    throw std::invalid_argument("direction: scores and augmented scores differ in length");
  }
  SimplexDirection smooth = softmax_direction(raw_scores);
  if (smooth.weights.dot(b.values) > 0.0) return smooth;
  return conditional_gradient_direction(b);
}

ad::Var build_augmented_scores(ad::Tape& tape, ad::Var scores, const std::vector<int>& labels) {
  const Matrix& f = tape.value(scores);
  const ad::Var true_score = tape.select(scores, labels);
  const ad::Var margin = tape.sub(scores, true_score);
  return tape.add(margin, tape.constant(task_loss_matrix(f.rows(), f.cols(), labels)));
}

ad::Var build_mean_hinge(ad::Tape& tape, ad::Var scores, const std::vector<int>& labels) {
  const Index n = tape.value(scores).rows();
  const ad::Var b = build_augmented_scores(tape, scores, labels);
  return tape.scale(tape.sum(tape.row_max(b)), 1.0 / static_cast<double>(n));
}

ad::Var build_mean_cross_entropy(ad::Tape& tape, ad::Var scores, const std::vector<int>& labels) {
  const Matrix& f = tape.value(scores);
  const Index n = f.rows();
  // The shift is a constant, so the gradient is exactly softmax - onehot.
  const Matrix shift = f.rowwise().maxCoeff();
  const ad::Var shifted = tape.sub(scores, tape.constant(shift));
  const ad::Var lse = tape.log(tape.row_sum(tape.exp(shifted)));
  const ad::Var per_sample = tape.sub(lse, tape.select(shifted, labels));
  return tape.scale(tape.sum(per_sample), 1.0 / static_cast<double>(n));
}

ad::Var build_mean_loss(ad::Tape& tape, ad::Var scores, const std::vector<int>& labels, LossKind loss) {
  return loss == LossKind::kSvm ? build_mean_hinge(tape, scores, labels)
                                : build_mean_cross_entropy(tape, scores, labels);
}

ad::Var build_mean_direction_loss(ad::Tape& tape, ad::Var augmented, const Matrix& directions) {
  const Index n = tape.value(augmented).rows();
  const ad::Var weighted = tape.mul(tape.constant(directions), augmented);
  return tape.scale(tape.sum(weighted), 1.0 / static_cast<double>(n));
}

}  // namespace dfw
