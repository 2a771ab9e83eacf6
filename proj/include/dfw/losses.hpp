#pragma once

#include "dfw/autodiff.hpp"

#include <vector>

namespace dfw {

enum class LossKind { kSvm, kCrossEntropy };

/// How the dual search direction is chosen.
enum class DirectionMode {
  kConditional,  // argmax vertex of the augmented scores
  kSmoothed,     // softmax of the scores, switching back when it is not an ascent direction
};

/// Smoothed for |Y| >= 4, conditional otherwise.
DirectionMode default_direction_mode(int num_classes);

/// b = (s_ybar - s_y + task_loss(ybar, y))_ybar; entry y is exactly 0.
struct AugmentedScores {
  Vector values;
  int label = 0;
};

/// A point of the probability simplex over labels.
struct SimplexDirection {
  enum class Source { kConditional, kSoftmax };

  Vector weights;
  Source source = Source::kConditional;

  /// Nonnegative with unit mass within `tol`.
  bool feasible(double tol = 1e-12) const;
};

double task_loss(int ybar, int y);

double hinge_loss(const Vector& scores, int y);
double cross_entropy(const Vector& scores, int y);

AugmentedScores augmented_scores(const Vector& scores, int y);
SimplexDirection softmax_direction(const Vector& scores);
/// Indicator of argmax b, lowest index on ties.
SimplexDirection conditional_gradient_direction(const AugmentedScores& b);

/// Dual direction for one sample.
///
/// In smoothed mode the softmax of the raw scores is kept when its inner
/// product with b is positive (b stands in for the linearized augmented
/// scores), and the conditional-gradient vertex is returned otherwise.
SimplexDirection get_s(const AugmentedScores& b, const Vector& raw_scores, DirectionMode mode);

// Batched heads recorded on a tape. `scores` is a |B| x |Y| node.

/// Augmented scores of every row, |B| x |Y|.
ad::Var build_augmented_scores(ad::Tape& tape, ad::Var scores, const std::vector<int>& labels);
/// Mean multi-class hinge loss over rows.
ad::Var build_mean_hinge(ad::Tape& tape, ad::Var scores, const std::vector<int>& labels);
/// Mean cross-entropy over rows, max-shifted.
ad::Var build_mean_cross_entropy(ad::Tape& tape, ad::Var scores, const std::vector<int>& labels);
ad::Var build_mean_loss(ad::Tape& tape, ad::Var scores, const std::vector<int>& labels, LossKind loss);
/// (1/|B|) sum_i s_i^T b_i with the directions held constant.
ad::Var build_mean_direction_loss(ad::Tape& tape, ad::Var augmented, const Matrix& directions);

}  // namespace dfw
