#pragma once

#include "dfw/autodiff.hpp"
#include "dfw/losses.hpp"
#include "dfw/models.hpp"

#include <vector>

namespace dfw {

/// Iterate of the dual Frank-Wolfe solve of one proximal problem.
///
/// The dual variable alpha is never stored: the primal displacement
/// wt - w0 = -A alpha and lambda = b^T alpha carry everything the solver
/// needs, and wt is only ever formed by convex interpolation.
struct ProximalState {
  ParamVector w0;
  ParamVector wt;
  double lambda = 0.0;
  double eta = 1.0;
};

/// Primal image of a dual direction s: ws = -A s, lambda_s = b^T s.
struct DualVertex {
  ParamVector ws;
  double lambda_s = 0.0;
};

/// -||wt - w0||^2 / (2 eta) + lambda.
double dual_objective(const ProximalState& state);

/// Exact maximizer of the dual along the segment towards `vertex`, before
/// clipping. Returns 0 when the segment is degenerate.
double unclipped_step_size(const ProximalState& state, const DualVertex& vertex);

/// unclipped_step_size clipped to [0, 1].
double optimal_step_size(const ProximalState& state, const DualVertex& vertex);

/// Closed-form step of a single proximal Frank-Wolfe iteration:
/// (-eta delta^T r + loss_term) / (eta ||delta||^2), clipped to [0, 1].
double single_step_gamma(const Gradient& r, const Gradient& delta, double loss_term, double eta);

/// Everything a single dual step needs, from one forward and one backward pass.
struct LinearizedStep {
  Gradient r;        // gradient of the regularizer
  Gradient delta;    // gradient of mean_i s_i^T b_i(w)
  double loss_term;  // mean_i s_i^T b_i(w)
  double hinge;      // mean hinge loss at w
  Matrix scores;     // |B| x |Y|
  Matrix directions; // one simplex point per row
  Index switches;    // smoothed-mode samples that fell back to the vertex
};

/// Dual conditional gradient of one proximal problem expressed in the
/// primal, i.e. r and delta such that -(r + delta) is the negative
/// (sub)gradient of rho + loss when s is the hinge argmax vertex.
LinearizedStep conditional_gradient_primal(const ScoreModel& model, const ParamVector& w,
                                           const Batch& batch, double l2, DirectionMode mode);

struct ProximalSolveOptions {
  double eta = 1.0;
  double l2 = 0.0;
  int max_iters = 100;
  double gap_tol = 1e-8;
  DirectionMode mode = DirectionMode::kConditional;
};

struct ProximalSolveResult {
  ParamVector w;
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Dual objective at initialization and after every iteration.
  std::vector<double> dual_objectives;
  std::vector<double> gammas;
  /// Frank-Wolfe gap certificate before every iteration, plus the final one.
  std::vector<double> gaps;
};

/// Primal-dual proximal Frank-Wolfe on
///   min_w ||w - w0||^2 / (2 eta) + T_w0 rho(w) + mean_i L_i(T_w0 f_i(w))
/// with L the multi-class hinge. The linearized scores are evaluated with
/// Jacobian-vector products against w - w0.
ProximalSolveResult proximal_fw_solve(const ScoreModel& model, const ParamVector& w0,
                                      const Batch& batch, const ProximalSolveOptions& options);

ProximalSolveResult proximal_fw_solve(const ScoreModel& model, const ParamVector& w0,
                                      const Sample& sample, const ProximalSolveOptions& options);

/// Primal value of the proximal problem at w, dropping the constant rho(w0).
double proximal_primal_objective(const ScoreModel& model, const ParamVector& w0,
                                 const Batch& batch, const ParamVector& w, double eta, double l2);

}  // namespace dfw
