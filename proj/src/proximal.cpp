#include "dfw/proximal.hpp"

#include <algorithm>
#include <stdexcept>

namespace dfw {

namespace {

// Denominators below this are treated as a degenerate segment.
constexpr double kDegenerate = 1e-24;

void check_eta(double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("proximal: eta must be positive");
}

void check_batch(const ScoreModel& model, const Batch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("proximal: empty batch");
  if (static_cast<Index>(batch.labels.size()) != batch.size()) {
    throw std::invalid_argument("proximal: one label per sample required");
  }
  for (int y : batch.labels) {
    if (y < 0 || y >= model.num_classes()) throw std::invalid_argument("proximal: label out of range");
  }
}

Matrix vertex_directions(const Matrix& augmented) {
  Matrix s = Matrix::Zero(augmented.rows(), augmented.cols());
  for (Index i = 0; i < augmented.rows(); ++i) {
    Index best = 0;
    for (Index k = 1; k < augmented.cols(); ++k) {
      if (augmented(i, k) > augmented(i, best)) best = k;
    }
    s(i, best) = 1.0;
  }
  return s;
}

// Per-sample get_s over a batch; returns the number of smoothed-mode switches.
Index choose_directions(const Matrix& augmented, const Matrix& raw_scores,
                        const std::vector<int>& labels, DirectionMode mode, Matrix& out) {
  out.resize(augmented.rows(), augmented.cols());
  Index switches = 0;
  for (Index i = 0; i < augmented.rows(); ++i) {
    const AugmentedScores b{augmented.row(i).transpose(), labels[static_cast<std::size_t>(i)]};
    const SimplexDirection s = get_s(b, raw_scores.row(i).transpose(), mode);
    if (mode == DirectionMode::kSmoothed && s.source == SimplexDirection::Source::kConditional) {
      ++switches;
    }
    out.row(i) = s.weights.transpose();
  }
  return switches;
}

double mean_inner(const Matrix& directions, const Matrix& augmented) {
  return directions.cwiseProduct(augmented).sum() / static_cast<double>(augmented.rows());
}

}  // namespace

double dual_objective(const ProximalState& state) {
  check_eta(state.eta);
  if (state.wt.size() != state.w0.size()) throw std::invalid_argument("proximal: w0/wt size mismatch");
  return -(state.wt - state.w0).squaredNorm() / (2.0 * state.eta) + state.lambda;
}

double unclipped_step_size(const ProximalState& state, const DualVertex& vertex) {
  check_eta(state.eta);
  const Vector disp = state.wt - state.w0;
  const Vector chord = disp - vertex.ws;
  const double denom = chord.squaredNorm();
  if (denom < kDegenerate) return 0.0;
  return (chord.dot(disp) + state.eta * (vertex.lambda_s - state.lambda)) / denom;
}

double optimal_step_size(const ProximalState& state, const DualVertex& vertex) {
  return std::clamp(unclipped_step_size(state, vertex), 0.0, 1.0);
}

double single_step_gamma(const Gradient& r, const Gradient& delta, double loss_term, double eta) {
  check_eta(eta);
  const double sq = delta.squaredNorm();
  if (sq < kDegenerate) return 0.0;
  const double gamma = (-eta * delta.dot(r) + loss_term) / (eta * sq);
  return std::clamp(gamma, 0.0, 1.0);
}

LinearizedStep conditional_gradient_primal(const ScoreModel& model, const ParamVector& w,
                                           const Batch& batch, double l2, DirectionMode mode) {
  check_batch(model, batch);
  ad::Tape tape(w);
  const ad::Var f = model.build_scores(tape, batch.features);
  const ad::Var b = build_augmented_scores(tape, f, batch.labels);

  LinearizedStep step;
  step.scores = tape.value(f);
  const Matrix& augmented = tape.value(b);
  step.switches = choose_directions(augmented, step.scores, batch.labels, mode, step.directions);
  step.hinge = augmented.rowwise().maxCoeff().mean();

  const ad::Var loss = build_mean_direction_loss(tape, b, step.directions);
  step.loss_term = tape.scalar(loss);
  step.delta = tape.backward(loss);
  step.r = regularizer_gradient(model, w, l2);
  return step;
}

ProximalSolveResult proximal_fw_solve(const ScoreModel& model, const ParamVector& w0,
                                      const Batch& batch, const ProximalSolveOptions& options) {
  check_eta(options.eta);
  if (options.max_iters < 0) throw std::invalid_argument("proximal: max_iters must be nonnegative");
  if (w0.size() != model.parameter_count()) {
    throw std::invalid_argument("proximal: w0 length does not match the model");
  }
  check_batch(model, batch);
  const double eta = options.eta;
  const double n = static_cast<double>(batch.size());

  // Everything linearized around w0 is read off this one tape.
  ad::Tape tape(w0);
  const ad::Var f = model.build_scores(tape, batch.features);
  const ad::Var b = build_augmented_scores(tape, f, batch.labels);
  const Matrix scores0 = tape.value(f);
  const Matrix augmented0 = tape.value(b);
  const Gradient r = regularizer_gradient(model, w0, options.l2);

  // Primal image of a batch of directions: ws = -eta (r + delta_S).
  auto vertex_of = [&](const Matrix& s) {
    return DualVertex{-eta * (r + tape.vjp(b, s / n)), mean_inner(s, augmented0)};
  };

  // alpha = 1_y for every sample.
  ProximalState state{w0, w0 - eta * r, 0.0, eta};
  ProximalSolveResult result;
  result.dual_objectives.push_back(dual_objective(state));

  Matrix directions;
  for (int t = 0; t < options.max_iters; ++t) {
    const Vector disp = state.wt - state.w0;
    const Matrix augmented = augmented0 + tape.jvp(b, disp);

    const Matrix corner = vertex_directions(augmented);
    const DualVertex cg = vertex_of(corner);
    const double gap = (disp - cg.ws).dot(disp) / eta + cg.lambda_s - state.lambda;
    result.gaps.push_back(gap);
    if (gap <= options.gap_tol) {
      result.converged = true;
      break;
    }

    DualVertex vertex = cg;
    if (options.mode == DirectionMode::kSmoothed) {
      const Matrix linearized = scores0 + tape.jvp(f, disp);
      choose_directions(augmented, linearized, batch.labels, options.mode, directions);
      vertex = vertex_of(directions);
    }

    double gamma = optimal_step_size(state, vertex);
    if (gamma == 0.0 && options.mode == DirectionMode::kSmoothed) {
      // The smoothed point made no progress; the vertex always does while gap > 0.
      vertex = cg;
      gamma = optimal_step_size(state, vertex);
    }
    state.wt = (1.0 - gamma) * state.wt + gamma * (vertex.ws + state.w0);
    state.lambda = (1.0 - gamma) * state.lambda + gamma * vertex.lambda_s;
    result.gammas.push_back(gamma);
    result.dual_objectives.push_back(dual_objective(state));
    ++result.iterations;
  }

  if (!result.converged) {
    const Vector disp = state.wt - state.w0;
    const DualVertex cg = vertex_of(vertex_directions(augmented0 + tape.jvp(b, disp)));
    const double gap = (disp - cg.ws).dot(disp) / eta + cg.lambda_s - state.lambda;
    result.gaps.push_back(gap);
    result.converged = gap <= options.gap_tol;
  }
  result.w = state.wt;
  result.lambda = state.lambda;
  return result;
}

ProximalSolveResult proximal_fw_solve(const ScoreModel& model, const ParamVector& w0,
                                      const Sample& sample, const ProximalSolveOptions& options) {
  return proximal_fw_solve(model, w0, make_batch({sample}), options);
}

double proximal_primal_objective(const ScoreModel& model, const ParamVector& w0,
                                 const Batch& batch, const ParamVector& w, double eta, double l2) {
  check_eta(eta);
  check_batch(model, batch);
  ad::Tape tape(w0);
  const ad::Var f = model.build_scores(tape, batch.features);
  const ad::Var b = build_augmented_scores(tape, f, batch.labels);
  const Vector disp = w - w0;
  const Matrix augmented = tape.value(b) + tape.jvp(b, disp);
  const Gradient r = regularizer_gradient(model, w0, l2);
  return disp.squaredNorm() / (2.0 * eta) + r.dot(disp) + augmented.rowwise().maxCoeff().mean();
}

}  // namespace dfw
