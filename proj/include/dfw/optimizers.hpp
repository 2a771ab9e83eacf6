#pragma once

#include "dfw/losses.hpp"
#include "dfw/models.hpp"
#include "dfw/proximal.hpp"

#include <string>
#include <utility>
#include <vector>

namespace dfw {

/// Deep Frank-Wolfe training state. The velocity starts at zero.
struct DFWState {
  ParamVector w;
  ParamVector z;
  double eta = 0.1;
  double mu = 0.9;
  double l2 = 1e-4;
  DirectionMode mode = DirectionMode::kConditional;
  long step_count = 0;

  DFWState() = default;
  DFWState(ParamVector w0, double eta, double mu, double l2, DirectionMode mode);
};

struct StepDiagnostics {
  double gamma = 0.0;
  double loss = 0.0;       // mean hinge loss of the batch before the step
  double loss_term = 0.0;  // mean s^T b used by the step-size
  Index switches = 0;
  Index batch_size = 0;
};

/// One DFW iteration on a mini-batch:
/// directions from the forward pass, delta from one backward pass, the
/// closed-form step-size, then the velocity and parameter updates.
StepDiagnostics dfw_step(DFWState& state, const Batch& batch, const ScoreModel& model);

enum class OptimizerKind { kDfw, kSgd, kAdagrad, kAdam, kAmsgrad };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

/// Piecewise-constant learning-rate multipliers. Every milestone whose epoch
/// has been reached multiplies the base rate.
struct LrSchedule {
  std::vector<std::pair<int, double>> milestones;

  double multiplier(int epoch) const;
  /// "e1:m1,e2:m2"; empty text is the constant schedule.
  static LrSchedule parse(const std::string& text);
  /// Divide by 5 at 30%, 60% and 90% of the epochs.
  static LrSchedule desk_default(int epochs);
};

/// State of SGD with Nesterov momentum and of the adaptive baselines.
struct BaselineState {
  OptimizerKind kind = OptimizerKind::kSgd;
  ParamVector w;
  double lr = 0.1;
  double momentum = 0.9;
  double l2 = 1e-4;
  LrSchedule schedule;
  int epoch = 0;
  long step_count = 0;

  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  ParamVector z;       // sgd velocity
  ParamVector sum_sq;  // adagrad accumulator
  ParamVector m;       // adam first moment
  ParamVector v;       // adam second moment
  ParamVector v_max;   // amsgrad running max of v

  BaselineState() = default;
  /// Zeroed accumulators; epsilon defaults to 1e-10 for adagrad, 1e-8 otherwise.
  BaselineState(OptimizerKind kind, ParamVector w0, double lr, double momentum, double l2,
                LrSchedule schedule = {});

  double current_lr() const { return lr * schedule.multiplier(epoch); }
};

/// Gradient of rho + mean loss over the batch, and the mean loss itself.
std::pair<Gradient, double> objective_gradient(const ScoreModel& model, const ParamVector& w,
                                               const Batch& batch, double l2, LossKind loss);

/// Applies one update of `state.kind` for a precomputed gradient g.
void apply_gradient(BaselineState& state, const Gradient& g);

/// z <- mu z - lr g, w <- w - lr g + mu z.
double sgd_nesterov_step(BaselineState& state, const Batch& batch, const ScoreModel& model,
                         LossKind loss);

/// Adagrad, Adam or AMSGrad with their standard per-coordinate rules.
double adaptive_baseline_step(BaselineState& state, const Batch& batch, const ScoreModel& model,
                              LossKind loss);

}  // namespace dfw
