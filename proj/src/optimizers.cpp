#include "dfw/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dfw {

DFWState::DFWState(ParamVector w0, double eta_, double mu_, double l2_, DirectionMode mode_)
    : w(std::move(w0)), z(ParamVector::Zero(w.size())), eta(eta_), mu(mu_), l2(l2_), mode(mode_) {
  if (!(eta > 0.0)) throw std::invalid_argument("dfw: eta must be positive");
  if (mu < 0.0 || mu >= 1.0) throw std::invalid_argument("dfw: momentum must lie in [0, 1)");
  if (l2 < 0.0) throw std::invalid_argument("dfw: l2 must be nonnegative");
}

StepDiagnostics dfw_step(DFWState& state, const Batch& batch, const ScoreModel& model) {
  if (batch.size() == 0) throw std::invalid_argument("dfw: empty batch");
  const LinearizedStep step = conditional_gradient_primal(model, state.w, batch, state.l2, state.mode);
  const double gamma = single_step_gamma(step.r, step.delta, step.loss_term, state.eta);

  state.z = state.mu * state.z - (state.eta * gamma) * (step.r + step.delta);
  state.w = state.w - state.eta * (step.r + gamma * step.delta) + state.mu * state.z;
  ++state.step_count;

  StepDiagnostics diag;
  diag.gamma = gamma;
  diag.loss = step.hinge;
  diag.loss_term = step.loss_term;
  diag.switches = step.switches;
  diag.batch_size = batch.size();
  return diag;
}

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kDfw: return "dfw";
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kAdagrad: return "adagrad";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kAmsgrad: return "amsgrad";
  }
  return "unknown";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "dfw") return OptimizerKind::kDfw;
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adagrad") return OptimizerKind::kAdagrad;
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "amsgrad") return OptimizerKind::kAmsgrad;
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

double LrSchedule::multiplier(int epoch) const {
  double m = 1.0;
  for (const auto& [at, factor] : milestones) {
    if (epoch >= at) m *= factor;
  }
  return m;
}

LrSchedule LrSchedule::parse(const std::string& text) {
  LrSchedule schedule;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("lr schedule: expected epoch:multiplier, got '" + item + "'");
    try {
      std::size_t used = 0;
      const int epoch = std::stoi(item.substr(0, colon), &used);
      const std::string factor_text = item.substr(colon + 1);
      std::size_t used_factor = 0;
      const double factor = std::stod(factor_text, &used_factor);
      if (used_factor != factor_text.size() || epoch < 0 || !(factor > 0.0)) throw std::invalid_argument(item);
      schedule.milestones.emplace_back(epoch, factor);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("lr schedule: malformed entry '" + item + "'");
    }
  }
  std::sort(schedule.milestones.begin(), schedule.milestones.end());
  return schedule;
}

LrSchedule LrSchedule::desk_default(int epochs) {
  LrSchedule schedule;
  for (const double fraction : {0.3, 0.6, 0.9}) {
    schedule.milestones.emplace_back(static_cast<int>(std::lround(fraction * epochs)), 0.2);
  }
  return schedule;
}

BaselineState::BaselineState(OptimizerKind kind_, ParamVector w0, double lr_, double momentum_,
                             double l2_, LrSchedule schedule_)
    : kind(kind_), w(std::move(w0)), lr(lr_), momentum(momentum_), l2(l2_), schedule(std::move(schedule_)) {
  if (kind == OptimizerKind::kDfw) throw std::invalid_argument("baseline: dfw has its own state");
  if (!(lr > 0.0)) throw std::invalid_argument("baseline: learning rate must be positive");
  epsilon = kind == OptimizerKind::kAdagrad ? 1e-10 : 1e-8;
  const Index p = w.size();
  z = ParamVector::Zero(p);
  sum_sq = ParamVector::Zero(p);
  m = ParamVector::Zero(p);
  v = ParamVector::Zero(p);
  v_max = ParamVector::Zero(p);
}

std::pair<Gradient, double> objective_gradient(const ScoreModel& model, const ParamVector& w,
                                               const Batch& batch, double l2, LossKind loss) {
  if (batch.size() == 0) throw std::invalid_argument("optimizer: empty batch");
  ad::Tape tape(w);
  const ad::Var f = model.build_scores(tape, batch.features);
  const ad::Var mean_loss = build_mean_loss(tape, f, batch.labels, loss);
  const Gradient g = regularizer_gradient(model, w, l2) + tape.backward(mean_loss);
  return {g, tape.scalar(mean_loss)};
}

void apply_gradient(BaselineState& s, const Gradient& g) {
  if (g.size() != s.w.size()) throw std::invalid_argument("optimizer: gradient length mismatch");
  const double lr = s.current_lr();
  ++s.step_count;
  switch (s.kind) {
    case OptimizerKind::kSgd:
      s.z = s.momentum * s.z - lr * g;
      s.w = s.w - lr * g + s.momentum * s.z;
      break;
    case OptimizerKind::kAdagrad:
      s.sum_sq += g.cwiseAbs2();
      s.w -= (lr * g.array() / (s.sum_sq.array().sqrt() + s.epsilon)).matrix();
      break;
    case OptimizerKind::kAdam:
    case OptimizerKind::kAmsgrad: {
      const double t = static_cast<double>(s.step_count);
      s.m = s.beta1 * s.m + (1.0 - s.beta1) * g;
      s.v = s.beta2 * s.v + (1.0 - s.beta2) * g.cwiseAbs2();
      const double bias1 = 1.0 - std::pow(s.beta1, t);
      const double bias2 = 1.0 - std::pow(s.beta2, t);
      const ParamVector* second = &s.v;
      if (s.kind == OptimizerKind::kAmsgrad) {
        s.v_max = s.v_max.cwiseMax(s.v);
        second = &s.v_max;
      }
      const auto denom = (second->array() / bias2).sqrt() + s.epsilon;
      s.w -= (lr * (s.m.array() / bias1) / denom).matrix();
      break;
    }
    case OptimizerKind::kDfw:
      throw std::invalid_argument("baseline: dfw has its own step");
  }
}

double sgd_nesterov_step(BaselineState& state, const Batch& batch, const ScoreModel& model, LossKind loss) {
  if (state.kind != OptimizerKind::kSgd) throw std::invalid_argument("sgd step on a non-sgd state");
  const auto [g, value] = objective_gradient(model, state.w, batch, state.l2, loss);
  apply_gradient(state, g);
  return value;
}

double adaptive_baseline_step(BaselineState& state, const Batch& batch, const ScoreModel& model,
                              LossKind loss) {
  if (state.kind != OptimizerKind::kAdagrad && state.kind != OptimizerKind::kAdam &&
      state.kind != OptimizerKind::kAmsgrad) {
    throw std::invalid_argument("adaptive step needs adagrad, adam or amsgrad");
  }
  const auto [g, value] = objective_gradient(model, state.w, batch, state.l2, loss);
  apply_gradient(state, g);
  return value;
}

}  // namespace dfw
