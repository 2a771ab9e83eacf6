#include "dfw/models.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace dfw {

void ModelSpec::validate() const {
  if (input_dim < 1) throw std::invalid_argument("model: input_dim must be positive");
  if (num_classes < 1) throw std::invalid_argument("model: num_classes must be positive");
  if (kind == ModelKind::kMlp) {
    for (int h : hidden_dims) {
      if (h < 1) throw std::invalid_argument("model: hidden widths must be positive");
    }
  }
}

Index ModelSpec::parameter_count() const {
  validate();
  Index p = 0;
  Index fan_in = input_dim;
  if (kind == ModelKind::kMlp) {
    for (int h : hidden_dims) {
      p += fan_in * h + h;
      fan_in = h;
    }
  }
  return p + fan_in * num_classes + num_classes;
}

Batch make_batch(const std::vector<Sample>& samples) {
  if (samples.empty()) return {};
  const Index d = samples.front().features.size();
  Batch batch;
  batch.features.resize(static_cast<Index>(samples.size()), d);
  batch.labels.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].features.size() != d) throw std::invalid_argument("batch: ragged feature rows");
    batch.features.row(static_cast<Index>(i)) = samples[i].features.transpose();
    batch.labels.push_back(samples[i].label);
  }
  return batch;
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

std::vector<int> Model::widths() const {
  std::vector<int> w{spec_.input_dim};
  if (spec_.kind == ModelKind::kMlp) w.insert(w.end(), spec_.hidden_dims.begin(), spec_.hidden_dims.end());
  w.push_back(spec_.num_classes);
  return w;
}

ad::Var Model::build_scores(ad::Tape& tape, const Matrix& features) const {
  if (features.cols() != spec_.input_dim) {
    std::ostringstream os;
    os << "model: input has " << features.cols() << " features, model expects " << spec_.input_dim;
    throw std::invalid_argument(os.str());
  }
  if (tape.num_params() != parameter_count()) {
    std::ostringstream os;
    os << "model: parameter vector has length " << tape.num_params() << ", model expects "
       << parameter_count();
    throw std::invalid_argument(os.str());
  }
  const std::vector<int> w = widths();
  ad::Var h = tape.constant(features);
  Index offset = 0;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    const ad::Var weight = tape.param(offset, w[k], w[k + 1]);
    offset += static_cast<Index>(w[k]) * w[k + 1];
    const ad::Var bias = tape.param(offset, 1, w[k + 1]);
    offset += w[k + 1];
    h = tape.add(tape.matmul(h, weight), bias);
    if (k + 2 < w.size()) h = tape.relu(h);
  }
  return h;
}

Vector Model::regularized_mask() const {
  Vector mask = Vector::Zero(parameter_count());
  const std::vector<int> w = widths();
  Index offset = 0;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    const Index n = static_cast<Index>(w[k]) * w[k + 1];
    mask.segment(offset, n).setOnes();
    offset += n + w[k + 1];
  }
  return mask;
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  const Model model(spec);
  ParamVector w = ParamVector::Zero(model.parameter_count());
  std::mt19937_64 gen(seed);
  const std::vector<int> widths = model.widths();
  Index offset = 0;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const double bound = std::sqrt(1.0 / widths[k]);
    std::uniform_real_distribution<double> dist(-bound, bound);
    const Index n = static_cast<Index>(widths[k]) * widths[k + 1];
    for (Index i = 0; i < n; ++i) w(offset + i) = dist(gen);
    offset += n + widths[k + 1];
  }
  return w;
}

ScoresResult scores(const ScoreModel& model, const ParamVector& w, const Vector& features) {
  if (w.size() != model.parameter_count()) {
    throw std::invalid_argument("scores: parameter vector length does not match the model");
  }
  ad::Tape tape(w);
  const ad::Var node = model.build_scores(tape, features.transpose());
  Vector s = tape.value(node).row(0).transpose();
  return {std::move(s), std::move(tape), node};
}

Matrix batch_scores(const ScoreModel& model, const ParamVector& w, const Matrix& features) {
  ad::Tape tape(w);
  return tape.value(model.build_scores(tape, features));
}

ad::Var build_regularizer(ad::Tape& tape, const ScoreModel& model, double l2) {
  const ad::Var all = tape.param(0, model.parameter_count(), 1);
  const ad::Var masked = tape.mul(all, tape.constant(model.regularized_mask()));
  return tape.scale(tape.sum(tape.mul(masked, masked)), 0.5 * l2);
}

Gradient regularizer_gradient(const ScoreModel& model, const ParamVector& w, double l2) {
  return l2 * w.cwiseProduct(model.regularized_mask());
}

}  // namespace dfw
