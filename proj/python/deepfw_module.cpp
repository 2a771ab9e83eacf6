// Python bindings for the Deep Frank-Wolfe core.

#include "dfw/harness.hpp"
#include "dfw/proximal.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace dfw;

namespace {

Batch to_batch(const Matrix& features, const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != features.rows()) {
    throw std::invalid_argument("one label per feature row required");
  }
  return Batch{features, labels};
}

Model model_from(const ModelSpec& spec) { return Model(spec); }

}  // namespace

PYBIND11_MODULE(deepfw, m) {
  m.doc() = "Deep Frank-Wolfe: proximal Frank-Wolfe training of linear models and MLPs";

  py::enum_<ModelKind>(m, "ModelKind").value("linear", ModelKind::kLinear).value("mlp", ModelKind::kMlp);
  py::enum_<LossKind>(m, "LossKind").value("svm", LossKind::kSvm).value("ce", LossKind::kCrossEntropy);
  py::enum_<DirectionMode>(m, "DirectionMode")
      .value("conditional", DirectionMode::kConditional)
      .value("smoothed", DirectionMode::kSmoothed);
  py::enum_<OptimizerKind>(m, "OptimizerKind")
      .value("dfw", OptimizerKind::kDfw)
      .value("sgd", OptimizerKind::kSgd)
      .value("adagrad", OptimizerKind::kAdagrad)
      .value("adam", OptimizerKind::kAdam)
      .value("amsgrad", OptimizerKind::kAmsgrad);

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init([](ModelKind kind, int input_dim, std::vector<int> hidden, int num_classes) {
             ModelSpec s{kind, input_dim, std::move(hidden), num_classes};
             s.validate();
             return s;
           }),
           py::arg("kind"), py::arg("input_dim"), py::arg("hidden_dims") = std::vector<int>{},
           py::arg("num_classes"))
      .def_readwrite("kind", &ModelSpec::kind)
      .def_readwrite("input_dim", &ModelSpec::input_dim)
      .def_readwrite("hidden_dims", &ModelSpec::hidden_dims)
      .def_readwrite("num_classes", &ModelSpec::num_classes)
      .def_property_readonly("parameter_count", &ModelSpec::parameter_count);

  m.def("init_params", &init_params, py::arg("spec"), py::arg("seed"));
  m.def(
      "scores",
      [](const ModelSpec& spec, const ParamVector& w, const Matrix& features) {
        return batch_scores(model_from(spec), w, features);
      },
      py::arg("spec"), py::arg("w"), py::arg("features"), "Scores of every row of `features`.");

  m.def("hinge_loss", &hinge_loss, py::arg("scores"), py::arg("label"));
  m.def("cross_entropy", &cross_entropy, py::arg("scores"), py::arg("label"));
  m.def(
      "augmented_scores", [](const Vector& s, int y) { return augmented_scores(s, y).values; }, py::arg("scores"),
      py::arg("label"));
  m.def(
      "softmax_direction", [](const Vector& s) { return softmax_direction(s).weights; }, py::arg("scores"));
  m.def(
      "get_s",
      [](const Vector& scores, int label, DirectionMode mode) {
        const SimplexDirection s = get_s(augmented_scores(scores, label), scores, mode);
        return py::make_tuple(s.weights, s.source == SimplexDirection::Source::kSoftmax);
      },
      py::arg("scores"), py::arg("label"), py::arg("mode"),
      "Dual direction for one sample and whether the softmax point was kept.");

  m.def(
      "loss_gradient",
      [](const ModelSpec& spec, const ParamVector& w, const Matrix& features, const std::vector<int>& labels,
         double l2, LossKind loss) {
        auto [g, value] = objective_gradient(model_from(spec), w, to_batch(features, labels), l2, loss);
        return py::make_tuple(value, g);
      },
      py::arg("spec"), py::arg("w"), py::arg("features"), py::arg("labels"), py::arg("l2") = 0.0,
      py::arg("loss") = LossKind::kSvm, "Mean loss and the gradient of regularizer plus loss.");

  m.def(
      "dual_objective",
      [](const ParamVector& w0, const ParamVector& wt, double lambda, double eta) {
        return dual_objective(ProximalState{w0, wt, lambda, eta});
      },
      py::arg("w0"), py::arg("wt"), py::arg("lam"), py::arg("eta"));
  m.def(
      "optimal_step_size",
      [](const ParamVector& w0, const ParamVector& wt, double lambda, double eta, const ParamVector& ws,
         double lambda_s) { return optimal_step_size(ProximalState{w0, wt, lambda, eta}, DualVertex{ws, lambda_s}); },
      py::arg("w0"), py::arg("wt"), py::arg("lam"), py::arg("eta"), py::arg("ws"), py::arg("lambda_s"));
  m.def("single_step_gamma", &single_step_gamma, py::arg("r"), py::arg("delta"), py::arg("loss_term"),
        py::arg("eta"));

  py::class_<ProximalSolveResult>(m, "ProximalSolveResult")
      .def_readonly("w", &ProximalSolveResult::w)
      .def_readonly("lam", &ProximalSolveResult::lambda)
      .def_readonly("iterations", &ProximalSolveResult::iterations)
      .def_readonly("converged", &ProximalSolveResult::converged)
      .def_readonly("dual_objectives", &ProximalSolveResult::dual_objectives)
      .def_readonly("gammas", &ProximalSolveResult::gammas)
      .def_readonly("gaps", &ProximalSolveResult::gaps);

  m.def(
      "proximal_fw_solve",
      [](const ModelSpec& spec, const ParamVector& w0, const Matrix& features, const std::vector<int>& labels,
         double eta, double l2, int max_iters, double gap_tol, DirectionMode mode) {
        const ProximalSolveOptions o{eta, l2, max_iters, gap_tol, mode};
        return proximal_fw_solve(model_from(spec), w0, to_batch(features, labels), o);
      },
      py::arg("spec"), py::arg("w0"), py::arg("features"), py::arg("labels"), py::arg("eta") = 1.0,
      py::arg("l2") = 0.0, py::arg("max_iters") = 100, py::arg("gap_tol") = 1e-8,
      py::arg("mode") = DirectionMode::kConditional);

  py::class_<StepDiagnostics>(m, "StepDiagnostics")
      .def_readonly("gamma", &StepDiagnostics::gamma)
      .def_readonly("loss", &StepDiagnostics::loss)
      .def_readonly("loss_term", &StepDiagnostics::loss_term)
      .def_readonly("switches", &StepDiagnostics::switches)
      .def_readonly("batch_size", &StepDiagnostics::batch_size);

  py::class_<DFWState>(m, "DFWState")
      .def(py::init<ParamVector, double, double, double, DirectionMode>(), py::arg("w"), py::arg("eta"),
           py::arg("mu") = 0.9, py::arg("l2") = 1e-4, py::arg("mode") = DirectionMode::kConditional)
      .def_readwrite("w", &DFWState::w)
      .def_readwrite("z", &DFWState::z)
      .def_readonly("eta", &DFWState::eta)
      .def_readonly("mu", &DFWState::mu)
      .def_readonly("step_count", &DFWState::step_count);

  m.def(
      "dfw_step",
      [](DFWState& state, const ModelSpec& spec, const Matrix& features, const std::vector<int>& labels) {
        return dfw_step(state, to_batch(features, labels), model_from(spec));
      },
      py::arg("state"), py::arg("spec"), py::arg("features"), py::arg("labels"));

  py::class_<BaselineState>(m, "BaselineState")
      .def(py::init([](OptimizerKind kind, ParamVector w, double lr, double momentum, double l2) {
             return BaselineState(kind, std::move(w), lr, momentum, l2);
           }),
           py::arg("kind"), py::arg("w"), py::arg("lr"), py::arg("momentum") = 0.9, py::arg("l2") = 1e-4)
      .def_readwrite("w", &BaselineState::w)
      .def_readwrite("epoch", &BaselineState::epoch)
      .def_readonly("step_count", &BaselineState::step_count)
      .def("current_lr", &BaselineState::current_lr);

  m.def(
      "baseline_step",
      [](BaselineState& state, const ModelSpec& spec, const Matrix& features, const std::vector<int>& labels,
         LossKind loss) {
        const Batch batch = to_batch(features, labels);
        return state.kind == OptimizerKind::kSgd ? sgd_nesterov_step(state, batch, model_from(spec), loss)
                                                 : adaptive_baseline_step(state, batch, model_from(spec), loss);
      },
      py::arg("state"), py::arg("spec"), py::arg("features"), py::arg("labels"), py::arg("loss") = LossKind::kSvm);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("features", &Dataset::features)
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("num_classes", &Dataset::num_classes)
      .def_readonly("label_names", &Dataset::label_names);

  py::class_<DatasetSplits>(m, "DatasetSplits")
      .def_readonly("train", &DatasetSplits::train)
      .def_readonly("val", &DatasetSplits::val)
      .def_readonly("test", &DatasetSplits::test)
      .def_property_readonly("checksum", &dataset_checksum);

  m.def(
      "make_blobs",
      [](Index n_train, Index n_val, Index n_test, int dim, int classes, double noise, double separation,
         std::uint64_t seed) {
        return generate_synthetic(
            SyntheticOptions{SyntheticKind::kGaussianBlobs, n_train, n_val, n_test, dim, classes, noise, separation, seed});
      },
      py::arg("n_train") = 1000, py::arg("n_val") = 200, py::arg("n_test") = 200, py::arg("dim") = 2,
      py::arg("num_classes") = 2, py::arg("noise") = 1.0, py::arg("separation") = 2.0, py::arg("seed") = 0);
  m.def("reference_blobs", [] { return generate_synthetic(reference_blobs_options()); });
  m.def(
      "load_dataset",
      [](const std::filesystem::path& path, const std::string& format, double val_fraction, std::uint64_t seed) {
        return split_dataset(load_dataset(path, parse_data_format(format)), val_fraction, 0.0, seed);
      },
      py::arg("path"), py::arg("format") = "csv", py::arg("val_fraction") = 0.2, py::arg("seed") = 0);

  py::class_<EpochMetrics>(m, "EpochMetrics")
      .def_readonly("epoch", &EpochMetrics::epoch)
      .def_readonly("train_loss", &EpochMetrics::train_loss)
      .def_readonly("train_acc", &EpochMetrics::train_acc)
      .def_readonly("val_acc", &EpochMetrics::val_acc)
      .def_readonly("mean_gamma", &EpochMetrics::mean_gamma)
      .def_readonly("switch_fraction", &EpochMetrics::switch_fraction)
      .def_readonly("wall_time_s", &EpochMetrics::wall_time_s);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("epochs", &RunResult::epochs)
      .def_readonly("w", &RunResult::w)
      .def_readonly("diverged", &RunResult::diverged)
      .def_readonly("error", &RunResult::error);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init([](OptimizerKind optimizer, double eta, const ModelSpec& model, int epochs, int batch_size,
                       std::uint64_t seed, double momentum, double l2, LossKind loss) {
             RunConfig c;
             c.optimizer = optimizer;
             c.eta = eta;
             c.model = model;
             c.epochs = epochs;
             c.batch_size = batch_size;
             c.seed = seed;
             c.momentum = momentum;
             c.l2 = l2;
             c.loss = loss;
             c.validate();
             return c;
           }),
           py::arg("optimizer"), py::arg("eta"), py::arg("model"), py::arg("epochs") = 10, py::arg("batch_size") = 64,
           py::arg("seed") = 0, py::arg("momentum") = 0.9, py::arg("l2") = 1e-4, py::arg("loss") = LossKind::kSvm)
      .def_readwrite("eta", &RunConfig::eta)
      .def_readwrite("epochs", &RunConfig::epochs)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("mode", &RunConfig::mode);

  m.def("run_training", &run_training, py::arg("config"), py::arg("data"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<SweepRow>(m, "SweepRow")
      .def_readonly("eta", &SweepRow::eta)
      .def_readonly("best_val_acc", &SweepRow::best_val_acc)
      .def_readonly("final_train_acc", &SweepRow::final_train_acc)
      .def_readonly("final_val_acc", &SweepRow::final_val_acc)
      .def_readonly("failed", &SweepRow::failed)
      .def_readonly("error", &SweepRow::error);
  m.def("sensitivity_sweep", &sensitivity_sweep, py::arg("config"), py::arg("eta_grid"), py::arg("data"),
        py::arg("threads") = 0u, py::call_guard<py::gil_scoped_release>());

  m.def("emit_metrics", &emit_metrics, py::arg("metrics"), py::arg("path"));
}
