#pragma once

#include "dfw/data.hpp"
#include "dfw/losses.hpp"
#include "dfw/models.hpp"
#include "dfw/optimizers.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace dfw {

struct RunConfig {
  OptimizerKind optimizer = OptimizerKind::kDfw;
  double eta = 0.1;  // proximal coefficient for dfw, base learning rate otherwise
  double momentum = 0.9;
  double l2 = 1e-4;
  /// Learning-rate schedule for the baselines; unset means the desk default
  /// for sgd and a constant rate for the adaptive methods. DFW ignores it.
  std::optional<LrSchedule> schedule;
  ModelSpec model;
  int batch_size = 64;
  int epochs = 10;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::kSvm;
  /// Unset picks default_direction_mode(num_classes).
  std::optional<DirectionMode> mode;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  std::optional<double> mean_gamma;       // dfw only
  std::optional<double> switch_fraction;  // dfw only
  double wall_time_s = 0.0;
};

struct RunResult {
  std::vector<EpochMetrics> epochs;
  ParamVector w;
  bool diverged = false;
  std::string error;
};

/// Per-epoch permutations of the training set from a generator that is
/// private to the shuffle, so every optimizer sees the same data order.
class EpochShuffler {
 public:
  EpochShuffler(std::uint64_t seed, Index n);
  const std::vector<Index>& next();

 private:
  std::mt19937_64 gen_;
  std::vector<Index> order_;
};

/// Fraction of rows whose highest score (lowest index on ties) is the label.
double accuracy(const ScoreModel& model, const ParamVector& w, const Dataset& data);

/// Mean data loss (no regularizer) over the whole dataset.
double mean_loss(const ScoreModel& model, const ParamVector& w, const Dataset& data, LossKind loss);

/// Trains from init_params(model, seed) and evaluates after every epoch.
/// A non-finite loss or parameter aborts the run; the epochs completed so far
/// are kept and `diverged` is set.
RunResult run_training(const RunConfig& config, const DatasetSplits& data);

struct SweepRow {
  double eta = 0.0;
  double best_val_acc = 0.0;
  double final_train_acc = 0.0;
  double final_val_acc = 0.0;
  bool failed = false;
  std::string error;
};

/// One training run per distinct eta, ascending. Runs execute on up to
/// `threads` workers (0 = hardware concurrency); a failed run is recorded and
/// the sweep continues.
std::vector<SweepRow> sensitivity_sweep(const RunConfig& base, std::vector<double> eta_grid,
                                        const DatasetSplits& data, unsigned threads = 0);

inline constexpr const char* kMetricsHeader =
    "epoch,train_loss,train_acc,val_acc,mean_gamma,switch_fraction,wall_time_s";
inline constexpr const char* kSweepHeader = "eta,best_val_acc,final_train_acc,final_val_acc,status";

/// CSV with kMetricsHeader; floats to 6 significant digits, empty cells for
/// columns that do not apply.
void emit_metrics(const std::vector<EpochMetrics>& metrics, const std::filesystem::path& path);
std::vector<EpochMetrics> read_metrics(const std::filesystem::path& path);

void emit_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

}  // namespace dfw
