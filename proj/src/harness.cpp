#include "dfw/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dfw {

namespace {

// Keeps the shuffle stream apart from the initialization stream for equal seeds.
constexpr std::uint64_t kShuffleSalt = 0x9E3779B97F4A7C15ULL;

std::string fmt6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string fmt6(const std::optional<double>& x) { return x ? fmt6(*x) : std::string(); }

Index argmax_row(const Matrix& m, Index row) {
  Index best = 0;
  for (Index k = 1; k < m.cols(); ++k) {
    if (m(row, k) > m(row, best)) best = k;
  }
  return best;
}

}  // namespace

void RunConfig::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("config: eta must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("config: momentum must lie in [0, 1)");
  if (l2 < 0.0) throw std::invalid_argument("config: l2 must be nonnegative");
  if (batch_size < 1) throw std::invalid_argument("config: batch size must be positive");
  if (epochs < 1) throw std::invalid_argument("config: epochs must be positive");
  if (optimizer == OptimizerKind::kDfw && loss != LossKind::kSvm) {
    throw std::invalid_argument("config: dfw requires the svm loss");
  }
  model.validate();
}

EpochShuffler::EpochShuffler(std::uint64_t seed, Index n)
    : gen_(seed ^ kShuffleSalt), order_(static_cast<std::size_t>(n)) {}

const std::vector<Index>& EpochShuffler::next() {
  std::iota(order_.begin(), order_.end(), Index{0});
  std::shuffle(order_.begin(), order_.end(), gen_);
  return order_;
}

double accuracy(const ScoreModel& model, const ParamVector& w, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  const Matrix s = batch_scores(model, w, data.features);
  Index correct = 0;
  for (Index i = 0; i < s.rows(); ++i) {
    if (argmax_row(s, i) == data.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(s.rows());
}

double mean_loss(const ScoreModel& model, const ParamVector& w, const Dataset& data, LossKind loss) {
  if (data.size() == 0) return 0.0;
  const Matrix s = batch_scores(model, w, data.features);
  double total = 0.0;
  for (Index i = 0; i < s.rows(); ++i) {
    const Vector row = s.row(i).transpose();
    const int y = data.labels[static_cast<std::size_t>(i)];
    total += loss == LossKind::kSvm ? hinge_loss(row, y) : cross_entropy(row, y);
  }
  return total / static_cast<double>(s.rows());
}

RunResult run_training(const RunConfig& config, const DatasetSplits& data) {
  config.validate();
  const Dataset& train = data.train;
  if (train.size() == 0) throw std::invalid_argument("training: empty training set");
  if (config.model.input_dim != train.dim() || config.model.num_classes != train.num_classes) {
    throw std::invalid_argument("training: model dimensions do not match the dataset");
  }
  const Model model(config.model);
  const DirectionMode mode = config.mode.value_or(default_direction_mode(model.num_classes()));
  const bool is_dfw = config.optimizer == OptimizerKind::kDfw;

  RunResult result;
  ParamVector w0 = init_params(config.model, config.seed);
  DFWState dfw;
  BaselineState baseline;
  if (is_dfw) {
    dfw = DFWState(std::move(w0), config.eta, config.momentum, config.l2, mode);
  } else {
    LrSchedule schedule = config.schedule.value_or(config.optimizer == OptimizerKind::kSgd
                                                       ? LrSchedule::desk_default(config.epochs)
                                                       : LrSchedule{});
    baseline = BaselineState(config.optimizer, std::move(w0), config.eta, config.momentum, config.l2,
                             std::move(schedule));
  }
  auto params = [&]() -> const ParamVector& { return is_dfw ? dfw.w : baseline.w; };

  EpochShuffler shuffler(config.seed, train.size());
  const auto start = std::chrono::steady_clock::now();
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<Index>& order = shuffler.next();
    baseline.epoch = epoch;
    double gamma_sum = 0.0;
    long steps = 0;
    Index switches = 0;
    bool finite = true;

    for (std::size_t begin = 0; begin < order.size() && finite; begin += batch) {
      const std::size_t count = std::min(batch, order.size() - begin);
      const Batch b = train.gather(std::span<const Index>(order.data() + begin, count));
      double loss_value = 0.0;
      if (is_dfw) {
        const StepDiagnostics diag = dfw_step(dfw, b, model);
        gamma_sum += diag.gamma;
        switches += diag.switches;
        loss_value = diag.loss;
      } else if (config.optimizer == OptimizerKind::kSgd) {
        loss_value = sgd_nesterov_step(baseline, b, model, config.loss);
      } else {
        loss_value = adaptive_baseline_step(baseline, b, model, config.loss);
      }
      ++steps;
      finite = std::isfinite(loss_value) && params().allFinite();
    }

    EpochMetrics m;
    m.epoch = epoch;
    if (finite) {
      m.train_loss = mean_loss(model, params(), train, config.loss);
      finite = std::isfinite(m.train_loss);
    }
    if (!finite) {
      result.diverged = true;
      std::ostringstream os;
      os << "non-finite loss in epoch " << epoch;
      result.error = os.str();
      break;
    }
    m.train_acc = accuracy(model, params(), train);
    m.val_acc = accuracy(model, params(), data.val);
    if (is_dfw) {
      m.mean_gamma = steps > 0 ? gamma_sum / static_cast<double>(steps) : 0.0;
      m.switch_fraction = static_cast<double>(switches) / static_cast<double>(train.size());
    }
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.epochs.push_back(m);
  }
  result.w = params();
  return result;
}

std::vector<SweepRow> sensitivity_sweep(const RunConfig& base, std::vector<double> eta_grid,
                                        const DatasetSplits& data, unsigned threads) {
  if (eta_grid.empty()) throw std::invalid_argument("sweep: empty eta grid");
  std::sort(eta_grid.begin(), eta_grid.end());
  eta_grid.erase(std::unique(eta_grid.begin(), eta_grid.end()), eta_grid.end());

  std::vector<SweepRow> rows(eta_grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < eta_grid.size(); i = next++) {
      SweepRow& row = rows[i];
      row.eta = eta_grid[i];
      try {
        RunConfig config = base;
        config.eta = eta_grid[i];
        const RunResult run = run_training(config, data);
        for (const EpochMetrics& m : run.epochs) row.best_val_acc = std::max(row.best_val_acc, m.val_acc);
        if (!run.epochs.empty()) {
          row.final_train_acc = run.epochs.back().train_acc;
          row.final_val_acc = run.epochs.back().val_acc;
        }
        row.failed = run.diverged;
        row.error = run.error;
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(eta_grid.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  return rows;
}

void emit_metrics(const std::vector<EpochMetrics>& metrics, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kMetricsHeader << '\n';
  for (const EpochMetrics& m : metrics) {
    out << m.epoch << ',' << fmt6(m.train_loss) << ',' << fmt6(m.train_acc) << ',' << fmt6(m.val_acc) << ','
        << fmt6(m.mean_gamma) << ',' << fmt6(m.switch_fraction) << ',' << fmt6(m.wall_time_s) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<EpochMetrics> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error(path.string() + ": unexpected metrics header");
  }
  std::vector<EpochMetrics> metrics;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 7) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_number) + " has " +
                               std::to_string(cells.size()) + " cells");
    }
    auto opt = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return std::stod(s);
    };
    EpochMetrics m;
    m.epoch = std::stoi(cells[0]);
    m.train_loss = std::stod(cells[1]);
    m.train_acc = std::stod(cells[2]);
    m.val_acc = std::stod(cells[3]);
    m.mean_gamma = opt(cells[4]);
    m.switch_fraction = opt(cells[5]);
    m.wall_time_s = std::stod(cells[6]);
    metrics.push_back(m);
  }
  return metrics;
}

void emit_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kSweepHeader << '\n';
  for (const SweepRow& r : rows) {
    out << fmt6(r.eta) << ',' << fmt6(r.best_val_acc) << ',' << fmt6(r.final_train_acc) << ','
        << fmt6(r.final_val_acc) << ',' << (r.failed ? "failed" : "ok") << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace dfw
