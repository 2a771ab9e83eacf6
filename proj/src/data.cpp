#include "dfw/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dfw {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void malformed(std::size_t line_number, const std::string& what) {
  std::ostringstream os;
  os << "line " << line_number << ": " << what;
  throw std::runtime_error(os.str());
}

double parse_number(const std::string& token, std::size_t line_number) {
  const std::string t = trim(token);
  if (t.empty()) malformed(line_number, "empty field");
  char* end = nullptr;
  const double value = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(value)) {
    malformed(line_number, "non-numeric value '" + t + "'");
  }
  return value;
}

long parse_label(const std::string& token, std::size_t line_number) {
  const double value = parse_number(token, line_number);
  if (value != std::floor(value)) malformed(line_number, "label '" + trim(token) + "' is not an integer");
  return static_cast<long>(value);
}

Dataset subset(const Dataset& pool, const std::vector<Index>& rows) {
  Dataset out;
  out.num_classes = pool.num_classes;
  out.label_names = pool.label_names;
  out.features.resize(static_cast<Index>(rows.size()), pool.features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Index>(i)) = pool.features.row(rows[i]);
    out.labels.push_back(pool.labels[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

// Standardize every split with the training mean and deviation.
void standardize(DatasetSplits& splits) {
  if (splits.train.size() == 0) return;
  const Matrix& x = splits.train.features;
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::RowVectorXd sd = ((x.rowwise() - mean).cwiseAbs2().colwise().sum() /
                           static_cast<double>(x.rows()))
                              .cwiseSqrt();
  for (Index j = 0; j < sd.size(); ++j) {
    if (sd(j) < 1e-12) sd(j) = 1.0;
  }
  for (Dataset* d : {&splits.train, &splits.val, &splits.test}) {
    if (d->size() == 0) continue;
    d->features = ((d->features.rowwise() - mean).array().rowwise() / sd.array()).matrix();
  }
}

DatasetSplits partition(const Dataset& pool, Index n_train, Index n_val, Index n_test,
                        std::vector<Index> order) {
  DatasetSplits splits;
  splits.train_index.assign(order.begin(), order.begin() + n_train);
  splits.val_index.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  splits.test_index.assign(order.begin() + n_train + n_val, order.begin() + n_train + n_val + n_test);
  splits.train = subset(pool, splits.train_index);
  splits.val = subset(pool, splits.val_index);
  splits.test = subset(pool, splits.test_index);
  standardize(splits);
  return splits;
}

}  // namespace

Batch Dataset::gather(std::span<const Index> rows) const {
  Batch batch;
  batch.features.resize(static_cast<Index>(rows.size()), features.cols());
  batch.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    batch.features.row(static_cast<Index>(i)) = features.row(rows[i]);
    batch.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
  }
  return batch;
}

Batch Dataset::all() const { return Batch{features, labels}; }

bool DatasetSplits::disjoint() const {
  std::vector<Index> all;
  all.insert(all.end(), train_index.begin(), train_index.end());
  all.insert(all.end(), val_index.begin(), val_index.end());
  all.insert(all.end(), test_index.begin(), test_index.end());
  std::sort(all.begin(), all.end());
  return std::adjacent_find(all.begin(), all.end()) == all.end();
}

DatasetSplits generate_synthetic(const SyntheticOptions& o) {
  if (o.n_train < 1 || o.n_val < 0 || o.n_test < 0 || o.dim < 1) {
    throw std::invalid_argument("synthetic: sizes must be positive");
  }
  if (o.num_classes < 2) throw std::invalid_argument("synthetic: need at least two classes");
  if (o.noise < 0.0) throw std::invalid_argument("synthetic: noise must be nonnegative");
  if (o.kind == SyntheticKind::kSpirals && o.dim < 2) throw std::invalid_argument("synthetic: spirals need dim >= 2");

  const Index total = o.n_train + o.n_val + o.n_test;
  std::mt19937_64 gen(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pick_class(0, o.num_classes - 1);

  Dataset pool;
  pool.num_classes = o.num_classes;
  for (int c = 0; c < o.num_classes; ++c) pool.label_names.push_back(c);
  pool.features.resize(total, o.dim);
  pool.labels.resize(static_cast<std::size_t>(total));

  if (o.kind == SyntheticKind::kGaussianBlobs) {
    // Simplex vertices scaled so that every pair of means is `separation` apart.
    const double radius = o.separation / std::numbers::sqrt2;
    Matrix means = Matrix::Zero(o.num_classes, o.dim);
    for (int c = 0; c < o.num_classes; ++c) {
      if (c < o.dim) {
        means(c, c) = radius;
      } else {
        Vector dir(o.dim);
        for (Index j = 0; j < o.dim; ++j) dir(j) = normal(gen);
        means.row(c) = radius * dir.normalized().transpose();
      }
    }
    for (Index i = 0; i < total; ++i) {
      const int c = pick_class(gen);
      pool.labels[static_cast<std::size_t>(i)] = c;
      for (Index j = 0; j < o.dim; ++j) pool.features(i, j) = means(c, j) + o.noise * normal(gen);
    }
  } else {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Index i = 0; i < total; ++i) {
      const int c = pick_class(gen);
      pool.labels[static_cast<std::size_t>(i)] = c;
      const double t = unit(gen);
      const double angle = 2.0 * std::numbers::pi * c / o.num_classes + 3.0 * std::numbers::pi * t +
                           0.2 * o.noise * normal(gen);
      pool.features(i, 0) = t * std::cos(angle);
      pool.features(i, 1) = t * std::sin(angle);
      for (Index j = 2; j < o.dim; ++j) pool.features(i, j) = 0.1 * o.noise * normal(gen);
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(total));
  for (Index i = 0; i < total; ++i) order[static_cast<std::size_t>(i)] = i;
  return partition(pool, o.n_train, o.n_val, o.n_test, std::move(order));
}

SyntheticOptions reference_blobs_options() {
  SyntheticOptions o;
  o.kind = SyntheticKind::kGaussianBlobs;
  o.n_train = 5000;
  o.n_val = 1000;
  o.n_test = 1000;
  o.dim = 20;
  o.num_classes = 10;
  o.noise = 1.0;
  o.separation = 7.0;
  o.seed = 2018;
  return o;
}

DataFormat parse_data_format(const std::string& name) {
  if (name == "csv") return DataFormat::kCsv;
  if (name == "libsvm") return DataFormat::kLibsvm;
  throw std::invalid_argument("unknown data format '" + name + "'");
}

RawRow parse_csv_line(const std::string& line, std::size_t line_number) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  if (fields.size() < 2) malformed(line_number, "expected at least one feature and a label");
  RawRow row;
  for (std::size_t i = 0; i + 1 < fields.size(); ++i) row.features.push_back(parse_number(fields[i], line_number));
  row.label = parse_label(fields.back(), line_number);
  return row;
}

RawRow parse_libsvm_line(const std::string& line, std::size_t line_number) {
  std::stringstream ss(line.substr(0, line.find('#')));
  std::string token;
  if (!(ss >> token)) malformed(line_number, "missing label");
  RawRow row;
  row.label = parse_label(token, line_number);
  long last = 0;
  while (ss >> token) {
    const auto colon = token.find(':');
    if (colon == std::string::npos) malformed(line_number, "expected index:value, got '" + token + "'");
    const double index = parse_number(token.substr(0, colon), line_number);
    if (index < 1 || index != std::floor(index)) malformed(line_number, "feature index must be a positive integer");
    const auto idx = static_cast<long>(index);
    if (idx <= last) malformed(line_number, "feature indices must be increasing");
    last = idx;
    const double value = parse_number(token.substr(colon + 1), line_number);
    row.features.resize(static_cast<std::size_t>(idx), 0.0);
    row.features[static_cast<std::size_t>(idx - 1)] = value;
  }
  return row;
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::vector<RawRow> rows;
  std::size_t width = 0;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    RawRow row = format == DataFormat::kCsv ? parse_csv_line(t, line_number)
                                            : parse_libsvm_line(t, line_number);
    if (format == DataFormat::kCsv && !rows.empty() && row.features.size() != width) {
      malformed(line_number, "row has a different number of columns");
    }
    width = std::max(width, row.features.size());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path.string() + ": no samples");
  if (width == 0) throw std::runtime_error(path.string() + ": no features");

  Dataset data;
  data.features = Matrix::Zero(static_cast<Index>(rows.size()), static_cast<Index>(width));
  std::map<long, int> code;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].features.size(); ++j) {
      data.features(static_cast<Index>(i), static_cast<Index>(j)) = rows[i].features[j];
    }
    auto [it, inserted] = code.try_emplace(rows[i].label, static_cast<int>(code.size()));
    if (inserted) data.label_names.push_back(rows[i].label);
    data.labels.push_back(it->second);
  }
  data.num_classes = static_cast<int>(code.size());
  return data;
}

DatasetSplits split_dataset(const Dataset& data, double val_fraction, double test_fraction,
                            std::uint64_t seed) {
  if (val_fraction < 0.0 || test_fraction < 0.0 || val_fraction + test_fraction >= 1.0) {
    throw std::invalid_argument("split: fractions must be nonnegative and sum below 1");
  }
  const Index n = data.size();
  const auto n_val = static_cast<Index>(std::floor(val_fraction * static_cast<double>(n)));
  const auto n_test = static_cast<Index>(std::floor(test_fraction * static_cast<double>(n)));
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 gen(seed);
  std::shuffle(order.begin(), order.end(), gen);
  return partition(data, n - n_val - n_test, n_val, n_test, std::move(order));
}

std::uint64_t dataset_checksum(const DatasetSplits& splits) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const Dataset* d : {&splits.train, &splits.val, &splits.test}) {
    mix(d->labels.data(), d->labels.size() * sizeof(int));
    mix(d->features.data(), static_cast<std::size_t>(d->features.size()) * sizeof(double));
  }
  return h;
}

}  // namespace dfw
