#pragma once

#include "dfw/models.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dfw {

struct Dataset {
  Matrix features;            // one sample per row
  std::vector<int> labels;    // in [0, num_classes)
  int num_classes = 0;
  std::vector<long> label_names;  // original label of each class index

  Index size() const { return features.rows(); }
  int dim() const { return static_cast<int>(features.cols()); }
  Batch gather(std::span<const Index> rows) const;
  Batch all() const;
};

/// Train/validation/test partition of one pool of samples. The index
/// vectors refer to positions in that pool.
struct DatasetSplits {
  Dataset train;
  Dataset val;
  Dataset test;
  std::vector<Index> train_index;
  std::vector<Index> val_index;
  std::vector<Index> test_index;

  bool disjoint() const;
};

enum class SyntheticKind { kGaussianBlobs, kSpirals };

struct SyntheticOptions {
  SyntheticKind kind = SyntheticKind::kGaussianBlobs;
  Index n_train = 1000;
  Index n_val = 200;
  Index n_test = 200;
  int dim = 2;
  int num_classes = 2;
  double noise = 1.0;
  /// Distance between any two blob means before standardization.
  double separation = 2.0;
  std::uint64_t seed = 0;
};

/// Deterministic labeled dataset. Blobs put one isotropic Gaussian per class
/// at the vertices of a scaled simplex. Features are standardized per
/// dimension with the training statistics.
DatasetSplits generate_synthetic(const SyntheticOptions& options);

/// The fixed 10-class blobs set (5000/1000/1000, d = 20, noise 1.0).
SyntheticOptions reference_blobs_options();

enum class DataFormat { kCsv, kLibsvm };

DataFormat parse_data_format(const std::string& name);

/// One parsed row: dense features and the label as written in the file.
struct RawRow {
  std::vector<double> features;
  long label = 0;
};

/// "f1,f2,...,label".
RawRow parse_csv_line(const std::string& line, std::size_t line_number);
/// "label idx:value idx:value ..." with 1-based indices.
RawRow parse_libsvm_line(const std::string& line, std::size_t line_number);

/// Reads a whole file; labels are remapped to [0, |Y|) in first-appearance
/// order. Malformed rows are rejected with their line number.
Dataset load_dataset(const std::filesystem::path& path, DataFormat format);

/// Seeded split of a loaded dataset; features standardized as for synthetic data.
DatasetSplits split_dataset(const Dataset& data, double val_fraction, double test_fraction,
                            std::uint64_t seed);

/// FNV-1a over labels and feature bytes of all three splits.
std::uint64_t dataset_checksum(const DatasetSplits& splits);

}  // namespace dfw
