#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hdk {

/// A labeled sample matrix. Labels are canonical class ids 1..N_c
/// (assigned in ascending order of the original labels); the mapping
/// back to the original labels is kept in `original_labels`.
struct Dataset {
  Eigen::MatrixXd features;               // n x d, one row per sample
  std::vector<int> labels;                // canonical ids, 1-based
  std::vector<long long> original_labels; // canonical id c -> original_labels[c-1]
  std::vector<std::string> feature_names; // optional, from a CSV header

  int n() const { return static_cast<int>(features.rows()); }
  int d() const { return static_cast<int>(features.cols()); }
  int class_count() const { return static_cast<int>(original_labels.size()); }

  /// Samples per canonical class, indexed by class id - 1.
  std::vector<int> class_counts() const;
  /// Row indices of a canonical class, ascending.
  std::vector<int> class_indices(int class_id) const;
  /// Feature rows of a canonical class.
  Eigen::MatrixXd class_rows(int class_id) const;
};

struct SplitSpec {
  double train_fraction = 0.8;
  unsigned long long seed = 0;
  bool stratified = false;
  // When set, the explicit lists override fraction/seed/stratified.
  std::optional<std::vector<int>> train_indices;
  std::optional<std::vector<int>> test_indices;
};

/// Reads a headerless comma-separated table. `label_column` selects the
/// label field (negative counts from the end, -1 = last). Labels must
/// parse as integers; they are canonicalized to 1..N_c.
Dataset load_dense_csv(const std::string& path, int label_column,
                       bool skip_header = false);

/// Reads SVM-light style lines "<label> <idx>:<value> ...", 1-based,
/// strictly increasing indices. Unmentioned entries are exactly zero.
/// d is the largest index seen unless `d_override` > 0.
Dataset load_sparse_svmlight(const std::string& path, int d_override = 0);

/// Writes "<x1>,...,<xd>,<original label>" rows at full precision
/// (reading back with label_column=-1 reproduces the dataset exactly).
void save_dense_csv(const Dataset& ds, const std::string& path);

/// Writes SVM-light lines, omitting exact zeros. Reading back with
/// d_override = ds.d() reproduces the dataset exactly.
void save_svmlight(const Dataset& ds, const std::string& path);

/// Deterministic train/test split. Canonical labels of the parent are
/// preserved in both halves so the two stay in one label space.
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

/// Takes the given rows of a dataset (labels kept as-is).
Dataset subset(const Dataset& ds, const std::vector<int>& rows);

}  // namespace hdk
