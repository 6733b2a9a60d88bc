#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace memeguard {

/// Dense row-major feature table with named columns.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<std::string> column_names;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
};

struct RFConfig {
  int n_trees = 100;
  int max_depth = 8;
  int min_samples_leaf = 1;
  /// Candidate features per node; unset means floor(sqrt(feature count)).
  std::optional<int> features_per_split;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const;
  int resolved_features_per_split(std::size_t n_features) const;

  friend bool operator==(const RFConfig&, const RFConfig&) = default;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // rows with value <= threshold go left
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t count0 = 0;  // training class counts reaching this node
  std::uint32_t count1 = 0;

  bool is_leaf() const { return feature < 0; }
  double positive_rate() const { return double(count1) / double(count0 + count1); }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> row) const;
  /// Index of the leaf reached by `row`.
  std::size_t leaf_index(std::span<const double> row) const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct Forest {
  std::vector<DecisionTree> trees;
  std::vector<std::string> schema;

  friend bool operator==(const Forest&, const Forest&) = default;
};

/// Weighted Gini impurity n - sum_k c_k^2 / n of a node with the given
/// class counts (n times the usual Gini index).
double weighted_gini(double count0, double count1);

/// A split must lower weighted Gini by more than this times the node size.
inline constexpr double kMinImpurityDecrease = 1e-12;

/// Breiman forest: bootstrap resamples, a random feature subset per node,
/// best Gini threshold among midpoints of consecutive distinct values,
/// growth stopped by max_depth, min_samples_leaf or purity. Tree t draws
/// from its own stream derive_seed(seed, t), so trees can be grown in any
/// order. Throws std::invalid_argument on empty input or a single class.
Forest rf_train(const FeatureMatrix& x, std::span<const int> y, const RFConfig& cfg);

/// Mean over trees of the leaf positive-class frequency.
std::vector<double> rf_predict(const Forest& forest, const FeatureMatrix& x);

// RFF1 (little-endian): "RFF1" | u32 n_columns | per column (u32 len, bytes) |
// u32 n_trees | per tree (u32 n_nodes | per node i32 feature, f64 threshold,
// i32 left, i32 right, u32 count0, u32 count1).
std::vector<std::byte> encode_forest(const Forest& forest);
Forest decode_forest(std::span<const std::byte> bytes);

}  // namespace memeguard
