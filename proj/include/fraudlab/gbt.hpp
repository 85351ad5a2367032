#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fraudlab/matrix.hpp"

namespace fraudlab::trees {

inline constexpr int kModelFormatVersion = 1;

// Internal when feature >= 0: rows with x[feature] < threshold go left.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// nodes[0] is the root.
struct Tree {
  std::vector<TreeNode> nodes;

  double evaluate(std::span<const double> row) const noexcept;
  int depth() const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct TrainParams {
  int n_trees = 200;
  int max_depth = 6;
  double learning_rate = 0.1;
  double min_child_weight = 1.0;
  double subsample = 1.0;
  double colsample = 1.0;
  double lambda_l2 = 1.0;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainParams&, const TrainParams&) = default;
};

// Throws ConfigError naming the offending field.
void validate(const TrainParams& params);

struct TreeEnsemble {
  std::vector<Tree> trees;
  double learning_rate = 0.1;
  double base_score = 0.0;
  std::string manifest_hash;
  std::vector<std::string> feature_names;
  TrainParams params;

  double margin(std::span<const double> row) const noexcept;
  friend bool operator==(const TreeEnsemble&, const TreeEnsemble&) = default;
};

// Training loss (weighted mean log loss) before the first round and after each round.
struct TrainTrace {
  std::vector<double> loss;
};

// Throws DataError for fewer than 2 rows, a single class or a non-finite cell.
TreeEnsemble train(const FeatureMatrix& x, std::span<const std::uint8_t> labels, const TrainParams& params,
                   std::span<const double> weights = {}, TrainTrace* trace = nullptr);

double logistic(double z) noexcept;

// Throws DataError when the row width differs from the model's.
double predict(const TreeEnsemble& model, std::span<const double> row);
// Throws DataError when the matrix manifest hash differs from the model's.
std::vector<double> predict(const TreeEnsemble& model, const FeatureMatrix& x);

std::string serialize(const TreeEnsemble& model);
// Throws ParseError on malformed JSON and DataError on a version mismatch.
TreeEnsemble deserialize(std::string_view text);

// Split search. Exposed so tests can compare it with brute force.

struct SplitCandidate {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  double grad_sum = 0.0;  // node totals
  double hess_sum = 0.0;

  bool valid() const noexcept { return feature >= 0; }
};

double split_gain(double gl, double hl, double gr, double hr, double lambda) noexcept;

// Rows of each column ordered by (value, row index).
struct ColumnOrder {
  std::vector<std::vector<std::uint32_t>> rows;
  std::vector<std::vector<double>> values;
};

ColumnOrder sort_columns(const FeatureMatrix& x);

// Best split of every node in one tree level. node_of_row[r] is the node slot
// of row r in [0, n_nodes), or -1 when the row takes no part. Among equal
// gains the lower feature index wins, then the lower threshold. Only splits
// with positive gain and at least min_child_weight hessian on both sides count.
std::vector<SplitCandidate> find_level_splits(const FeatureMatrix& x, const ColumnOrder& order,
                                              std::span<const std::int32_t> node_of_row, std::size_t n_nodes,
                                              std::span<const double> grad, std::span<const double> hess,
                                              std::span<const std::size_t> features, double lambda,
                                              double min_child_weight);

// Single-node convenience wrapper over all columns.
SplitCandidate find_best_split(const FeatureMatrix& x, std::span<const std::size_t> rows,
                               std::span<const double> grad, std::span<const double> hess, double lambda,
                               double min_child_weight);

}  // namespace fraudlab::trees
