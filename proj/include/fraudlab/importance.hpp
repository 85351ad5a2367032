#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fraudlab/matrix.hpp"

namespace fraudlab::trees {

// 1 - p0^2 - p1^2. Throws DataError when both counts are zero.
double gini_impurity(double positives, double negatives);

// Extremely randomized forest used only to rank features.
struct ForestParams {
  int n_trees = 100;
  int max_features = 0;  // candidate features per node; 0 means round(sqrt(cols))
  int max_depth = 0;     // 0 means grow until pure
  int min_samples_split = 2;
  bool bootstrap = true;
  // true: one uniform threshold per candidate feature (extremely randomized
  // trees). false: the best Gini threshold per candidate (random forest).
  bool random_thresholds = true;
  std::uint64_t seed = 0;
};

void validate(const ForestParams& params);

// Mean decrease in Gini impurity per feature, weighted by the share of the
// tree's samples reaching each node, averaged over trees and normalized to
// sum 1. Throws DataError on single-class input, non-finite cells, or when no
// tree finds any split.
std::vector<double> gini_importance(const FeatureMatrix& x, std::span<const std::uint8_t> labels,
                                    const ForestParams& params);

// "feature,importance,rank" with rank 1 = most important; ties keep column order.
std::string importance_csv(std::span<const std::string> names, std::span<const double> importance);

}  // namespace fraudlab::trees
