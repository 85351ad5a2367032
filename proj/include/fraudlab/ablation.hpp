#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fraudlab/features.hpp"
#include "fraudlab/gbt.hpp"
#include "fraudlab/matrix.hpp"
#include "fraudlab/metrics.hpp"

namespace fraudlab::eval {

struct SplitParams {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
};

struct MatrixSplit {
  LabeledMatrix train;
  LabeledMatrix test;
  std::size_t train_apps = 0;
  std::size_t test_apps = 0;
};

// App-disjoint split. Apps with any positive row and the remaining apps are
// shuffled separately and each group is cut at train_fraction, so both sides
// see both classes whenever each group has at least two apps.
// Requires app_ids on the matrix (DataError otherwise).
MatrixSplit split_by_app(const LabeledMatrix& m, const SplitParams& params);

// Throws DataError naming an app present on both sides. No-op when either
// side lacks app ids.
void check_app_disjoint(const LabeledMatrix& train, const LabeledMatrix& test);

struct ClassCounts {
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};
ClassCounts class_counts(std::span<const std::uint8_t> labels);

struct SetResult {
  features::FeatureSet set = features::FeatureSet::kAll;
  std::size_t n_features = 0;
  BinaryMetrics metrics;
  std::optional<double> auc;  // empty when the test side has one class
  std::vector<PrPoint> pr;
};

struct EvalReport {
  std::vector<SetResult> rows;
  std::string split_description;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  ClassCounts train_balance;
  ClassCounts test_balance;
  trees::TrainParams params;
};

// Both matrices hold all registry columns. One model per set, trained on the
// projected columns of identical rows. Rows come back in the order of sets.
EvalReport run_ablation(const LabeledMatrix& train, const LabeledMatrix& test,
                        std::span<const features::FeatureSet> sets, const trees::TrainParams& params);

// Scores a trained model on a matrix.
SetResult evaluate_model(const trees::TreeEnsemble& model, const LabeledMatrix& test, double threshold = 0.5);

std::string ablation_csv(const EvalReport& report);  // feature_set,precision,recall,f1,auc,accuracy
std::string pr_curves_csv(const EvalReport& report);  // feature_set,threshold,precision,recall
std::string eval_report_json(const EvalReport& report);

}  // namespace fraudlab::eval
