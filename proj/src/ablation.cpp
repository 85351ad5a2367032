#include "fraudlab/ablation.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "fraudlab/errors.hpp"
#include "fraudlab/rng.hpp"

namespace fraudlab::eval {

using nlohmann::ordered_json;

namespace {

void shuffle(std::vector<std::string>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

ordered_json metric_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json("undefined");
}

}  // namespace

MatrixSplit split_by_app(const LabeledMatrix& m, const SplitParams& params) {
  if (m.app_ids.size() != m.rows()) throw DataError("app-disjoint split needs app ids for every row");
  if (!(params.train_fraction > 0.0 && params.train_fraction < 1.0)) {
    throw ConfigError("split: train_fraction must lie in (0, 1)");
  }
  std::map<std::string, bool> app_positive;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto [it, inserted] = app_positive.emplace(m.app_ids[r], false);
    if (m.labels[r]) it->second = true;
  }
  std::vector<std::string> pos_apps;
  std::vector<std::string> neg_apps;
  for (const auto& [app, pos] : app_positive) (pos ? pos_apps : neg_apps).push_back(app);
  Rng rng(params.seed, 0x73706c6974000000ULL);
  shuffle(pos_apps, rng);
  shuffle(neg_apps, rng);
  std::unordered_set<std::string> train_apps;
  auto cut = [&](const std::vector<std::string>& apps) {
    const auto k = static_cast<std::size_t>(std::llround(params.train_fraction * static_cast<double>(apps.size())));
    for (std::size_t i = 0; i < k; ++i) train_apps.insert(apps[i]);
  };
  cut(pos_apps);
  cut(neg_apps);

  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (std::size_t r = 0; r < m.rows(); ++r) (train_apps.contains(m.app_ids[r]) ? train_rows : test_rows).push_back(r);
  MatrixSplit out;
  out.train = m.select_rows(train_rows);
  out.test = m.select_rows(test_rows);
  out.train_apps = train_apps.size();
  out.test_apps = app_positive.size() - train_apps.size();
  return out;
}

void check_app_disjoint(const LabeledMatrix& train, const LabeledMatrix& test) {
  if (train.app_ids.empty() || test.app_ids.empty()) return;
  const std::unordered_set<std::string> seen(train.app_ids.begin(), train.app_ids.end());
  for (const auto& app : test.app_ids) {
    if (seen.contains(app)) throw DataError("app " + app + " appears in both train and test");
  }
}

ClassCounts class_counts(std::span<const std::uint8_t> labels) {
  ClassCounts c;
  for (auto l : labels) ++(l ? c.n_pos : c.n_neg);
  return c;
}

SetResult evaluate_model(const trees::TreeEnsemble& model, const LabeledMatrix& test, double threshold) {
  SetResult res;
  res.n_features = model.feature_names.size();
  const auto scores = trees::predict(model, test.features);
  res.metrics = confusion_metrics(scores, test.labels, threshold);
  const auto cc = class_counts(test.labels);
  if (cc.n_pos > 0 && cc.n_neg > 0) res.auc = auc(scores, test.labels);
  res.pr = pr_curve(scores, test.labels);
  return res;
}

EvalReport run_ablation(const LabeledMatrix& train, const LabeledMatrix& test,
                        std::span<const features::FeatureSet> sets, const trees::TrainParams& params) {
  check_app_disjoint(train, test);
  if (train.features.names() != test.features.names()) throw DataError("train and test matrices differ in columns");
  if (train.features.names() != features::feature_names()) {
    throw DataError("ablation needs matrices with every registry column");
  }
  EvalReport rep;
  rep.seed = params.seed;
  rep.params = params;
  rep.train_balance = class_counts(train.labels);
  rep.test_balance = class_counts(test.labels);
  rep.split_description = "app-disjoint: " + std::to_string(train.rows()) + " train rows, " +
                          std::to_string(test.rows()) + " test rows";
  for (auto set : sets) {
    const auto cols = features::feature_set_columns(set);
    const auto x_train = train.features.select_columns(cols);
    const auto model = trees::train(x_train, train.labels, params);
    LabeledMatrix projected;
    projected.features = test.features.select_columns(cols);
    projected.labels = test.labels;
    SetResult res = evaluate_model(model, projected, rep.threshold);
    res.set = set;
    rep.rows.push_back(std::move(res));
  }
  return rep;
}

std::string ablation_csv(const EvalReport& rep) {
  std::string out = "feature_set,precision,recall,f1,auc,accuracy\n";
  for (const auto& r : rep.rows) {
    out.append(features::to_string(r.set)).push_back(',');
    out.append(format_metric(r.metrics.precision)).push_back(',');
    out.append(format_metric(r.metrics.recall)).push_back(',');
    out.append(format_metric(r.metrics.f1)).push_back(',');
    out.append(format_metric(r.auc)).push_back(',');
    out.append(format_metric(r.metrics.accuracy)).push_back('\n');
  }
  return out;
}

std::string pr_curves_csv(const EvalReport& rep) {
  std::string out = "feature_set,threshold,precision,recall\n";
  for (const auto& r : rep.rows) {
    for (const auto& p : r.pr) {
      out.append(features::to_string(r.set)).push_back(',');
      out.append(format_metric(p.threshold)).push_back(',');
      out.append(format_metric(p.precision)).push_back(',');
      out.append(format_metric(p.recall)).push_back('\n');
    }
  }
  return out;
}

std::string eval_report_json(const EvalReport& rep) {
  ordered_json j;
  j["split"] = rep.split_description;
  j["seed"] = rep.seed;
  j["threshold"] = rep.threshold;
  j["train_balance"] = {{"pos", rep.train_balance.n_pos}, {"neg", rep.train_balance.n_neg}};
  j["test_balance"] = {{"pos", rep.test_balance.n_pos}, {"neg", rep.test_balance.n_neg}};
  const auto& p = rep.params;
  j["params"] = {{"n_trees", p.n_trees},         {"max_depth", p.max_depth}, {"learning_rate", p.learning_rate},
                 {"min_child_weight", p.min_child_weight}, {"subsample", p.subsample}, {"colsample", p.colsample},
                 {"lambda_l2", p.lambda_l2},     {"seed", p.seed}};
  auto& rows = j["rows"] = ordered_json::array();
  for (const auto& r : rep.rows) {
    const auto& c = r.metrics.counts;
    rows.push_back({{"feature_set", features::to_string(r.set)},
                    {"n_features", r.n_features},
                    {"precision", metric_json(r.metrics.precision)},
                    {"recall", metric_json(r.metrics.recall)},
                    {"f1", metric_json(r.metrics.f1)},
                    {"auc", metric_json(r.auc)},
                    {"accuracy", metric_json(r.metrics.accuracy)},
                    {"confusion", {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}}}});
  }
  return j.dump(2) + "\n";
}

}  // namespace fraudlab::eval
