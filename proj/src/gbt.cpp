#include "fraudlab/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fraudlab/errors.hpp"
#include "fraudlab/parallel.hpp"
#include "fraudlab/rng.hpp"

namespace fraudlab::trees {

using nlohmann::ordered_json;

double Tree::evaluate(std::span<const double> row) const noexcept {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

double TreeEnsemble::margin(std::span<const double> row) const noexcept {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.evaluate(row);
  return base_score + learning_rate * sum;
}

void validate(const TrainParams& p) {
  auto fail = [](const std::string& what) { throw ConfigError("train: " + what); };
  if (p.n_trees < 0) fail("n_trees must be >= 0");
  if (p.max_depth < 1 || p.max_depth > 30) fail("max_depth must be in [1, 30]");
  if (!(p.learning_rate > 0.0 && p.learning_rate <= 1.0)) fail("learning_rate must be in (0, 1]");
  if (!(p.min_child_weight >= 0.0)) fail("min_child_weight must be >= 0");
  if (!(p.subsample > 0.0 && p.subsample <= 1.0)) fail("subsample must be in (0, 1]");
  if (!(p.colsample > 0.0 && p.colsample <= 1.0)) fail("colsample must be in (0, 1]");
  if (!(p.lambda_l2 >= 0.0)) fail("lambda_l2 must be >= 0");
}

double logistic(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double split_gain(double gl, double hl, double gr, double hr, double lambda) noexcept {
  const double g = gl + gr;
  const double h = hl + hr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda));
}

ColumnOrder sort_columns(const FeatureMatrix& x) {
  ColumnOrder order;
  order.rows.resize(x.cols());
  order.values.resize(x.cols());
  parallel_for(x.cols(), [&](std::size_t f) {
    auto& idx = order.rows[f];
    idx.resize(x.rows());
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return x.at(a, f) < x.at(b, f); });
    auto& vals = order.values[f];
    vals.resize(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) vals[k] = x.at(idx[k], f);
  });
  return order;
}

namespace {

double midpoint(double a, double b) {
  const double mid = a + (b - a) * 0.5;
  return mid > a ? mid : b;
}

}  // namespace

std::vector<SplitCandidate> find_level_splits(const FeatureMatrix& x, const ColumnOrder& order,
                                              std::span<const std::int32_t> node_of_row, std::size_t n_nodes,
                                              std::span<const double> grad, std::span<const double> hess,
                                              std::span<const std::size_t> features, double lambda,
                                              double min_child_weight) {
  std::vector<double> g_tot(n_nodes, 0.0);
  std::vector<double> h_tot(n_nodes, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto s = node_of_row[r];
    if (s < 0) continue;
    g_tot[static_cast<std::size_t>(s)] += grad[r];
    h_tot[static_cast<std::size_t>(s)] += hess[r];
  }

  std::vector<std::vector<SplitCandidate>> per_feature(features.size());
  parallel_for(features.size(), [&](std::size_t k) {
    const std::size_t f = features[k];
    auto& best = per_feature[k];
    best.assign(n_nodes, SplitCandidate{});
    std::vector<double> gl(n_nodes, 0.0);
    std::vector<double> hl(n_nodes, 0.0);
    std::vector<double> last(n_nodes, 0.0);
    std::vector<char> seen(n_nodes, 0);
    const auto& rows = order.rows[f];
    const auto& vals = order.values[f];
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::uint32_t r = rows[i];
      const auto slot = node_of_row[r];
      if (slot < 0) continue;
      const auto s = static_cast<std::size_t>(slot);
      const double v = vals[i];
      if (seen[s] && v != last[s]) {
        const double gr = g_tot[s] - gl[s];
        const double hr = h_tot[s] - hl[s];
        if (hl[s] >= min_child_weight && hr >= min_child_weight) {
          const double gain = split_gain(gl[s], hl[s], gr, hr, lambda);
          if (gain > best[s].gain) {
            best[s].feature = static_cast<std::int32_t>(f);
            best[s].threshold = midpoint(last[s], v);
            best[s].gain = gain;
          }
        }
      }
      gl[s] += grad[r];
      hl[s] += hess[r];
      last[s] = v;
      seen[s] = 1;
    }
  });

  std::vector<SplitCandidate> out(n_nodes);
  for (std::size_t s = 0; s < n_nodes; ++s) {
    for (const auto& cand : per_feature) {
      if (cand[s].valid() && cand[s].gain > out[s].gain) out[s] = cand[s];
    }
    out[s].grad_sum = g_tot[s];
    out[s].hess_sum = h_tot[s];
  }
  return out;
}

SplitCandidate find_best_split(const FeatureMatrix& x, std::span<const std::size_t> rows,
                               std::span<const double> grad, std::span<const double> hess, double lambda,
                               double min_child_weight) {
  const ColumnOrder order = sort_columns(x);
  std::vector<std::int32_t> slot(x.rows(), -1);
  for (auto r : rows) slot[r] = 0;
  std::vector<std::size_t> features(x.cols());
  std::iota(features.begin(), features.end(), std::size_t{0});
  return find_level_splits(x, order, slot, 1, grad, hess, features, lambda, min_child_weight).front();
}

namespace {

std::vector<std::size_t> draw_subset(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::size_t scaled_count(std::size_t n, double fraction) {
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n);
}

double mean_log_loss(std::span<const double> margin, std::span<const std::uint8_t> y, std::span<const double> w,
                     double w_total) {
  double sum = 0.0;
  for (std::size_t i = 0; i < margin.size(); ++i) {
    // log(1 + e^-z) for positives, log(1 + e^z) for negatives.
    const double z = y[i] ? margin[i] : -margin[i];
    const double l = z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
    sum += w[i] * l;
  }
  return sum / w_total;
}

Tree grow_tree(const FeatureMatrix& x, const ColumnOrder& order, std::span<const double> grad,
               std::span<const double> hess, std::vector<std::int32_t> slot_of_row,
               std::span<const std::size_t> features, const TrainParams& p) {
  Tree tree;
  tree.nodes.emplace_back();
  std::vector<std::size_t> level{0};  // tree node index per slot
  for (int depth = 0; !level.empty(); ++depth) {
    std::vector<SplitCandidate> splits;
    if (depth < p.max_depth) {
      splits = find_level_splits(x, order, slot_of_row, level.size(), grad, hess, features, p.lambda_l2,
                                 p.min_child_weight);
    } else {
      // Depth budget spent: totals only, no split.
      splits.assign(level.size(), SplitCandidate{});
      for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto s = slot_of_row[r];
        if (s < 0) continue;
        splits[static_cast<std::size_t>(s)].grad_sum += grad[r];
        splits[static_cast<std::size_t>(s)].hess_sum += hess[r];
      }
    }
    std::vector<std::int32_t> child_slot(level.size() * 2, -1);
    std::vector<std::size_t> next;
    for (std::size_t s = 0; s < level.size(); ++s) {
      const auto& c = splits[s];
      const std::size_t id = level[s];
      if (!c.valid()) {
        tree.nodes[id].value = -c.grad_sum / (c.hess_sum + p.lambda_l2);
        continue;
      }
      const auto left = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      tree.nodes[id].feature = c.feature;
      tree.nodes[id].threshold = c.threshold;
      tree.nodes[id].left = left;
      tree.nodes[id].right = left + 1;
      child_slot[2 * s] = static_cast<std::int32_t>(next.size());
      next.push_back(static_cast<std::size_t>(left));
      child_slot[2 * s + 1] = static_cast<std::int32_t>(next.size());
      next.push_back(static_cast<std::size_t>(left + 1));
    }
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto s = slot_of_row[r];
      if (s < 0) continue;
      const auto& c = splits[static_cast<std::size_t>(s)];
      if (!c.valid()) {
        slot_of_row[r] = -1;
        continue;
      }
      const bool go_left = x.at(r, static_cast<std::size_t>(c.feature)) < c.threshold;
      slot_of_row[r] = child_slot[2 * static_cast<std::size_t>(s) + (go_left ? 0 : 1)];
    }
    level = std::move(next);
  }
  return tree;
}

}  // namespace

TreeEnsemble train(const FeatureMatrix& x, std::span<const std::uint8_t> labels, const TrainParams& params,
                   std::span<const double> weights, TrainTrace* trace) {
  validate(params);
  const std::size_t n = x.rows();
  if (labels.size() != n) throw DataError("label count does not match matrix rows");
  if (!weights.empty() && weights.size() != n) throw DataError("weight count does not match matrix rows");
  if (n < 2) throw DataError("training needs at least 2 rows");
  x.require_finite();

  std::vector<double> w(n, 1.0);
  if (!weights.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) throw DataError("sample weights must be positive");
      w[i] = weights[i];
    }
  }
  double w_pos = 0.0;
  double w_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w_total += w[i];
    if (labels[i]) w_pos += w[i];
  }
  if (w_pos == 0.0 || w_pos == w_total) throw DataError("training data has a single class");

  TreeEnsemble model;
  model.learning_rate = params.learning_rate;
  model.base_score = std::log(w_pos / (w_total - w_pos));
  model.feature_names = x.names();
  model.manifest_hash = x.manifest_hash();
  model.params = params;

  const ColumnOrder order = sort_columns(x);
  std::vector<double> margin(n, model.base_score);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  if (trace != nullptr) trace->loss.assign(1, mean_log_loss(margin, labels, w, w_total));

  const std::size_t n_rows_tree = scaled_count(n, params.subsample);
  const std::size_t n_cols_tree = scaled_count(x.cols(), params.colsample);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(params.seed, 0x7472656500000000ULL + static_cast<std::uint64_t>(t));
    for (std::size_t i = 0; i < n; ++i) {
      const double pr = logistic(margin[i]);
      grad[i] = w[i] * (pr - (labels[i] ? 1.0 : 0.0));
      hess[i] = w[i] * pr * (1.0 - pr);
    }
    std::vector<std::int32_t> slot(n, 0);
    if (n_rows_tree < n) {
      std::fill(slot.begin(), slot.end(), -1);
      for (auto r : draw_subset(n, n_rows_tree, rng)) slot[r] = 0;
    }
    std::vector<std::size_t> features;
    if (n_cols_tree < x.cols()) {
      features = draw_subset(x.cols(), n_cols_tree, rng);
    } else {
      features.resize(x.cols());
      std::iota(features.begin(), features.end(), std::size_t{0});
    }
    Tree tree = grow_tree(x, order, grad, hess, std::move(slot), features, params);
    for (std::size_t i = 0; i < n; ++i) margin[i] += params.learning_rate * tree.evaluate(x.row(i));
    model.trees.push_back(std::move(tree));
    if (trace != nullptr) trace->loss.push_back(mean_log_loss(margin, labels, w, w_total));
  }
  return model;
}

double predict(const TreeEnsemble& model, std::span<const double> row) {
  if (row.size() != model.feature_names.size()) {
    throw DataError("row has " + std::to_string(row.size()) + " features, model expects " +
                    std::to_string(model.feature_names.size()));
  }
  return logistic(model.margin(row));
}

std::vector<double> predict(const TreeEnsemble& model, const FeatureMatrix& x) {
  if (x.manifest_hash() != model.manifest_hash) {
    throw DataError("feature manifest mismatch: matrix " + x.manifest_hash() + ", model " + model.manifest_hash);
  }
  std::vector<double> out(x.rows());
  parallel_for(x.rows(), [&](std::size_t i) { out[i] = logistic(model.margin(x.row(i))); });
  return out;
}

std::string serialize(const TreeEnsemble& model) {
  ordered_json j;
  j["format"] = "fraudlab-gbt";
  j["version"] = kModelFormatVersion;
  const auto& p = model.params;
  j["params"] = {{"n_trees", p.n_trees},
                 {"max_depth", p.max_depth},
                 {"learning_rate", p.learning_rate},
                 {"min_child_weight", p.min_child_weight},
                 {"subsample", p.subsample},
                 {"colsample", p.colsample},
                 {"lambda_l2", p.lambda_l2},
                 {"seed", p.seed}};
  j["learning_rate"] = model.learning_rate;
  j["base_score"] = model.base_score;
  j["manifest_hash"] = model.manifest_hash;
  j["feature_names"] = model.feature_names;
  auto& trees = j["trees"] = ordered_json::array();
  for (const auto& t : model.trees) {
    ordered_json feat = ordered_json::array();
    ordered_json thr = ordered_json::array();
    ordered_json left = ordered_json::array();
    ordered_json right = ordered_json::array();
    ordered_json value = ordered_json::array();
    for (const auto& node : t.nodes) {
      feat.push_back(node.feature);
      thr.push_back(node.threshold);
      left.push_back(node.left);
      right.push_back(node.right);
      value.push_back(node.value);
    }
    trees.push_back({{"feature", feat}, {"threshold", thr}, {"left", left}, {"right", right}, {"value", value}});
  }
  return j.dump() + "\n";
}

TreeEnsemble deserialize(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(0, "model", std::string("malformed model JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "fraudlab-gbt") throw ParseError(0, "format", "not a fraudlab model file");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("model format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kModelFormatVersion) + ")");
    }
    TreeEnsemble m;
    const auto& p = j.at("params");
    m.params.n_trees = p.at("n_trees").get<int>();
    m.params.max_depth = p.at("max_depth").get<int>();
    m.params.learning_rate = p.at("learning_rate").get<double>();
    m.params.min_child_weight = p.at("min_child_weight").get<double>();
    m.params.subsample = p.at("subsample").get<double>();
    m.params.colsample = p.at("colsample").get<double>();
    m.params.lambda_l2 = p.at("lambda_l2").get<double>();
    m.params.seed = p.at("seed").get<std::uint64_t>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.base_score = j.at("base_score").get<double>();
    m.manifest_hash = j.at("manifest_hash").get<std::string>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& jt : j.at("trees")) {
      const auto feat = jt.at("feature").get<std::vector<std::int32_t>>();
      const auto thr = jt.at("threshold").get<std::vector<double>>();
      const auto left = jt.at("left").get<std::vector<std::int32_t>>();
      const auto right = jt.at("right").get<std::vector<std::int32_t>>();
      const auto value = jt.at("value").get<std::vector<double>>();
      const std::size_t k = feat.size();
      if (k == 0 || thr.size() != k || left.size() != k || right.size() != k || value.size() != k) {
        throw ParseError(0, "trees", "inconsistent tree arrays");
      }
      Tree t;
      for (std::size_t i = 0; i < k; ++i) {
        TreeNode node{feat[i], thr[i], left[i], right[i], value[i]};
        if (!node.is_leaf()) {
          const auto lim = static_cast<std::int32_t>(k);
          // Children always follow their parent, which also rules out cycles.
          if (node.feature >= static_cast<std::int32_t>(m.feature_names.size()) || node.left <= static_cast<std::int32_t>(i) ||
              node.right <= static_cast<std::int32_t>(i) || node.left >= lim || node.right >= lim) {
            throw ParseError(0, "trees", "invalid node reference");
          }
        }
        t.nodes.push_back(node);
      }
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const ordered_json::exception& e) {
    throw ParseError(0, "model", std::string("malformed model: ") + e.what());
  }
}

}  // namespace fraudlab::trees
