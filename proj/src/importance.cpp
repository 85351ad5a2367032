#include "fraudlab/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fraudlab/csv.hpp"
#include "fraudlab/errors.hpp"
#include "fraudlab/parallel.hpp"
#include "fraudlab/rng.hpp"

namespace fraudlab::trees {

double gini_impurity(double positives, double negatives) {
  if (positives < 0 || negatives < 0) throw DataError("gini impurity needs non-negative counts");
  const double n = positives + negatives;
  if (n == 0.0) throw DataError("gini impurity of an empty node");
  const double p0 = negatives / n;
  const double p1 = positives / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

void validate(const ForestParams& p) {
  if (p.n_trees < 1) throw ConfigError("importance: n_trees must be >= 1");
  if (p.max_features < 0) throw ConfigError("importance: max_features must be >= 0");
  if (p.max_depth < 0) throw ConfigError("importance: max_depth must be >= 0");
  if (p.min_samples_split < 2) throw ConfigError("importance: min_samples_split must be >= 2");
}

namespace {

// Size-weighted impurity of the two children of a split at thr.
double split_cost(const FeatureMatrix& x, std::span<const std::uint8_t> y, const std::vector<std::uint32_t>& idx,
                  std::size_t begin, std::size_t end, std::size_t f, double thr, std::size_t pos) {
  std::size_t nl = 0;
  std::size_t pl = 0;
  for (std::size_t i = begin; i < end; ++i) {
    if (x.at(idx[i], f) < thr) {
      ++nl;
      pl += y[idx[i]];
    }
  }
  const std::size_t nr = end - begin - nl;
  const std::size_t pr = pos - pl;
  return static_cast<double>(nl) * gini_impurity(static_cast<double>(pl), static_cast<double>(nl - pl)) +
         static_cast<double>(nr) * gini_impurity(static_cast<double>(pr), static_cast<double>(nr - pr));
}

// Lowest-cost midpoint threshold for a non-constant feature.
void best_threshold(const FeatureMatrix& x, std::span<const std::uint8_t> y, const std::vector<std::uint32_t>& idx,
                    std::size_t begin, std::size_t end, std::size_t f, std::size_t pos,
                    std::vector<std::pair<double, std::uint8_t>>& scratch, double& thr, double& cost) {
  scratch.clear();
  for (std::size_t i = begin; i < end; ++i) scratch.emplace_back(x.at(idx[i], f), y[idx[i]]);
  std::sort(scratch.begin(), scratch.end());
  const std::size_t n = scratch.size();
  std::size_t pl = 0;
  cost = -1.0;
  for (std::size_t i = 1; i < n; ++i) {
    pl += scratch[i - 1].second;
    if (scratch[i].first == scratch[i - 1].first) continue;
    const std::size_t nl = i;
    const std::size_t nr = n - i;
    const std::size_t pr = pos - pl;
    const double c = static_cast<double>(nl) * gini_impurity(static_cast<double>(pl), static_cast<double>(nl - pl)) +
                     static_cast<double>(nr) * gini_impurity(static_cast<double>(pr), static_cast<double>(nr - pr));
    if (cost < 0.0 || c < cost) {
      cost = c;
      const double a = scratch[i - 1].first;
      const double b = scratch[i].first;
      const double mid = a + (b - a) * 0.5;
      thr = mid > a ? mid : b;
    }
  }
}

struct Task {
  std::size_t begin;
  std::size_t end;
  int depth;
};

// Grows one tree over idx and adds each split's weighted impurity decrease
// (before normalization by the sample count) into acc.
void grow(const FeatureMatrix& x, std::span<const std::uint8_t> y, std::vector<std::uint32_t>& idx,
          std::size_t k_features, const ForestParams& p, Rng& rng, std::vector<double>& acc) {
  const std::size_t n_cols = x.cols();
  std::vector<std::size_t> perm(n_cols);
  std::vector<std::pair<double, std::uint8_t>> scratch;
  std::vector<Task> stack{{0, idx.size(), 0}};
  while (!stack.empty()) {
    const Task t = stack.back();
    stack.pop_back();
    const std::size_t n = t.end - t.begin;
    if (n < static_cast<std::size_t>(p.min_samples_split)) continue;
    if (p.max_depth > 0 && t.depth >= p.max_depth) continue;
    std::size_t pos = 0;
    for (std::size_t i = t.begin; i < t.end; ++i) pos += y[idx[i]];
    if (pos == 0 || pos == n) continue;
    const double parent = static_cast<double>(n) * gini_impurity(static_cast<double>(pos), static_cast<double>(n - pos));

    // Visit features in random order until k non-constant ones were tried.
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::size_t tried = 0;
    int best_f = -1;
    double best_thr = 0.0;
    double best_decrease = -1.0;
    for (std::size_t j = 0; j < n_cols && tried < k_features; ++j) {
      const std::size_t pick = j + static_cast<std::size_t>(rng.below(n_cols - j));
      std::swap(perm[j], perm[pick]);
      const std::size_t f = perm[j];
      double lo = x.at(idx[t.begin], f);
      double hi = lo;
      for (std::size_t i = t.begin + 1; i < t.end; ++i) {
        const double v = x.at(idx[i], f);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(lo < hi)) continue;
      ++tried;
      double thr = 0.0;
      double child = 0.0;
      if (p.random_thresholds) {
        thr = rng.uniform(lo, hi);
        if (!(thr > lo)) thr = hi;  // keep both sides non-empty
        child = split_cost(x, y, idx, t.begin, t.end, f, thr, pos);
      } else {
        best_threshold(x, y, idx, t.begin, t.end, f, pos, scratch, thr, child);
      }
      const double decrease = parent - child;
      if (decrease > best_decrease) {
        best_decrease = decrease;
        best_f = static_cast<int>(f);
        best_thr = thr;
      }
    }
    if (best_f < 0) continue;  // every feature constant here
    acc[static_cast<std::size_t>(best_f)] += std::max(0.0, best_decrease);
    const auto mid_it = std::stable_partition(idx.begin() + static_cast<std::ptrdiff_t>(t.begin),
                                              idx.begin() + static_cast<std::ptrdiff_t>(t.end),
                                              [&](std::uint32_t r) { return x.at(r, static_cast<std::size_t>(best_f)) < best_thr; });
    const auto mid = static_cast<std::size_t>(mid_it - idx.begin());
    stack.push_back({mid, t.end, t.depth + 1});
    stack.push_back({t.begin, mid, t.depth + 1});
  }
}

}  // namespace

std::vector<double> gini_importance(const FeatureMatrix& x, std::span<const std::uint8_t> labels,
                                    const ForestParams& params) {
  validate(params);
  const std::size_t n = x.rows();
  if (labels.size() != n) throw DataError("label count does not match matrix rows");
  if (x.cols() == 0) throw DataError("importance needs at least one feature");
  x.require_finite();
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  if (n_pos == 0 || n_pos == n) throw DataError("training data has a single class");

  const std::size_t k = params.max_features > 0
                            ? std::min<std::size_t>(static_cast<std::size_t>(params.max_features), x.cols())
                            : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(x.cols())))));
  const auto n_trees = static_cast<std::size_t>(params.n_trees);
  std::vector<std::vector<double>> per_tree(n_trees);
  parallel_for(n_trees, [&](std::size_t t) {
    Rng rng(params.seed, 0x666f726573740000ULL + t);
    std::vector<std::uint32_t> idx(n);
    if (params.bootstrap) {
      for (auto& r : idx) r = static_cast<std::uint32_t>(rng.below(n));
    } else {
      std::iota(idx.begin(), idx.end(), 0u);
    }
    per_tree[t].assign(x.cols(), 0.0);
    grow(x, labels, idx, k, params, rng, per_tree[t]);
    for (auto& v : per_tree[t]) v /= static_cast<double>(n);
  });

  std::vector<double> total(x.cols(), 0.0);
  for (const auto& tree : per_tree) {
    for (std::size_t f = 0; f < total.size(); ++f) total[f] += tree[f];
  }
  const double sum = std::accumulate(total.begin(), total.end(), 0.0);
  if (!(sum > 0.0)) throw DataError("no split reduced impurity; importance undefined");
  for (auto& v : total) v /= sum;
  return total;
}

std::string importance_csv(std::span<const std::string> names, std::span<const double> importance) {
  if (names.size() != importance.size()) throw Error(ErrorKind::kInternal, "importance/name size mismatch");
  std::vector<std::size_t> order(names.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
  std::vector<std::size_t> rank(names.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i + 1;
  std::string out = "feature,importance,rank\n";
  for (std::size_t f = 0; f < names.size(); ++f) {
    out.append(names[f]).push_back(',');
    csv::append_double(out, importance[f]);
    out.push_back(',');
    out.append(std::to_string(rank[f])).push_back('\n');
  }
  return out;
}

}  // namespace fraudlab::trees
