#include "fraudlab/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "fraudlab/csv.hpp"
#include "fraudlab/errors.hpp"

namespace fraudlab::eval {

namespace {

void check_lengths(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw DataError("scores and labels differ in length (" + std::to_string(scores.size()) + " vs " +
                    std::to_string(labels.size()) + ")");
  }
  if (scores.empty()) throw DataError("metrics need at least one score");
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

BinaryMetrics confusion_metrics(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                double threshold) {
  check_lengths(scores, labels);
  BinaryMetrics m;
  auto& c = m.counts;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) {
      ++(predicted ? c.tp : c.fn);
    } else {
      ++(predicted ? c.fp : c.tn);
    }
  }
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.accuracy = ratio(c.tp + c.tn, scores.size());
  if (m.precision && m.recall && *m.precision + *m.recall > 0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Doubled midrank of a tie group covering sorted positions [i, j) is i + j + 1.
  std::uint64_t rank_sum2 = 0;
  std::uint64_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    std::uint64_t pos_in_group = 0;
    for (std::size_t k = i; k < j; ++k) pos_in_group += labels[order[k]] ? 1 : 0;
    rank_sum2 += pos_in_group * (i + j + 1);
    n_pos += pos_in_group;
    i = j;
  }
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("AUC needs both classes");
  // 2U = 2*sum(ranks) - P(P+1); AUC = U / (P*N).
  const std::uint64_t u2 = rank_sum2 - n_pos * (n_pos + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t total_pos = 0;
  for (auto l : labels) total_pos += l ? 1 : 0;
  std::vector<PrPoint> out;
  std::size_t tp = 0;
  std::size_t k = 0;
  while (k < order.size()) {
    const double thr = scores[order[k]];
    while (k < order.size() && scores[order[k]] == thr) {
      tp += labels[order[k]] ? 1 : 0;
      ++k;
    }
    PrPoint p;
    p.threshold = thr;
    p.precision = ratio(tp, k);
    p.recall = total_pos == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(total_pos);
    out.push_back(p);
  }
  return out;
}

std::string format_metric(const std::optional<double>& value) {
  return value ? csv::format_double(*value) : std::string("undefined");
}

}  // namespace fraudlab::eval
