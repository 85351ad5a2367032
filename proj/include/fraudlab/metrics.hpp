#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fraudlab::eval {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

// Empty optionals mark undefined metrics (a zero denominator).
struct BinaryMetrics {
  Confusion counts;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> accuracy;
};

// Predicted positive iff score >= threshold. Throws DataError on empty input
// or length mismatch.
BinaryMetrics confusion_metrics(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                double threshold = 0.5);

// Probability that a random positive outscores a random negative, ties
// counting one half. Rank statistic with midranks kept as doubled integers,
// so the result equals the pairwise count exactly up to the final division.
// Throws DataError when either class is absent.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct PrPoint {
  double threshold = 0.0;
  std::optional<double> precision;
  double recall = 0.0;
};

// One point per distinct score, descending thresholds.
std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

// "undefined" for an empty optional, shortest round-trip text otherwise.
std::string format_metric(const std::optional<double>& value);

}  // namespace fraudlab::eval
