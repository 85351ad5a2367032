#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fraudlab/log_model.hpp"

namespace fraudlab::labeling {

enum class AppStatus { kSuspicious, kNormal, kExcluded };
enum class Label { kPositive, kNegative, kExcluded };

std::string_view to_string(AppStatus status);
std::string_view to_string(Label label);

// Half-open [start, end) in epoch seconds.
struct Window {
  std::int64_t start = 0;
  std::int64_t end = 0;

  bool contains(std::int64_t ts) const noexcept { return ts >= start && ts < end; }
  friend bool operator==(const Window&, const Window&) = default;
};

// [min ts, max ts + 1) over the whole log; empty window for an empty log.
Window full_span(std::span<const EventRecord> log);

struct AppCounts {
  std::int64_t downloads = 0;
  std::int64_t non_vendor = 0;
};

struct LabelSet {
  std::set<std::uint64_t> positive;
  std::set<std::uint64_t> negative;
  std::set<std::uint64_t> excluded;
  std::map<std::string, AppStatus> app_status;
  std::map<std::string, AppCounts> app_counts;
  Window window;
  double threshold = 0.5;
  bool folded_excluded = false;
};

struct LabelOptions {
  double threshold = 0.5;
  std::optional<Window> window;  // defaults to full_span(log)
  // Sensitivity runs: count excluded-band apps as negatives instead of dropping them.
  bool fold_excluded = false;
};

// Fraction of the given downloads that come from non-vendor devices.
// Throws DataError on empty input.
double app_suspicion_ratio(std::span<const EventRecord> downloads);

// Suspicious iff non_vendor > threshold * downloads, evaluated in double:
// exact for dyadic thresholds such as 0.5 and counts below 2^53, so a 5/10
// app sits on the boundary and is not suspicious. Normal iff non_vendor is
// zero. Everything in between is excluded.
AppStatus classify_app(const AppCounts& counts, double threshold);

// Labels every download in the window by the status of its app.
LabelSet build_labels(std::span<const EventRecord> log, const LabelOptions& options = {});

struct ClassBalance {
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::optional<double> ratio;  // n_pos / (n_pos + n_neg); empty when undefined
};

ClassBalance class_balance(const LabelSet& labels);

// Keeps only records from k whole UTC days chosen from the days the log spans.
std::vector<EventRecord> sample_days(std::span<const EventRecord> log, std::size_t k, std::uint64_t seed);

using EventLabels = std::unordered_map<std::uint64_t, Label>;

// labels.csv: "event_id,label" with label in {pos, neg, excluded}, ascending ids.
std::string labels_csv(const LabelSet& labels);
EventLabels parse_labels_csv(std::string_view text);
// app_status.csv: "app_id,status,downloads,non_vendor".
std::string app_status_csv(const LabelSet& labels);

}  // namespace fraudlab::labeling
