#include "fraudlab/labeling.hpp"

#include <algorithm>
#include <limits>

#include "fraudlab/csv.hpp"
#include "fraudlab/errors.hpp"
#include "fraudlab/rng.hpp"

namespace fraudlab::labeling {

namespace {
constexpr std::int64_t kDay = 86400;

std::int64_t utc_day(std::int64_t ts) { return ts >= 0 ? ts / kDay : (ts - kDay + 1) / kDay; }
}  // namespace

std::string_view to_string(AppStatus status) {
  switch (status) {
    case AppStatus::kSuspicious: return "suspicious";
    case AppStatus::kNormal: return "normal";
    case AppStatus::kExcluded: return "excluded";
  }
  return "excluded";
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::kPositive: return "pos";
    case Label::kNegative: return "neg";
    case Label::kExcluded: return "excluded";
  }
  return "excluded";
}

Window full_span(std::span<const EventRecord> log) {
  if (log.empty()) return {};
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (const auto& r : log) {
    lo = std::min(lo, r.ts);
    hi = std::max(hi, r.ts);
  }
  return {lo, hi + 1};
}

double app_suspicion_ratio(std::span<const EventRecord> downloads) {
  if (downloads.empty()) throw DataError("suspicion ratio undefined for an app without downloads");
  std::size_t non_vendor = 0;
  for (const auto& r : downloads) non_vendor += r.vendor_verified ? 0 : 1;
  return static_cast<double>(non_vendor) / static_cast<double>(downloads.size());
}

AppStatus classify_app(const AppCounts& counts, double threshold) {
  if (counts.non_vendor == 0) return AppStatus::kNormal;
  if (static_cast<double>(counts.non_vendor) > threshold * static_cast<double>(counts.downloads)) {
    return AppStatus::kSuspicious;
  }
  return AppStatus::kExcluded;
}

LabelSet build_labels(std::span<const EventRecord> log, const LabelOptions& options) {
  LabelSet out;
  out.threshold = options.threshold;
  out.folded_excluded = options.fold_excluded;
  out.window = options.window.value_or(full_span(log));
  auto in_scope = [&out](const EventRecord& r) {
    return r.kind == EventKind::kDownload && out.window.contains(r.ts);
  };
  for (const auto& r : log) {
    if (!in_scope(r)) continue;
    auto& c = out.app_counts[r.app_id];
    ++c.downloads;
    c.non_vendor += r.vendor_verified ? 0 : 1;
  }
  for (const auto& [app, counts] : out.app_counts) out.app_status.emplace(app, classify_app(counts, options.threshold));
  for (const auto& r : log) {
    if (!in_scope(r)) continue;
    switch (out.app_status.at(r.app_id)) {
      case AppStatus::kSuspicious: out.positive.insert(r.event_id); break;
      case AppStatus::kNormal: out.negative.insert(r.event_id); break;
      case AppStatus::kExcluded:
        (options.fold_excluded ? out.negative : out.excluded).insert(r.event_id);
        break;
    }
  }
  return out;
}

ClassBalance class_balance(const LabelSet& labels) {
  ClassBalance b;
  b.n_pos = labels.positive.size();
  b.n_neg = labels.negative.size();
  if (b.n_pos + b.n_neg > 0) {
    b.ratio = static_cast<double>(b.n_pos) / static_cast<double>(b.n_pos + b.n_neg);
  }
  return b;
}

std::vector<EventRecord> sample_days(std::span<const EventRecord> log, std::size_t k, std::uint64_t seed) {
  if (log.empty()) return {};
  const Window span = full_span(log);
  const std::int64_t first = utc_day(span.start);
  const std::int64_t last = utc_day(span.end - 1);
  std::vector<std::int64_t> days;
  for (std::int64_t d = first; d <= last; ++d) days.push_back(d);
  Rng rng(seed, 0x6461797300ULL);
  const std::size_t take = std::min(k, days.size());
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(days.size() - i));
    std::swap(days[i], days[j]);
  }
  std::set<std::int64_t> chosen(days.begin(), days.begin() + static_cast<std::ptrdiff_t>(take));
  std::vector<EventRecord> out;
  for (const auto& r : log) {
    if (chosen.contains(utc_day(r.ts))) out.push_back(r);
  }
  return out;
}

std::string labels_csv(const LabelSet& labels) {
  std::map<std::uint64_t, Label> all;
  for (auto id : labels.positive) all.emplace(id, Label::kPositive);
  for (auto id : labels.negative) all.emplace(id, Label::kNegative);
  for (auto id : labels.excluded) all.emplace(id, Label::kExcluded);
  std::string out = "event_id,label\n";
  for (const auto& [id, label] : all) {
    out.append(std::to_string(id)).push_back(',');
    out.append(to_string(label)).push_back('\n');
  }
  return out;
}

EventLabels parse_labels_csv(std::string_view text) {
  csv::LineReader reader(text);
  std::string_view line;
  if (!reader.next(line) || line != "event_id,label") throw ParseError(1, "header", "expected 'event_id,label'");
  EventLabels out;
  while (reader.next(line)) {
    const std::size_t n = reader.line_number();
    const auto f = csv::split(line);
    if (f.size() != 2) throw ParseError(n, "row", "expected 2 fields");
    const auto id = csv::parse_int<std::uint64_t>(f[0], n, "event_id");
    Label label;
    if (f[1] == "pos") {
      label = Label::kPositive;
    } else if (f[1] == "neg") {
      label = Label::kNegative;
    } else if (f[1] == "excluded") {
      label = Label::kExcluded;
    } else {
      throw ParseError(n, "label", "expected pos, neg or excluded");
    }
    if (!out.emplace(id, label).second) {
      throw ValidationError(n, "event_id unique", "duplicate label for event " + std::to_string(id));
    }
  }
  return out;
}

std::string app_status_csv(const LabelSet& labels) {
  std::string out = "app_id,status,downloads,non_vendor\n";
  for (const auto& [app, status] : labels.app_status) {
    const auto& c = labels.app_counts.at(app);
    out.append(app).push_back(',');
    out.append(to_string(status)).push_back(',');
    out.append(std::to_string(c.downloads)).push_back(',');
    out.append(std::to_string(c.non_vendor)).push_back('\n');
  }
  return out;
}

}  // namespace fraudlab::labeling
