#include "fraudlab/type1_filter.hpp"

#include <map>
#include <unordered_map>
#include <unordered_set>

namespace fraudlab::eval {

std::string_view to_string(Type1Reason reason) {
  switch (reason) {
    case Type1Reason::kPortalSource: return "portal_source";
    case Type1Reason::kNullSource: return "null_source";
    case Type1Reason::kUpdateBurst: return "update_burst";
    case Type1Reason::kMissingDevice: return "missing_device";
  }
  return "missing_device";
}

namespace {

struct Bucket {
  std::unordered_set<std::string> devices;
  std::int64_t anonymous = 0;
};

std::int64_t hour_of(std::int64_t ts) { return ts >= 0 ? ts / 3600 : (ts - 3599) / 3600; }

}  // namespace

std::vector<Type1Flag> type1_rule_filter(std::span<const EventRecord> log, const Type1FilterParams& params) {
  std::map<std::pair<std::string, std::int64_t>, Bucket> buckets;
  for (const auto& r : log) {
    if (r.kind != EventKind::kUpdate) continue;
    auto& b = buckets[{r.app_id, hour_of(r.ts)}];
    if (r.device_id.empty()) {
      ++b.anonymous;
    } else {
      b.devices.insert(r.device_id);
    }
  }
  auto is_burst = [&](const EventRecord& r) {
    const auto& b = buckets.at({r.app_id, hour_of(r.ts)});
    return static_cast<std::int64_t>(b.devices.size()) + b.anonymous > params.burst_rate;
  };

  std::vector<Type1Flag> out;
  for (const auto& r : log) {
    const bool download = r.kind == EventKind::kDownload;
    if (download && r.source == Source::kPortal) {
      out.push_back({r.event_id, Type1Reason::kPortalSource});
    } else if (download && r.source == Source::kNull) {
      out.push_back({r.event_id, Type1Reason::kNullSource});
    } else if (r.kind == EventKind::kUpdate && is_burst(r)) {
      out.push_back({r.event_id, Type1Reason::kUpdateBurst});
    } else if (download && r.device_id.empty()) {
      out.push_back({r.event_id, Type1Reason::kMissingDevice});
    }
  }
  return out;
}

std::vector<EventRecord> remove_flagged(std::span<const EventRecord> log, std::span<const Type1Flag> flags) {
  std::unordered_set<std::uint64_t> ids;
  for (const auto& f : flags) ids.insert(f.event_id);
  std::vector<EventRecord> out;
  out.reserve(log.size() - std::min(log.size(), ids.size()));
  for (const auto& r : log) {
    if (!ids.contains(r.event_id)) out.push_back(r);
  }
  return out;
}

std::string flags_csv(std::span<const Type1Flag> flags) {
  std::string out = "event_id,reason\n";
  for (const auto& f : flags) {
    out.append(std::to_string(f.event_id)).push_back(',');
    out.append(to_string(f.reason)).push_back('\n');
  }
  return out;
}

}  // namespace fraudlab::eval
