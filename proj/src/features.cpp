#include "fraudlab/features.hpp"

#include <algorithm>
#include <array>

#include <json.hpp>

#include "fraudlab/errors.hpp"
#include "fraudlab/parallel.hpp"

namespace fraudlab::features {

namespace {

constexpr std::int64_t kHour = 3600;

std::int64_t hour_of(std::int64_t ts) { return ts >= 0 ? ts / kHour : (ts - kHour + 1) / kHour; }

template <typename Set>
void union_into(Set& dst, const Set& src) {
  dst.insert(src.begin(), src.end());
}

template <typename Hours>
void merge_hours(Hours& dst, const Hours& src) {
  for (const auto& [h, cell] : src) {
    auto& d = dst[h];
    d.events += cell.events;
    d.downloads += cell.downloads;
  }
}

template <typename Hours>
std::int64_t max_downloads(const Hours& hours) {
  std::int64_t best = 0;
  for (const auto& [h, cell] : hours) best = std::max(best, cell.downloads);
  return best;
}

constexpr unsigned kDev = kInDevice | kInKind;
constexpr unsigned kAppIn = kInApp | kInKind;

constexpr std::array<FeatureSpec, 22> kRegistry{{
    {"is_new_device", Entity::kDevice, Origin::kNew, kInDevice | kInTs},
    {"device_total_downloads", Entity::kDevice, Origin::kPrevious, kDev},
    {"device_avg_downloads_per_hour", Entity::kDevice, Origin::kPrevious, kDev | kInTs},
    {"device_max_downloads_per_hour", Entity::kDevice, Origin::kPrevious, kDev | kInTs},
    {"device_total_searches", Entity::kDevice, Origin::kNew, kDev},
    {"device_total_views", Entity::kDevice, Origin::kNew, kDev},
    {"device_distinct_apps", Entity::kDevice, Origin::kPrevious, kDev | kInApp},
    {"device_distinct_ips", Entity::kDevice, Origin::kPrevious, kDev | kInIp},
    {"is_new_app", Entity::kApp, Origin::kNew, kInApp | kInTs | kInCatalog},
    {"app_category", Entity::kApp, Origin::kPrevious, kInApp | kInCatalog},
    {"app_rating", Entity::kApp, Origin::kPrevious, kInApp | kInCatalog},
    {"app_total_downloads", Entity::kApp, Origin::kPrevious, kAppIn},
    {"app_avg_downloads_per_hour", Entity::kApp, Origin::kPrevious, kAppIn | kInTs},
    {"app_max_downloads_per_hour", Entity::kApp, Origin::kPrevious, kAppIn | kInTs},
    {"app_total_installs", Entity::kApp, Origin::kPrevious, kAppIn},
    {"app_install_rate", Entity::kApp, Origin::kPrevious, kAppIn},
    {"app_total_views", Entity::kApp, Origin::kNew, kAppIn},
    {"app_total_searches", Entity::kApp, Origin::kNew, kAppIn},
    {"app_client_download_fraction", Entity::kApp, Origin::kNew, kAppIn | kInSource},
    {"ip_total_downloads", Entity::kIp, Origin::kPrevious, kInIp | kInKind},
    {"ip_max_downloads_per_hour", Entity::kIp, Origin::kPrevious, kInIp | kInKind | kInTs},
    {"ip_avg_downloads_per_device", Entity::kIp, Origin::kPrevious, kInIp | kInKind | kInDevice},
}};

}  // namespace

void ProfileAccumulator::add(const EventRecord& r) {
  if (!window_.contains(r.ts)) return;
  const std::int64_t hour = hour_of(r.ts);
  const bool download = r.kind == EventKind::kDownload;

  if (!r.device_id.empty()) {
    auto& d = devices_[r.device_id];
    d.first_seen = std::min(d.first_seen, r.ts);
    auto& cell = d.hours[hour];
    ++cell.events;
    if (download) {
      ++cell.downloads;
      ++d.downloads;
    }
    if (r.kind == EventKind::kSearch) ++d.searches;
    if (r.kind == EventKind::kView) ++d.views;
    d.apps.insert(r.app_id);
    d.ips.insert(r.ip_hash);
  }

  auto& a = apps_[r.app_id];
  auto& acell = a.hours[hour];
  ++acell.events;
  switch (r.kind) {
    case EventKind::kDownload:
      ++acell.downloads;
      ++a.downloads;
      if (r.source == Source::kClient) ++a.client_downloads;
      break;
    case EventKind::kInstall: ++a.installs; break;
    case EventKind::kView: ++a.views; break;
    case EventKind::kSearch: ++a.searches; break;
    case EventKind::kUpdate: break;
  }

  if (download) {
    auto& ip = ips_[r.ip_hash];
    auto& icell = ip.hours[hour];
    ++icell.events;
    ++icell.downloads;
    ++ip.downloads;
    if (r.device_id.empty()) {
      ++ip.anonymous_downloads;
    } else {
      ip.devices.insert(r.device_id);
    }
  }
}

void ProfileAccumulator::merge(const ProfileAccumulator& other) {
  if (!(window_ == other.window_)) throw Error(ErrorKind::kInternal, "merging profiles over different windows");
  for (const auto& [id, src] : other.devices_) {
    auto& d = devices_[id];
    d.first_seen = std::min(d.first_seen, src.first_seen);
    d.downloads += src.downloads;
    d.searches += src.searches;
    d.views += src.views;
    union_into(d.apps, src.apps);
    union_into(d.ips, src.ips);
    merge_hours(d.hours, src.hours);
  }
  for (const auto& [id, src] : other.apps_) {
    auto& a = apps_[id];
    a.downloads += src.downloads;
    a.client_downloads += src.client_downloads;
    a.installs += src.installs;
    a.views += src.views;
    a.searches += src.searches;
    merge_hours(a.hours, src.hours);
  }
  for (const auto& [id, src] : other.ips_) {
    auto& ip = ips_[id];
    ip.downloads += src.downloads;
    ip.anonymous_downloads += src.anonymous_downloads;
    union_into(ip.devices, src.devices);
    merge_hours(ip.hours, src.hours);
  }
}

EntityProfiles ProfileAccumulator::finalize() const {
  EntityProfiles out;
  out.devices.reserve(devices_.size());
  for (const auto& [id, d] : devices_) {
    DeviceProfile p;
    p.first_seen_ts = d.first_seen;
    p.total_downloads = d.downloads;
    p.avg_downloads_per_hour = static_cast<double>(d.downloads) / static_cast<double>(d.hours.size());
    p.max_downloads_per_hour = max_downloads(d.hours);
    p.total_searches = d.searches;
    p.total_views = d.views;
    p.distinct_apps = static_cast<std::int64_t>(d.apps.size());
    p.distinct_ips = static_cast<std::int64_t>(d.ips.size());
    out.devices.emplace(id, p);
  }
  out.apps.reserve(apps_.size());
  for (const auto& [id, a] : apps_) {
    AppProfile p;
    p.total_downloads = a.downloads;
    p.avg_downloads_per_hour = static_cast<double>(a.downloads) / static_cast<double>(a.hours.size());
    p.max_downloads_per_hour = max_downloads(a.hours);
    p.total_installs = a.installs;
    p.install_rate = a.downloads == 0 ? 0.0 : static_cast<double>(a.installs) / static_cast<double>(a.downloads);
    p.total_views = a.views;
    p.total_searches = a.searches;
    p.client_download_fraction =
        a.downloads == 0 ? 0.0 : static_cast<double>(a.client_downloads) / static_cast<double>(a.downloads);
    out.apps.emplace(id, p);
  }
  out.ips.reserve(ips_.size());
  for (const auto& [id, ip] : ips_) {
    IpProfile p;
    p.total_downloads = ip.downloads;
    p.max_downloads_per_hour = max_downloads(ip.hours);
    const auto n_devices = static_cast<std::int64_t>(ip.devices.size()) + ip.anonymous_downloads;
    p.avg_downloads_per_device = static_cast<double>(ip.downloads) / static_cast<double>(n_devices);
    out.ips.emplace(id, p);
  }
  return out;
}

EntityProfiles build_profiles(std::span<const EventRecord> log, labeling::Window window) {
  const std::size_t parts = std::max<std::size_t>(1, std::min<std::size_t>(thread_count(), log.size() / 4096 + 1));
  std::vector<ProfileAccumulator> accs(parts, ProfileAccumulator(window));
  parallel_for(parts, [&](std::size_t p) {
    const std::size_t lo = log.size() * p / parts;
    const std::size_t hi = log.size() * (p + 1) / parts;
    for (std::size_t i = lo; i < hi; ++i) accs[p].add(log[i]);
  });
  for (std::size_t p = 1; p < parts; ++p) accs[0].merge(accs[p]);
  return accs[0].finalize();
}

std::string_view to_string(Entity entity) {
  switch (entity) {
    case Entity::kDevice: return "device";
    case Entity::kApp: return "app";
    case Entity::kIp: return "ip";
  }
  return "ip";
}

std::string_view to_string(Origin origin) { return origin == Origin::kNew ? "new" : "previous"; }

std::span<const FeatureSpec> registry() { return kRegistry; }

std::vector<std::string> feature_names() {
  std::vector<std::string> out;
  for (const auto& f : kRegistry) out.emplace_back(f.name);
  return out;
}

std::vector<double> featurize(const EventRecord& r, const EntityProfiles& profiles, const AppCatalog& catalog) {
  if (r.kind != EventKind::kDownload) throw DataError("featurize expects a download record");
  const auto* app_meta = catalog.find(r.app_id);
  if (app_meta == nullptr) throw DataError("app missing from catalog: " + r.app_id);

  // Unknown or missing devices read as never seen.
  DeviceProfile dev;
  bool new_device = true;
  if (!r.device_id.empty()) {
    if (auto it = profiles.devices.find(r.device_id); it != profiles.devices.end()) {
      dev = it->second;
      new_device = r.ts - dev.first_seen_ts < kNewWindowSeconds;
    }
  }
  AppProfile app;
  if (auto it = profiles.apps.find(r.app_id); it != profiles.apps.end()) app = it->second;
  IpProfile ip;
  if (auto it = profiles.ips.find(r.ip_hash); it != profiles.ips.end()) ip = it->second;

  const auto d = [](std::int64_t v) { return static_cast<double>(v); };
  return {
      new_device ? 1.0 : 0.0,
      d(dev.total_downloads),
      dev.avg_downloads_per_hour,
      d(dev.max_downloads_per_hour),
      d(dev.total_searches),
      d(dev.total_views),
      d(dev.distinct_apps),
      d(dev.distinct_ips),
      r.ts - app_meta->release_ts < kNewWindowSeconds ? 1.0 : 0.0,
      static_cast<double>(static_cast<int>(app_meta->category)),
      app_meta->rating,
      d(app.total_downloads),
      app.avg_downloads_per_hour,
      d(app.max_downloads_per_hour),
      d(app.total_installs),
      app.install_rate,
      d(app.total_views),
      d(app.total_searches),
      app.client_download_fraction,
      d(ip.total_downloads),
      d(ip.max_downloads_per_hour),
      ip.avg_downloads_per_device,
  };
}

std::string_view to_string(FeatureSet set) {
  switch (set) {
    case FeatureSet::kDevice: return "device";
    case FeatureSet::kApp: return "app";
    case FeatureSet::kNew: return "new";
    case FeatureSet::kPrevious: return "previous";
    case FeatureSet::kAll: return "all";
  }
  return "all";
}

FeatureSet parse_feature_set(std::string_view name) {
  for (auto s : kAllSets) {
    if (to_string(s) == name) return s;
  }
  throw DataError("unknown feature set: " + std::string(name));
}

std::vector<std::size_t> feature_set_columns(FeatureSet set) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < kRegistry.size(); ++i) {
    const auto& f = kRegistry[i];
    bool keep = false;
    switch (set) {
      case FeatureSet::kDevice: keep = f.entity == Entity::kDevice; break;
      case FeatureSet::kApp: keep = f.entity == Entity::kApp; break;
      case FeatureSet::kNew: keep = f.origin == Origin::kNew; break;
      case FeatureSet::kPrevious: keep = f.origin == Origin::kPrevious; break;
      case FeatureSet::kAll: keep = true; break;
    }
    if (keep) out.push_back(i);
  }
  return out;
}

std::vector<double> select_feature_set(std::span<const double> vector, FeatureSet set) {
  if (vector.size() != kRegistry.size()) throw Error(ErrorKind::kInternal, "feature vector dimension mismatch");
  std::vector<double> out;
  for (auto c : feature_set_columns(set)) out.push_back(vector[c]);
  return out;
}

LabeledMatrix export_matrix(std::span<const EventRecord> log, const labeling::LabelSet& labels,
                            const AppCatalog& catalog) {
  const EntityProfiles profiles = build_profiles(log, labels.window);
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& r = log[i];
    if (r.kind != EventKind::kDownload) continue;
    if (labels.positive.contains(r.event_id) || labels.negative.contains(r.event_id)) picked.push_back(i);
  }
  const std::size_t width = kRegistry.size();
  std::vector<double> cells(picked.size() * width);
  parallel_for(picked.size(), [&](std::size_t k) {
    const auto v = featurize(log[picked[k]], profiles, catalog);
    if (v.size() != width) throw Error(ErrorKind::kInternal, "feature vector dimension mismatch");
    std::copy(v.begin(), v.end(), cells.begin() + static_cast<std::ptrdiff_t>(k * width));
  });

  LabeledMatrix m;
  m.features = FeatureMatrix(feature_names());
  m.features.reserve(picked.size());
  for (std::size_t k = 0; k < picked.size(); ++k) {
    const auto& r = log[picked[k]];
    m.features.append_row(std::span<const double>(cells.data() + k * width, width));
    m.labels.push_back(labels.positive.contains(r.event_id) ? 1 : 0);
    m.event_ids.push_back(r.event_id);
    m.app_ids.push_back(r.app_id);
  }
  return m;
}

LabeledMatrix export_matrix(std::span<const EventRecord> log, const labeling::LabelSet& labels,
                            const AppCatalog& catalog, FeatureSet set) {
  const auto full = export_matrix(log, labels, catalog);
  if (set == FeatureSet::kAll) return full;
  const auto cols = feature_set_columns(set);
  return full.select_columns(cols);
}

std::string manifest_json(FeatureSet set) {
  nlohmann::ordered_json j;
  j["registry_version"] = kRegistryVersion;
  j["feature_set"] = to_string(set);
  const auto cols = feature_set_columns(set);
  std::vector<std::string> names;
  for (auto c : cols) names.emplace_back(kRegistry[c].name);
  j["manifest_hash"] = manifest_hash(names);
  j["csv_layout"] = "event_id,<features>,label";
  auto& arr = j["features"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto& f = kRegistry[cols[k]];
    arr.push_back({{"name", f.name},
                   {"entity", to_string(f.entity)},
                   {"origin", to_string(f.origin)},
                   {"column", k},
                   {"csv_column", k + 1}});
  }
  auto& codes = j["category_codes"] = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < kCategoryCount; ++c) codes[std::string(to_string(static_cast<Category>(c)))] = c;
  j["excluded_inputs"] = {"vendor_verified"};
  return j.dump(2) + "\n";
}

}  // namespace fraudlab::features
