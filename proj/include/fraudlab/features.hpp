#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fraudlab/labeling.hpp"
#include "fraudlab/log_model.hpp"
#include "fraudlab/matrix.hpp"

namespace fraudlab::features {

inline constexpr int kRegistryVersion = 1;
inline constexpr std::int64_t kNewWindowSeconds = 168 * 3600;

struct DeviceProfile {
  std::int64_t first_seen_ts = 0;
  std::int64_t total_downloads = 0;
  double avg_downloads_per_hour = 0.0;
  std::int64_t max_downloads_per_hour = 0;
  std::int64_t total_searches = 0;
  std::int64_t total_views = 0;
  std::int64_t distinct_apps = 0;
  std::int64_t distinct_ips = 0;

  friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

struct AppProfile {
  std::int64_t total_downloads = 0;
  double avg_downloads_per_hour = 0.0;
  std::int64_t max_downloads_per_hour = 0;
  std::int64_t total_installs = 0;
  double install_rate = 0.0;  // installs per download
  std::int64_t total_views = 0;
  std::int64_t total_searches = 0;
  double client_download_fraction = 0.0;

  friend bool operator==(const AppProfile&, const AppProfile&) = default;
};

struct IpProfile {
  std::int64_t total_downloads = 0;
  std::int64_t max_downloads_per_hour = 0;
  double avg_downloads_per_device = 0.0;

  friend bool operator==(const IpProfile&, const IpProfile&) = default;
};

struct EntityProfiles {
  std::unordered_map<std::string, DeviceProfile> devices;
  std::unordered_map<std::string, AppProfile> apps;
  std::unordered_map<std::string, IpProfile> ips;

  friend bool operator==(const EntityProfiles&, const EntityProfiles&) = default;
};

// Partial aggregates over any subset of the log. Accumulators over disjoint
// parts merge into exactly what a single pass produces, because every
// stored quantity is an integer count or a set.
class ProfileAccumulator {
 public:
  explicit ProfileAccumulator(labeling::Window window) : window_(window) {}

  // Records outside the window are ignored.
  void add(const EventRecord& record);
  void merge(const ProfileAccumulator& other);
  EntityProfiles finalize() const;

 private:
  struct HourCell {
    std::int64_t events = 0;
    std::int64_t downloads = 0;
  };
  using Hours = std::unordered_map<std::int64_t, HourCell>;
  struct DeviceAcc {
    std::int64_t first_seen = INT64_MAX;
    std::int64_t downloads = 0;
    std::int64_t searches = 0;
    std::int64_t views = 0;
    std::unordered_set<std::string> apps;
    std::unordered_set<std::string> ips;
    Hours hours;
  };
  struct AppAcc {
    std::int64_t downloads = 0;
    std::int64_t client_downloads = 0;
    std::int64_t installs = 0;
    std::int64_t views = 0;
    std::int64_t searches = 0;
    Hours hours;
  };
  struct IpAcc {
    std::int64_t downloads = 0;
    std::int64_t anonymous_downloads = 0;
    std::unordered_set<std::string> devices;
    Hours hours;
  };

  labeling::Window window_;
  std::unordered_map<std::string, DeviceAcc> devices_;
  std::unordered_map<std::string, AppAcc> apps_;
  std::unordered_map<std::string, IpAcc> ips_;
};

// Partitions the log across the worker threads and merges in fixed order.
EntityProfiles build_profiles(std::span<const EventRecord> log, labeling::Window window);

enum class Entity { kDevice, kApp, kIp };
enum class Origin { kNew, kPrevious };
std::string_view to_string(Entity entity);
std::string_view to_string(Origin origin);

// Record fields (plus the catalog) a feature may be computed from.
enum Input : unsigned {
  kInTs = 1u << 0,
  kInKind = 1u << 1,
  kInDevice = 1u << 2,
  kInVendorVerified = 1u << 3,
  kInApp = 1u << 4,
  kInIp = 1u << 5,
  kInSource = 1u << 6,
  kInCatalog = 1u << 7,
};

struct FeatureSpec {
  std::string_view name;
  Entity entity;
  Origin origin;
  unsigned inputs;
};

// Fixed order for kRegistryVersion.
std::span<const FeatureSpec> registry();
std::vector<std::string> feature_names();

// pre: record is a download and its app is in the catalog (DataError otherwise).
std::vector<double> featurize(const EventRecord& record, const EntityProfiles& profiles, const AppCatalog& catalog);

enum class FeatureSet { kDevice, kApp, kNew, kPrevious, kAll };
inline constexpr FeatureSet kAllSets[] = {FeatureSet::kDevice, FeatureSet::kApp, FeatureSet::kNew,
                                          FeatureSet::kPrevious, FeatureSet::kAll};
std::string_view to_string(FeatureSet set);
// Throws DataError on an unknown name.
FeatureSet parse_feature_set(std::string_view name);

// Registry indices belonging to the set, ascending.
std::vector<std::size_t> feature_set_columns(FeatureSet set);
std::vector<double> select_feature_set(std::span<const double> vector, FeatureSet set);

// One row per positive or negative download in log order, all registry columns.
LabeledMatrix export_matrix(std::span<const EventRecord> log, const labeling::LabelSet& labels,
                            const AppCatalog& catalog);
LabeledMatrix export_matrix(std::span<const EventRecord> log, const labeling::LabelSet& labels,
                            const AppCatalog& catalog, FeatureSet set);

// JSON manifest for a matrix holding the given set's columns.
std::string manifest_json(FeatureSet set);

}  // namespace fraudlab::features
