#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fraudlab/log_model.hpp"
#include "fraudlab/rng.hpp"

namespace fraudlab {

class ConfigFile;

namespace sim {

inline constexpr std::int64_t kHour = 3600;
inline constexpr std::int64_t kDay = 24 * kHour;
inline constexpr std::int64_t kNewWindow = 168 * kHour;

enum class FarmSource { kPortal, kUpdate, kNull };
enum class DeviceIdMode { kNone, kNormal, kAbnormal };
// Order of CrowdProfile::task_mix.
enum class CrowdTask { kRegistration, kDailySignin, kRepost, kAddAccount, kPlayGame };
inline constexpr std::size_t kCrowdTaskCount = 5;

// Type-1: scripted front-end injection by a download farm.
struct FarmProfile {
  std::string name;
  bool enabled = true;
  std::int64_t n_downloads = 0;
  FarmSource source_mode = FarmSource::kPortal;
  DeviceIdMode device_id_mode = DeviceIdMode::kNone;
  double duration_hours = 1.0;
  bool distinct_ips = true;
  // Hours after the activity start; drawn from the farm's stream when unset.
  std::optional<double> start_offset_hours;
};

// Type-2: download bots that inject server-side downloads.
struct BotProfile {
  bool enabled = true;
  std::int64_t n_downloads = 0;
  std::int64_t n_target_apps = 80;
  bool reset_device_per_download = true;
  // Used only when devices are not reset.
  std::int64_t downloads_per_device = 20;
  double search_prob = 0.8;
  double view_prob = 0.9;
  // Install reported after the download, mimicking a finished user session.
  double install_prob = 0.0;
  double target_new_apps_fraction = 0.7;
  bool steady_traffic = true;
  bool co_rating_boost = true;
  std::int64_t ip_pool = 2000;
};

// Type-3: crowd workers using their own vendor devices.
struct CrowdProfile {
  bool enabled = true;
  std::int64_t n_workers = 0;
  std::int64_t tasks_per_worker = 1;
  std::array<double, kCrowdTaskCount> task_mix{0.2, 0.2, 0.2, 0.2, 0.2};
};

struct LegitBehavior {
  double search_prob = 0.5;
  double view_prob = 0.7;
  double install_prob = 0.9;
  double update_prob = 0.05;
  double new_device_fraction = 0.03;
  double home_ip_prob = 0.8;
  std::int64_t mobile_ip_pool = 5000;
  // Per-app engagement multiplier on the search, view and install
  // probabilities, uniform on [1 - app_spread, 1 + app_spread].
  double app_spread = 0.0;
};

struct RatingModel {
  double mean = 3.2;
  double stddev = 0.8;
};

struct SimConfig {
  std::uint64_t seed = 20180601;
  std::int64_t start_ts = 1530403200;  // 2018-07-01T00:00:00Z
  std::int64_t horizon_days = 30;
  // Leading days that carry device/app history but no download traffic.
  std::int64_t history_days = 8;
  std::int64_t n_apps = 3000;
  std::int64_t n_devices = 60000;
  std::int64_t legit_downloads = 90000;
  double new_app_fraction = 0.15;
  std::array<double, kCategoryCount> category_mix{0.07, 0.08, 0.20, 0.12, 0.12, 0.13, 0.15, 0.13};
  double suspicious_category_boost = 0.55;
  RatingModel normal_rating{3.2, 0.8};
  RatingModel fraud_rating{4.5, 0.4};
  double night_attenuation = 0.2;
  double popularity_sigma = 1.0;
  // Type-2 targets come from apps at or below this organic-popularity quantile.
  double target_popularity_quantile = 0.75;
  LegitBehavior legit;
  std::vector<FarmProfile> farms;
  BotProfile bots{};
  CrowdProfile crowd{};
};

// Throws ConfigError on any infeasible or out-of-range setting.
void validate(const SimConfig& config);

// Reads [sim], [legit], [farm*], [type2] and [type3] sections.
SimConfig sim_config_from(const ConfigFile& file);

// Relative activity of legitimate users at a UTC hour in [0, 24): the night
// trough in [1, 7) sits at night_attenuation, peaks at 12:00 and 20:00 reach
// 1.0, with linear ramps between (0.7 at 16:00).
double diurnal_intensity(double hour_of_day, double night_attenuation = 0.2);

struct Clock {
  std::int64_t start = 0;           // first second of the log
  std::int64_t activity_start = 0;  // downloads happen in [activity_start, end)
  std::int64_t end = 0;
  double night_attenuation = 0.2;
};

Clock make_clock(const SimConfig& config);

// One generated event before global ordering and id assignment.
struct SimEvent {
  EventRecord record;
  FraudType fraud_type = FraudType::kLegit;
};

// Catalog plus the hidden generator state that legitimate traffic needs.
struct Market {
  AppCatalog catalog;
  std::vector<double> popularity;  // per catalog entry; 0 for the honeypot
  std::vector<double> engagement;  // per catalog entry
  std::int64_t organic_apps = 0;   // first organic_apps entries carry organic traffic
};

Market build_market(const SimConfig& config, const Clock& clock, Rng& rng);

// Devices owned by real users: shared by legitimate traffic and crowd workers.
struct DevicePool {
  struct Device {
    std::string device_id;
    std::string home_ip;
    std::int64_t activation_ts = 0;
  };
  std::vector<Device> devices;
  // Carrier address pool shared by everyone on the market.
  std::uint64_t mobile_ip_salt = 0;
};

// Also emits one vendor-verified update event at activation for every
// device that predates the download period.
DevicePool build_device_pool(const SimConfig& config, const Clock& clock, const Market& market, Rng& rng,
                             std::vector<SimEvent>& events);

std::vector<SimEvent> generate_legit(const SimConfig& config, const Clock& clock, const Market& market,
                                     const DevicePool& pool, Rng& rng);

std::vector<SimEvent> inject_type1(const FarmProfile& farm, Rng& rng, const std::string& app_id, const Clock& clock);

struct Type2Outcome {
  std::vector<SimEvent> events;
  std::vector<std::string> target_apps;
  std::int64_t new_app_fallbacks = 0;
  std::int64_t target_pool_shortfall = 0;
  std::int64_t new_target_shortfall = 0;
};

// Selects target apps (rewriting their ratings when co_rating_boost is set)
// and emits bot traffic against them.
Type2Outcome inject_type2(const BotProfile& bots, Rng& rng, Market& market, const SimConfig& config,
                          const Clock& clock);

// Tasks run inside the app, so the market only sees download and install.
// Drawn tasks are tallied into task_counts by name when given.
std::vector<SimEvent> inject_type3(const CrowdProfile& crowd, Rng& rng, const Market& market, const DevicePool& pool,
                                   const SimConfig& config, const Clock& clock,
                                   std::map<std::string, std::int64_t>* task_counts = nullptr);

struct SimReport {
  std::uint64_t seed = 0;
  std::map<std::string, std::int64_t> event_counts;     // "<type>.<kind>"
  std::map<std::string, std::int64_t> warnings;
  std::map<std::string, std::int64_t> crowd_tasks;
  std::vector<std::string> type2_targets;
  std::string honeypot_app;
};

struct SimOutput {
  std::vector<EventRecord> log;
  AppCatalog catalog;
  std::vector<GroundTruthEntry> truth;
  SimReport report;
};

// Deterministic in config (including seed). Events are ordered by timestamp
// with ties broken by generating block, and numbered from 1.
SimOutput simulate(const SimConfig& config);

std::string report_json(const SimReport& report);

inline constexpr std::string_view kHoneypotApp = "app_honeypot";

}  // namespace sim
}  // namespace fraudlab
