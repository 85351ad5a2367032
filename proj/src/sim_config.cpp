#include <algorithm>

#include "fraudlab/config.hpp"
#include "fraudlab/errors.hpp"
#include "fraudlab/simulator.hpp"

namespace fraudlab::sim {

namespace {

template <std::size_t N>
std::array<double, N> fixed_list(const ConfigFile& f, std::string_view sec, std::string_view key,
                                 const std::array<double, N>& fallback) {
  const std::vector<double> v = f.get_doubles(sec, key, std::vector<double>(fallback.begin(), fallback.end()));
  if (v.size() != N) {
    throw ConfigError("[" + std::string(sec) + "] " + std::string(key) + ": expected " + std::to_string(N) +
                      " values, got " + std::to_string(v.size()));
  }
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

FarmProfile farm_from(const ConfigFile& f, const std::string& sec) {
  f.require_known_keys(sec, {"enabled", "n_downloads", "source", "device_id", "duration_hours", "distinct_ips",
                             "start_offset_hours"});
  FarmProfile farm;
  farm.name = sec;
  farm.enabled = f.get_bool(sec, "enabled", true);
  farm.n_downloads = f.get_int(sec, "n_downloads", 0);
  const std::string source = f.get_string(sec, "source", "portal");
  if (source == "portal") {
    farm.source_mode = FarmSource::kPortal;
  } else if (source == "update") {
    farm.source_mode = FarmSource::kUpdate;
  } else if (source == "null") {
    farm.source_mode = FarmSource::kNull;
  } else {
    throw ConfigError("[" + sec + "] source must be portal, update or null");
  }
  const std::string device = f.get_string(sec, "device_id", "none");
  if (device == "none") {
    farm.device_id_mode = DeviceIdMode::kNone;
  } else if (device == "normal") {
    farm.device_id_mode = DeviceIdMode::kNormal;
  } else if (device == "abnormal") {
    farm.device_id_mode = DeviceIdMode::kAbnormal;
  } else {
    throw ConfigError("[" + sec + "] device_id must be none, normal or abnormal");
  }
  farm.duration_hours = f.get_double(sec, "duration_hours", 1.0);
  farm.distinct_ips = f.get_bool(sec, "distinct_ips", true);
  if (f.has(sec, "start_offset_hours")) farm.start_offset_hours = f.get_double(sec, "start_offset_hours", 0.0);
  return farm;
}

}  // namespace

SimConfig sim_config_from(const ConfigFile& f) {
  SimConfig c;
  f.require_known_keys("sim", {"seed", "start_ts", "horizon_days", "history_days", "n_apps", "n_devices",
                               "legit_downloads", "new_app_fraction", "category_mix", "suspicious_category_boost",
                               "normal_rating_mean", "normal_rating_sd", "fraud_rating_mean", "fraud_rating_sd",
                               "night_attenuation", "popularity_sigma", "target_popularity_quantile"});
  c.seed = f.get_uint("sim", "seed", c.seed);
  c.start_ts = f.get_int("sim", "start_ts", c.start_ts);
  c.horizon_days = f.get_int("sim", "horizon_days", c.horizon_days);
  c.history_days = f.get_int("sim", "history_days", c.history_days);
  c.n_apps = f.get_int("sim", "n_apps", c.n_apps);
  c.n_devices = f.get_int("sim", "n_devices", c.n_devices);
  c.legit_downloads = f.get_int("sim", "legit_downloads", c.legit_downloads);
  c.new_app_fraction = f.get_double("sim", "new_app_fraction", c.new_app_fraction);
  c.category_mix = fixed_list(f, "sim", "category_mix", c.category_mix);
  c.suspicious_category_boost = f.get_double("sim", "suspicious_category_boost", c.suspicious_category_boost);
  c.normal_rating.mean = f.get_double("sim", "normal_rating_mean", c.normal_rating.mean);
  c.normal_rating.stddev = f.get_double("sim", "normal_rating_sd", c.normal_rating.stddev);
  c.fraud_rating.mean = f.get_double("sim", "fraud_rating_mean", c.fraud_rating.mean);
  c.fraud_rating.stddev = f.get_double("sim", "fraud_rating_sd", c.fraud_rating.stddev);
  c.night_attenuation = f.get_double("sim", "night_attenuation", c.night_attenuation);
  c.popularity_sigma = f.get_double("sim", "popularity_sigma", c.popularity_sigma);
  c.target_popularity_quantile = f.get_double("sim", "target_popularity_quantile", c.target_popularity_quantile);

  f.require_known_keys("legit", {"search_prob", "view_prob", "install_prob", "update_prob", "new_device_fraction",
                                 "home_ip_prob", "mobile_ip_pool", "app_spread"});
  auto& l = c.legit;
  l.search_prob = f.get_double("legit", "search_prob", l.search_prob);
  l.view_prob = f.get_double("legit", "view_prob", l.view_prob);
  l.install_prob = f.get_double("legit", "install_prob", l.install_prob);
  l.update_prob = f.get_double("legit", "update_prob", l.update_prob);
  l.new_device_fraction = f.get_double("legit", "new_device_fraction", l.new_device_fraction);
  l.home_ip_prob = f.get_double("legit", "home_ip_prob", l.home_ip_prob);
  l.mobile_ip_pool = f.get_int("legit", "mobile_ip_pool", l.mobile_ip_pool);
  l.app_spread = f.get_double("legit", "app_spread", l.app_spread);

  // Farm sections keep their file order.
  for (const std::string& sec : f.sections()) {
    if (sec.rfind("farm", 0) == 0) c.farms.push_back(farm_from(f, sec));
  }

  f.require_known_keys("type2", {"enabled", "n_downloads", "n_target_apps", "reset_device_per_download",
                                 "downloads_per_device", "search_prob", "view_prob", "install_prob", "target_new_apps_fraction",
                                 "steady_traffic", "co_rating_boost", "ip_pool"});
  auto& b = c.bots;
  b.enabled = f.get_bool("type2", "enabled", f.has_section("type2"));
  b.n_downloads = f.get_int("type2", "n_downloads", b.n_downloads);
  b.n_target_apps = f.get_int("type2", "n_target_apps", b.n_target_apps);
  b.reset_device_per_download = f.get_bool("type2", "reset_device_per_download", b.reset_device_per_download);
  b.downloads_per_device = f.get_int("type2", "downloads_per_device", b.downloads_per_device);
  b.search_prob = f.get_double("type2", "search_prob", b.search_prob);
  b.view_prob = f.get_double("type2", "view_prob", b.view_prob);
  b.install_prob = f.get_double("type2", "install_prob", b.install_prob);
  b.target_new_apps_fraction = f.get_double("type2", "target_new_apps_fraction", b.target_new_apps_fraction);
  b.steady_traffic = f.get_bool("type2", "steady_traffic", b.steady_traffic);
  b.co_rating_boost = f.get_bool("type2", "co_rating_boost", b.co_rating_boost);
  b.ip_pool = f.get_int("type2", "ip_pool", b.ip_pool);

  f.require_known_keys("type3", {"enabled", "n_workers", "tasks_per_worker", "task_mix"});
  auto& w = c.crowd;
  w.enabled = f.get_bool("type3", "enabled", f.has_section("type3"));
  w.n_workers = f.get_int("type3", "n_workers", w.n_workers);
  w.tasks_per_worker = f.get_int("type3", "tasks_per_worker", w.tasks_per_worker);
  w.task_mix = fixed_list(f, "type3", "task_mix", w.task_mix);

  validate(c);
  return c;
}

}  // namespace fraudlab::sim
