#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <array>
#include <climits>
#include <string>
#include <tuple>

#include "fraudlab/config.hpp"
#include "fraudlab/errors.hpp"
#include "fraudlab/log_model.hpp"
#include "fraudlab/simulator.hpp"

using namespace fraudlab;
using namespace fraudlab::sim;

namespace {

// Small market with every fraud block off.
SimConfig quiet_config() {
  SimConfig c;
  c.n_apps = 200;
  c.n_devices = 2000;
  c.legit_downloads = 1000;
  c.bots.enabled = false;
  c.crowd.enabled = false;
  return c;
}

std::map<FraudType, std::int64_t> download_counts(const SimOutput& out) {
  std::map<FraudType, std::int64_t> counts;
  for (std::size_t i = 0; i < out.log.size(); ++i) {
    if (out.log[i].kind == EventKind::kDownload) ++counts[out.truth[i].fraud_type];
  }
  return counts;
}

int utc_hour(std::int64_t ts) { return static_cast<int>((ts % kDay) / kHour); }

}  // namespace

TEST_CASE("diurnal curve") {
  CHECK(diurnal_intensity(3) == doctest::Approx(0.2));
  CHECK(diurnal_intensity(12) == doctest::Approx(1.0));
  CHECK(diurnal_intensity(20) == doctest::Approx(1.0));
  CHECK(diurnal_intensity(3, 0.5) == doctest::Approx(0.5));
  double night = 0;
  double day = 0;
  for (int i = 0; i < 600; ++i) night += diurnal_intensity(1.0 + 6.0 * i / 600.0);
  for (int i = 0; i < 1500; ++i) day += diurnal_intensity(8.0 + 15.0 * i / 1500.0);
  CHECK(night / 600 < day / 1500);
  for (int i = 0; i < 240; ++i) {
    const double w = diurnal_intensity(i / 10.0);
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
  }
}

TEST_CASE("all fraud disabled gives only verified legit downloads") {
  const auto out = simulate(quiet_config());
  const auto counts = download_counts(out);
  CHECK(counts.size() == 1);
  CHECK(counts.at(FraudType::kLegit) == 1000);
  REQUIRE(out.log.size() == out.truth.size());
  for (std::size_t i = 0; i < out.log.size(); ++i) {
    CHECK(out.truth[i].event_id == out.log[i].event_id);
    CHECK(out.log[i].vendor_verified);
    if (out.log[i].kind != EventKind::kUpdate) CHECK(out.log[i].source == Source::kClient);
  }
}

TEST_CASE("legit timestamps follow the night trough") {
  auto c = quiet_config();
  c.legit_downloads = 20000;
  const auto out = simulate(c);
  std::int64_t night = 0;
  std::int64_t total = 0;
  for (const auto& r : out.log) {
    if (r.kind != EventKind::kDownload) continue;
    ++total;
    const int h = utc_hour(r.ts);
    if (h >= 1 && h < 7) ++night;
  }
  CHECK(static_cast<double>(night) / static_cast<double>(total) < c.night_attenuation + 0.05);
}

TEST_CASE("same config twice gives identical output") {
  auto c = quiet_config();
  c.bots.enabled = true;
  c.bots.n_downloads = 500;
  c.bots.n_target_apps = 10;
  c.crowd.enabled = true;
  c.crowd.n_workers = 50;
  c.farms.push_back({"farm", true, 300, FarmSource::kNull, DeviceIdMode::kAbnormal, 0.5, true, 10.0});
  const auto a = simulate(c);
  const auto b = simulate(c);
  CHECK(write_log(a.log) == write_log(b.log));
  CHECK(write_catalog(a.catalog) == write_catalog(b.catalog));
  CHECK(a.truth == b.truth);
  CHECK(report_json(a.report) == report_json(b.report));
  c.seed += 1;
  CHECK(write_log(simulate(c).log) != write_log(a.log));
}

TEST_CASE("adding a fraud block leaves the other blocks untouched") {
  auto c = quiet_config();
  c.crowd.enabled = true;
  c.crowd.n_workers = 40;
  const auto base = simulate(c);
  c.farms.push_back({"farm", true, 200, FarmSource::kPortal, DeviceIdMode::kNone, 1.0, true, 5.0});
  const auto more = simulate(c);
  auto strip = [](const SimOutput& out) {
    std::multiset<std::tuple<std::int64_t, int, std::string, std::string>> s;
    for (std::size_t i = 0; i < out.log.size(); ++i) {
      if (out.truth[i].fraud_type == FraudType::kType1) continue;
      const auto& r = out.log[i];
      s.insert({r.ts, static_cast<int>(r.kind), r.device_id, r.app_id});
    }
    return s;
  };
  CHECK(strip(base) == strip(more));
}

TEST_CASE("Farm 4 signature: portal, abnormal device, one hour") {
  auto c = quiet_config();
  c.legit_downloads = 0;
  c.farms.push_back({"farm4", true, 20000, FarmSource::kPortal, DeviceIdMode::kAbnormal, 1.0, true, std::nullopt});
  const auto out = simulate(c);
  std::set<std::string> ips;
  std::int64_t lo = INT64_MAX;
  std::int64_t hi = INT64_MIN;
  std::int64_t n = 0;
  for (std::size_t i = 0; i < out.log.size(); ++i) {
    if (out.truth[i].fraud_type != FraudType::kType1) continue;
    const auto& r = out.log[i];
    ++n;
    CHECK(r.kind == EventKind::kDownload);
    CHECK(r.source == Source::kPortal);
    CHECK_FALSE(r.vendor_verified);
    CHECK_FALSE(r.device_id.empty());
    ips.insert(r.ip_hash);
    lo = std::min(lo, r.ts);
    hi = std::max(hi, r.ts);
  }
  CHECK(n == 20000);
  CHECK(ips.size() == 20000);
  CHECK(hi - lo < kHour);
}

TEST_CASE("Farm 1 and Farm 2 signatures") {
  auto c = quiet_config();
  c.legit_downloads = 0;
  const Clock clock = make_clock(c);
  Rng rng(5, 5);
  const auto f1 = inject_type1({"farm1", true, 10000, FarmSource::kPortal, DeviceIdMode::kNone, 12.0, true, 0.0}, rng,
                               "app_x", clock);
  REQUIRE(f1.size() == 10000);
  std::set<std::string> ips;
  for (const auto& ev : f1) {
    CHECK(ev.record.device_id.empty());
    CHECK(ev.record.source == Source::kPortal);
    CHECK(ev.record.ts >= clock.activity_start);
    CHECK(ev.record.ts < clock.activity_start + 12 * kHour);
    ips.insert(ev.record.ip_hash);
  }
  CHECK(ips.size() == 10000);

  const auto f2 = inject_type1({"farm2", true, 15000, FarmSource::kUpdate, DeviceIdMode::kNormal, 2.0, true, 0.0}, rng,
                               "app_x", clock);
  REQUIRE(f2.size() == 15000);
  for (const auto& ev : f2) {
    CHECK(ev.record.kind == EventKind::kUpdate);
    CHECK(ev.record.source == Source::kUpdate);
    CHECK(is_hex16(ev.record.device_id));
    CHECK_FALSE(ev.record.vendor_verified);
  }
}

TEST_CASE("bots reset devices and spread evenly over the day") {
  auto c = quiet_config();
  c.bots.enabled = true;
  c.bots.n_downloads = 24000;
  c.bots.n_target_apps = 20;
  const auto out = simulate(c);
  std::map<std::string, int> per_device;
  std::array<std::int64_t, 24> hours{};
  std::int64_t n = 0;
  for (std::size_t i = 0; i < out.log.size(); ++i) {
    if (out.truth[i].fraud_type != FraudType::kType2) continue;
    const auto& r = out.log[i];
    CHECK_FALSE(r.vendor_verified);
    CHECK(r.source == Source::kClient);
    if (r.kind != EventKind::kDownload) continue;
    ++n;
    ++per_device[r.device_id];
    ++hours[static_cast<std::size_t>(utc_hour(r.ts))];
  }
  CHECK(n == 24000);
  CHECK(per_device.size() == 24000);
  // Multinomial bounds for a uniform hour: mean n/24, three standard deviations.
  const double mean = n / 24.0;
  const double sd = std::sqrt(n * (1.0 / 24) * (23.0 / 24));
  for (auto h : hours) CHECK(std::abs(static_cast<double>(h) - mean) < 3 * sd);
}

TEST_CASE("bot targets are category-skewed and re-rated") {
  auto c = quiet_config();
  c.n_apps = 2000;
  c.bots.enabled = true;
  c.bots.n_downloads = 2000;
  c.bots.n_target_apps = 60;
  c.suspicious_category_boost = 0.55;
  const auto out = simulate(c);
  REQUIRE(out.report.type2_targets.size() == 60);
  int fg = 0;
  double rating = 0;
  for (const auto& id : out.report.type2_targets) {
    const auto& e = out.catalog.at(id);
    if (e.category == Category::kFinance || e.category == Category::kGame) ++fg;
    rating += e.rating;
  }
  CHECK(fg == 33);
  CHECK(rating / 60 > 4.0);
}

TEST_CASE("crowd workers look like users") {
  auto c = quiet_config();
  c.crowd.enabled = true;
  c.crowd.n_workers = 100;
  c.crowd.tasks_per_worker = 1;
  c.crowd.task_mix = {1, 0, 0, 0, 0};
  const auto out = simulate(c);
  std::set<std::string> workers;
  std::set<std::string> installers;
  std::int64_t downloads = 0;
  for (std::size_t i = 0; i < out.log.size(); ++i) {
    if (out.truth[i].fraud_type != FraudType::kType3) continue;
    const auto& r = out.log[i];
    CHECK(r.vendor_verified);
    if (r.kind == EventKind::kDownload) {
      ++downloads;
      workers.insert(r.device_id);
    }
    if (r.kind == EventKind::kInstall) installers.insert(r.device_id);
  }
  CHECK(downloads == 100);
  CHECK(workers.size() == 100);
  CHECK(installers == workers);
}

TEST_CASE("verified flag by fraud type") {
  auto c = quiet_config();
  c.bots.enabled = true;
  c.bots.n_downloads = 300;
  c.bots.n_target_apps = 5;
  c.crowd.enabled = true;
  c.crowd.n_workers = 30;
  c.farms.push_back({"farm", true, 100, FarmSource::kPortal, DeviceIdMode::kNormal, 1.0, true, 1.0});
  const auto out = simulate(c);
  for (std::size_t i = 0; i < out.log.size(); ++i) {
    const auto t = out.truth[i].fraud_type;
    const bool verified = t == FraudType::kLegit || t == FraudType::kType3;
    CHECK(out.log[i].vendor_verified == verified);
  }
}

TEST_CASE("infeasible configs are rejected") {
  auto c = quiet_config();
  c.crowd.enabled = true;
  c.crowd.n_workers = c.n_devices + 1;
  CHECK_THROWS_AS(simulate(c), ConfigError);

  c = quiet_config();
  c.category_mix[0] += 0.1;
  CHECK_THROWS_AS(simulate(c), ConfigError);

  c = quiet_config();
  c.farms.push_back({"farm", true, 10, FarmSource::kPortal, DeviceIdMode::kNone, 30.0, true, 0.0});
  CHECK_THROWS_AS(simulate(c), ConfigError);

  c = quiet_config();
  c.n_devices = 0;
  CHECK_THROWS_AS(simulate(c), ConfigError);
}

TEST_CASE("config file sections map onto SimConfig") {
  const auto file = ConfigFile::parse(
      "[sim]\nseed = 9\nn_apps = 50\nlegit_downloads = 10\n"
      "[farm1]\nn_downloads = 5\nsource = null\ndevice_id = abnormal\nduration_hours = 0.2\n"
      "[type2]\nenabled = false\n");
  const auto c = sim_config_from(file);
  CHECK(c.seed == 9);
  CHECK(c.n_apps == 50);
  REQUIRE(c.farms.size() == 1);
  CHECK(c.farms[0].source_mode == FarmSource::kNull);
  CHECK(c.farms[0].device_id_mode == DeviceIdMode::kAbnormal);
  CHECK_FALSE(c.bots.enabled);
  CHECK_THROWS_AS(sim_config_from(ConfigFile::parse("[sim]\nbogus = 1\n")), ConfigError);
}
