#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "fraudlab/errors.hpp"
#include "fraudlab/features.hpp"
#include "fraudlab/labeling.hpp"
#include "fraudlab/log_model.hpp"
#include "fraudlab/parallel.hpp"
#include "fraudlab/rng.hpp"
#include "fraudlab/simulator.hpp"

using namespace fraudlab;
using namespace fraudlab::features;

namespace {

constexpr std::int64_t kH = 3600;

EventRecord event(std::uint64_t id, std::int64_t ts, EventKind kind, const std::string& device, const std::string& app,
                  const std::string& ip = "00000000000000aa") {
  EventRecord r;
  r.event_id = id;
  r.ts = ts;
  r.kind = kind;
  r.device_id = device;
  r.vendor_verified = !device.empty();
  r.app_id = app;
  r.ip_hash = ip;
  r.source = kind == EventKind::kUpdate ? Source::kUpdate : Source::kClient;
  return r;
}

const std::string kDev = "000000000000000d";

std::size_t column(std::string_view name) {
  const auto names = feature_names();
  return static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin());
}

std::vector<EventRecord> random_log(Rng& rng, std::size_t n) {
  std::vector<EventRecord> log;
  for (std::size_t i = 0; i < n; ++i) {
    const auto kind = static_cast<EventKind>(rng.below(5));
    const std::string device = rng.bernoulli(0.1) ? "" : hex16(rng.below(40));
    auto r = event(i + 1, static_cast<std::int64_t>(rng.below(30 * 24 * kH)), kind, device,
                   "app_" + std::to_string(rng.below(15)), hex16(1000 + rng.below(25)));
    if (kind == EventKind::kDownload && rng.bernoulli(0.2)) r.source = rng.bernoulli(0.5) ? Source::kPortal : Source::kNull;
    if (!r.device_id.empty()) r.vendor_verified = rng.bernoulli(0.7);
    log.push_back(r);
  }
  return log;
}

AppCatalog catalog_for(int n_apps) {
  AppCatalog catalog;
  for (int a = 0; a < n_apps; ++a) {
    catalog.add({"app_" + std::to_string(a), static_cast<Category>(a % 8), 1.0 + (a % 9) * 0.5, a * 86400});
  }
  return catalog;
}

}  // namespace

TEST_CASE("hourly device stats") {
  std::vector<EventRecord> log;
  for (int i = 0; i < 5; ++i) log.push_back(event(i + 1, 10 * kH + i * 60, EventKind::kDownload, kDev, "app_0"));
  auto p = build_profiles(log, labeling::full_span(log));
  CHECK(p.devices.at(kDev).max_downloads_per_hour == 5);
  CHECK(p.devices.at(kDev).avg_downloads_per_hour == 5.0);

  log.clear();
  for (int i = 0; i < 3; ++i) log.push_back(event(i + 1, 10 * kH + i, EventKind::kDownload, kDev, "app_0"));
  log.push_back(event(9, 14 * kH, EventKind::kDownload, kDev, "app_1"));
  p = build_profiles(log, labeling::full_span(log));
  const auto& d = p.devices.at(kDev);
  CHECK(d.max_downloads_per_hour == 3);
  CHECK(d.avg_downloads_per_hour == 2.0);
  CHECK(d.total_downloads == 4);
  CHECK(d.distinct_apps == 2);
  CHECK(d.first_seen_ts == 10 * kH);

  CHECK(build_profiles(std::vector<EventRecord>{}, labeling::Window{}).devices.empty());
}

TEST_CASE("app stats count installs, views, searches and client share") {
  std::vector<EventRecord> log{
      event(1, 100, EventKind::kSearch, kDev, "app_0"),
      event(2, 200, EventKind::kView, kDev, "app_0"),
      event(3, 300, EventKind::kDownload, kDev, "app_0"),
      event(4, 400, EventKind::kInstall, kDev, "app_0"),
      event(5, 500, EventKind::kDownload, "", "app_0"),
  };
  log[4].source = Source::kPortal;
  const auto p = build_profiles(log, labeling::full_span(log));
  const auto& a = p.apps.at("app_0");
  CHECK(a.total_downloads == 2);
  CHECK(a.total_installs == 1);
  CHECK(a.install_rate == 0.5);
  CHECK(a.total_views == 1);
  CHECK(a.total_searches == 1);
  CHECK(a.client_download_fraction == 0.5);
  CHECK(p.ips.at("00000000000000aa").total_downloads == 2);
}

TEST_CASE("featurize newness flags and missing device") {
  AppCatalog catalog;
  catalog.add({"app_old", Category::kGame, 4.5, 0});
  catalog.add({"app_new", Category::kFinance, 3.0, 20 * 24 * kH});
  const std::int64_t t = 21 * 24 * kH;
  std::vector<EventRecord> log{
      event(1, 0, EventKind::kUpdate, kDev, "app_old"),
      event(2, t, EventKind::kDownload, kDev, "app_old"),
      event(3, t, EventKind::kDownload, "", "app_new"),
      event(4, t, EventKind::kDownload, "00000000000000b0", "app_new"),
  };
  const auto p = build_profiles(log, labeling::full_span(log));
  const auto old_row = featurize(log[1], p, catalog);
  CHECK(old_row[column("is_new_device")] == 0.0);
  CHECK(old_row[column("is_new_app")] == 0.0);
  CHECK(old_row[column("app_category")] == 1.0);
  CHECK(old_row[column("app_rating")] == 4.5);

  const auto anon = featurize(log[2], p, catalog);
  CHECK(anon[column("is_new_device")] == 1.0);
  CHECK(anon[column("is_new_app")] == 1.0);
  for (std::size_t c : feature_set_columns(FeatureSet::kDevice)) {
    if (registry()[c].name != "is_new_device") CHECK(anon[c] == 0.0);
  }
  const auto once = featurize(log[3], p, catalog);
  CHECK(once[column("is_new_device")] == 1.0);

  auto missing = log[1];
  missing.app_id = "app_missing";
  try {
    featurize(missing, p, catalog);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("app_missing") != std::string::npos);
  }
}

TEST_CASE("registry tags partition the features") {
  const auto all = feature_set_columns(FeatureSet::kAll);
  CHECK(all.size() == registry().size());
  CHECK(feature_names().size() == registry().size());
  auto dev = feature_set_columns(FeatureSet::kDevice);
  auto app = feature_set_columns(FeatureSet::kApp);
  std::vector<std::size_t> ip;
  for (std::size_t i = 0; i < registry().size(); ++i) {
    if (registry()[i].entity == Entity::kIp) ip.push_back(i);
  }
  std::vector<std::size_t> by_entity;
  by_entity.insert(by_entity.end(), dev.begin(), dev.end());
  by_entity.insert(by_entity.end(), app.begin(), app.end());
  by_entity.insert(by_entity.end(), ip.begin(), ip.end());
  std::sort(by_entity.begin(), by_entity.end());
  CHECK(by_entity == all);

  auto nw = feature_set_columns(FeatureSet::kNew);
  auto prev = feature_set_columns(FeatureSet::kPrevious);
  std::vector<std::size_t> by_origin = nw;
  by_origin.insert(by_origin.end(), prev.begin(), prev.end());
  std::sort(by_origin.begin(), by_origin.end());
  CHECK(by_origin == all);
  CHECK(std::adjacent_find(by_origin.begin(), by_origin.end()) == by_origin.end());

  const std::set<std::string_view> expected_new{"is_new_device",     "is_new_app",          "app_total_searches",
                                                "app_total_views",   "app_client_download_fraction",
                                                "device_total_searches", "device_total_views"};
  std::set<std::string_view> got_new;
  for (auto c : nw) got_new.insert(registry()[c].name);
  CHECK(got_new == expected_new);

  for (const auto& spec : registry()) CHECK((spec.inputs & kInVendorVerified) == 0u);
  std::vector<double> v(all.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  CHECK(select_feature_set(v, FeatureSet::kAll) == v);
  CHECK_THROWS_AS(parse_feature_set("everything"), DataError);
  for (auto s : kAllSets) CHECK(parse_feature_set(to_string(s)) == s);
}

TEST_CASE("vendor flag never reaches the features") {
  Rng rng(77, 1);
  auto log = random_log(rng, 600);
  const auto catalog = catalog_for(15);
  const auto window = labeling::full_span(log);
  const auto before = build_profiles(log, window);
  auto flipped = log;
  for (auto& r : flipped) {
    if (!r.device_id.empty()) r.vendor_verified = !r.vendor_verified;
  }
  const auto after = build_profiles(flipped, window);
  CHECK(before == after);
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log[i].kind != EventKind::kDownload) continue;
    CHECK(featurize(log[i], before, catalog) == featurize(flipped[i], after, catalog));
  }
}

TEST_CASE("merged partial profiles equal a single pass") {
  Rng rng(5, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto log = random_log(rng, 400);
    const auto window = labeling::full_span(log);
    ProfileAccumulator whole(window);
    for (const auto& r : log) whole.add(r);
    const auto k = rng.below(6) + 2;
    std::vector<ProfileAccumulator> parts(k, ProfileAccumulator(window));
    for (const auto& r : log) parts[rng.below(k)].add(r);
    ProfileAccumulator merged(window);
    for (const auto& p : parts) merged.merge(p);
    const auto single = whole.finalize();
    CHECK(merged.finalize() == single);
    for (const auto& [id, d] : single.devices) CHECK(d.avg_downloads_per_hour <= static_cast<double>(d.max_downloads_per_hour));
    for (const auto& [id, a] : single.apps) {
      CHECK(a.avg_downloads_per_hour <= static_cast<double>(a.max_downloads_per_hour));
      CHECK(a.client_download_fraction >= 0.0);
      CHECK(a.client_download_fraction <= 1.0);
    }
  }
}

TEST_CASE("thread count does not change profiles") {
  Rng rng(3, 3);
  const auto log = random_log(rng, 3000);
  const auto window = labeling::full_span(log);
  set_thread_count(1);
  const auto one = build_profiles(log, window);
  set_thread_count(4);
  const auto four = build_profiles(log, window);
  set_thread_count(1);
  CHECK(one == four);
}

TEST_CASE("window limits the profiles") {
  std::vector<EventRecord> log{event(1, 10, EventKind::kDownload, kDev, "app_0"),
                               event(2, 5000, EventKind::kDownload, kDev, "app_0")};
  const auto p = build_profiles(log, labeling::Window{1000, 6000});
  CHECK(p.devices.at(kDev).first_seen_ts == 5000);
  CHECK(p.devices.at(kDev).total_downloads == 1);
}

TEST_CASE("export_matrix rows and column sets") {
  std::vector<EventRecord> log;
  for (int i = 0; i < 10; ++i) {
    log.push_back(event(static_cast<std::uint64_t>(i + 1), 1000 + i, EventKind::kDownload, hex16(static_cast<std::uint64_t>(i)),
                        i < 4 ? "app_0" : "app_1"));
  }
  for (int i = 0; i < 4; ++i) log[static_cast<std::size_t>(i)].vendor_verified = false;
  const auto catalog = catalog_for(2);
  const auto labels = labeling::build_labels(log);
  const auto all = export_matrix(log, labels, catalog);
  CHECK(all.rows() == 10);
  CHECK(all.features.cols() == registry().size());
  CHECK(std::count(all.labels.begin(), all.labels.end(), 1) == 4);
  const auto dev = export_matrix(log, labels, catalog, FeatureSet::kDevice);
  CHECK(dev.rows() == 10);
  CHECK(dev.features.cols() < all.features.cols());
  CHECK(manifest_json(FeatureSet::kAll) == manifest_json(FeatureSet::kAll));
  CHECK(manifest_json(FeatureSet::kAll).find("\"is_new_device\"") != std::string::npos);

  const auto text = write_matrix_csv(all);
  const auto back = parse_matrix_csv(text);
  CHECK(back.features.names() == all.features.names());
  CHECK(back.labels == all.labels);
  CHECK(back.event_ids == all.event_ids);
  CHECK(write_matrix_csv(back) == text);
}

TEST_CASE("bot rows are almost always new devices") {
  sim::SimConfig c;
  c.n_apps = 300;
  c.n_devices = 1000;
  c.legit_downloads = 0;
  c.bots.n_downloads = 2000;
  c.bots.n_target_apps = 20;
  c.crowd.enabled = false;
  const auto out = sim::simulate(c);
  const auto labels = labeling::build_labels(out.log);
  const auto m = export_matrix(out.log, labels, out.catalog);
  REQUIRE(m.rows() > 0);
  const auto col = column("is_new_device");
  std::size_t pos = 0;
  std::size_t fresh = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (m.labels[r] != 1) continue;
    ++pos;
    fresh += m.features.at(r, col) == 1.0;
  }
  CHECK(pos == 2000);
  CHECK(static_cast<double>(fresh) / static_cast<double>(pos) >= 0.99);
}
