#include "fraudlab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <tuple>

#include "fraudlab/errors.hpp"

namespace fraudlab::sim {

namespace {

constexpr std::uint64_t kStreamCatalog = 1;
constexpr std::uint64_t kStreamLegit = 2;
constexpr std::uint64_t kStreamDevices = 3;
constexpr std::uint64_t kStreamFarmBase = 100;
constexpr std::uint64_t kStreamBots = 200;
constexpr std::uint64_t kStreamCrowd = 300;

double hour_of(std::int64_t ts) {
  const std::int64_t s = ((ts % kDay) + kDay) % kDay;
  return static_cast<double>(s) / static_cast<double>(kHour);
}

double round_rating(double r) {
  r = std::clamp(r, 1.0, 5.0);
  return std::round(r * 10.0) / 10.0;
}

bool is_finance_or_game(Category c) { return c == Category::kFinance || c == Category::kGame; }

std::int64_t diurnal_ts(Rng& rng, std::int64_t lo, std::int64_t hi, double night) {
  while (true) {
    const std::int64_t t = rng.between(lo, hi);
    if (rng.uniform() < diurnal_intensity(hour_of(t), night)) return t;
  }
}

// Prefix-sum sampler over the organic apps.
class PopularityPicker {
 public:
  explicit PopularityPicker(const Market& market) {
    cumulative_.reserve(static_cast<std::size_t>(market.organic_apps));
    double total = 0.0;
    for (std::int64_t i = 0; i < market.organic_apps; ++i) {
      total += market.popularity[static_cast<std::size_t>(i)];
      cumulative_.push_back(total);
    }
  }

  std::size_t pick(Rng& rng) const {
    const double target = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

// App drawn by organic popularity among those already released at ts.
std::size_t pick_released_app(const Market& market, const PopularityPicker& picker, Rng& rng, std::int64_t ts) {
  const auto& entries = market.catalog.entries();
  for (int attempt = 0; attempt < 64; ++attempt) {
    const std::size_t idx = picker.pick(rng);
    if (entries[idx].release_ts <= ts) return idx;
  }
  for (std::int64_t i = 0; i < market.organic_apps; ++i) {
    if (entries[static_cast<std::size_t>(i)].release_ts <= ts) return static_cast<std::size_t>(i);
  }
  return 0;
}

EventRecord make_record(std::int64_t ts, EventKind kind, const std::string& device, bool vendor,
                        const std::string& app, const std::string& ip, Source source) {
  EventRecord r;
  r.ts = ts;
  r.kind = kind;
  r.device_id = device;
  r.vendor_verified = vendor;
  r.app_id = app;
  r.ip_hash = ip;
  r.source = source;
  return r;
}

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(what + " must lie in [0, 1]");
}

template <std::size_t N>
void check_simplex(const std::array<double, N>& v, const std::string& what) {
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0)) throw ConfigError(what + " has a negative entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(what + " must sum to 1 (got " + std::to_string(sum) + ")");
}

std::string_view type_name(FraudType t) {
  switch (t) {
    case FraudType::kLegit: return "legit";
    case FraudType::kType1: return "type1";
    case FraudType::kType2: return "type2";
    case FraudType::kType3: return "type3";
  }
  return "legit";
}

}  // namespace

double diurnal_intensity(double hour, double night) {
  // Knots over [1, 25): the post-midnight ramp wraps from the 20:00 peak.
  struct Knot {
    double hour;
    double weight;
  };
  const Knot knots[] = {{1.0, night}, {7.0, night}, {12.0, 1.0}, {16.0, 0.7}, {20.0, 1.0}, {25.0, night}};
  double h = std::fmod(hour, 24.0);
  if (h < 0.0) h += 24.0;
  if (h < 1.0) h += 24.0;
  for (std::size_t i = 1; i < std::size(knots); ++i) {
    if (h <= knots[i].hour) {
      const double t = (h - knots[i - 1].hour) / (knots[i].hour - knots[i - 1].hour);
      return knots[i - 1].weight + t * (knots[i].weight - knots[i - 1].weight);
    }
  }
  return night;
}

void validate(const SimConfig& c) {
  if (c.horizon_days < 1) throw ConfigError("horizon_days must be >= 1");
  if (c.history_days < 0 || c.history_days >= c.horizon_days) {
    throw ConfigError("history_days must lie in [0, horizon_days)");
  }
  if (c.start_ts < 0) throw ConfigError("start_ts must be >= 0");
  if (c.n_apps < 1) throw ConfigError("n_apps must be >= 1");
  if (c.n_devices < 0 || c.legit_downloads < 0) throw ConfigError("n_devices and legit_downloads must be >= 0");
  if (c.legit_downloads > 0 && c.n_devices < 1) {
    throw ConfigError("legit traffic needs at least one device (n_devices = 0)");
  }
  check_probability(c.new_app_fraction, "new_app_fraction");
  check_probability(c.suspicious_category_boost, "suspicious_category_boost");
  check_probability(c.night_attenuation, "night_attenuation");
  check_probability(c.target_popularity_quantile, "target_popularity_quantile");
  check_simplex(c.category_mix, "category_mix");
  if (!(c.normal_rating.stddev >= 0.0) || !(c.fraud_rating.stddev >= 0.0)) {
    throw ConfigError("rating stddev must be >= 0");
  }
  if (!(c.popularity_sigma >= 0.0)) throw ConfigError("popularity_sigma must be >= 0");

  const auto& l = c.legit;
  check_probability(l.search_prob, "legit.search_prob");
  check_probability(l.view_prob, "legit.view_prob");
  check_probability(l.install_prob, "legit.install_prob");
  check_probability(l.update_prob, "legit.update_prob");
  check_probability(l.new_device_fraction, "legit.new_device_fraction");
  check_probability(l.home_ip_prob, "legit.home_ip_prob");
  if (l.mobile_ip_pool < 1) throw ConfigError("legit.mobile_ip_pool must be >= 1");
  if (!(l.app_spread >= 0.0 && l.app_spread <= 1.0)) throw ConfigError("legit.app_spread must lie in [0, 1]");

  const std::int64_t activity_seconds = (c.horizon_days - c.history_days) * kDay;
  for (const auto& f : c.farms) {
    if (!f.enabled) continue;
    if (f.n_downloads < 0) throw ConfigError(f.name + ": n_downloads must be >= 0");
    if (!(f.duration_hours > 0.0 && f.duration_hours <= 24.0)) {
      throw ConfigError(f.name + ": duration_hours must lie in (0, 24]");
    }
    if (!f.distinct_ips) throw ConfigError(f.name + ": farms always use distinct IPs");
    const double offset = f.start_offset_hours.value_or(0.0);
    if (offset < 0.0 || (offset + f.duration_hours) * kHour > static_cast<double>(activity_seconds)) {
      throw ConfigError(f.name + ": farm run does not fit in the activity window");
    }
  }

  const auto& b = c.bots;
  if (b.enabled) {
    if (b.n_downloads < 0) throw ConfigError("type2.n_downloads must be >= 0");
    check_probability(b.search_prob, "type2.search_prob");
    check_probability(b.view_prob, "type2.view_prob");
    check_probability(b.install_prob, "type2.install_prob");
    check_probability(b.target_new_apps_fraction, "type2.target_new_apps_fraction");
    if (b.n_downloads > 0 && b.n_target_apps < 1) throw ConfigError("type2.n_target_apps must be >= 1");
    if (b.n_target_apps > c.n_apps) throw ConfigError("type2.n_target_apps exceeds n_apps");
    if (b.downloads_per_device < 1) throw ConfigError("type2.downloads_per_device must be >= 1");
    if (b.ip_pool < 1) throw ConfigError("type2.ip_pool must be >= 1");
  }

  const auto& w = c.crowd;
  if (w.enabled) {
    if (w.n_workers < 0 || w.tasks_per_worker < 0) throw ConfigError("type3 volumes must be >= 0");
    check_simplex(w.task_mix, "type3.task_mix");
    if (w.n_workers > c.n_devices) {
      throw ConfigError("type3.n_workers (" + std::to_string(w.n_workers) + ") exceeds n_devices (" +
                        std::to_string(c.n_devices) + ")");
    }
  }
}

Clock make_clock(const SimConfig& c) {
  Clock clock;
  clock.start = c.start_ts;
  clock.activity_start = c.start_ts + c.history_days * kDay;
  clock.end = c.start_ts + c.horizon_days * kDay;
  clock.night_attenuation = c.night_attenuation;
  return clock;
}

Market build_market(const SimConfig& c, const Clock& clock, Rng& rng) {
  Market market;
  const std::int64_t new_lo = std::max(clock.start, clock.activity_start - 7 * kDay);
  const std::int64_t new_hi = std::max(new_lo + 1, clock.end - kDay);
  const std::int64_t old_lo = std::max<std::int64_t>(0, clock.start - 730 * kDay);
  const std::int64_t old_hi = std::max(old_lo + 1, clock.start);
  Rng engagement_rng = rng.fork(4);
  const double spread = c.legit.app_spread;
  for (std::int64_t i = 0; i < c.n_apps; ++i) {
    market.engagement.push_back(engagement_rng.uniform(1.0 - spread, 1.0 + spread));
    AppCatalogEntry e;
    e.app_id = "app_" + std::to_string(i + 1);
    e.category = static_cast<Category>(rng.categorical(c.category_mix));
    e.rating = round_rating(rng.normal(c.normal_rating.mean, c.normal_rating.stddev));
    e.release_ts = rng.bernoulli(c.new_app_fraction) ? rng.between(new_lo, new_hi) : rng.between(old_lo, old_hi);
    market.popularity.push_back(std::exp(rng.normal(0.0, c.popularity_sigma)));
    market.catalog.add(std::move(e));
  }
  market.organic_apps = c.n_apps;
  const bool any_farm = std::any_of(c.farms.begin(), c.farms.end(), [](const FarmProfile& f) { return f.enabled; });
  if (any_farm) {
    // The honeypot is listed but never reached by organic traffic.
    AppCatalogEntry honeypot;
    honeypot.app_id = std::string(kHoneypotApp);
    honeypot.category = Category::kGame;
    honeypot.rating = 3.0;
    honeypot.release_ts = clock.activity_start - kDay;
    market.catalog.add(std::move(honeypot));
    market.popularity.push_back(0.0);
    market.engagement.push_back(1.0);
  }
  return market;
}

DevicePool build_device_pool(const SimConfig& c, const Clock& clock, const Market& market, Rng& rng,
                             std::vector<SimEvent>& events) {
  DevicePool pool;
  pool.devices.reserve(static_cast<std::size_t>(c.n_devices));
  const std::uint64_t id_salt = rng.next();
  pool.mobile_ip_salt = mix64(id_salt ^ 0x6d6f62696c650000ULL);
  const auto& entries = market.catalog.entries();
  for (std::int64_t d = 0; d < c.n_devices; ++d) {
    DevicePool::Device dev;
    dev.device_id = hex16(mix64(id_salt ^ static_cast<std::uint64_t>(d)));
    dev.home_ip = hex16(rng.next());
    const bool is_new = rng.bernoulli(c.legit.new_device_fraction);
    dev.activation_ts = is_new ? diurnal_ts(rng, clock.activity_start, clock.end, clock.night_attenuation)
                               : diurnal_ts(rng, clock.start, clock.start + kDay, clock.night_attenuation);
    // Established devices announce themselves with an update check of some
    // installed app. New devices first show up with their own downloads.
    // Redraw until the app exists; a catalog of only future releases gives up.
    std::size_t app = 0;
    bool released = false;
    for (int attempt = 0; attempt < 64 && !released && !is_new; ++attempt) {
      app = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(market.organic_apps)));
      released = entries[app].release_ts <= dev.activation_ts;
    }
    if (released) {
      events.push_back({make_record(dev.activation_ts, EventKind::kUpdate, dev.device_id, true, entries[app].app_id,
                                    dev.home_ip, Source::kUpdate),
                        FraudType::kLegit});
    }
    pool.devices.push_back(std::move(dev));
  }
  return pool;
}

namespace {

// A user session around one download on a vendor device: optional search
// and view before, optional install and later update after.
void emit_user_session(std::vector<SimEvent>& out, Rng& rng, const Clock& clock, const LegitBehavior& behavior,
                       const DevicePool::Device& dev, const std::string& app, double engagement,
                       const std::string& ip, std::int64_t ts, FraudType type, bool always_install,
                       bool emit_update) {
  const auto scaled = [engagement](double p) { return std::clamp(p * engagement, 0.0, 1.0); };
  const bool search = rng.bernoulli(scaled(behavior.search_prob));
  const bool view = rng.bernoulli(scaled(behavior.view_prob));
  const std::int64_t search_ts = ts - rng.between(300, 900);
  const std::int64_t view_ts = ts - rng.between(10, 240);
  const bool install = always_install || rng.bernoulli(scaled(behavior.install_prob));
  std::int64_t install_ts = ts + rng.between(30, 600);
  const bool update = emit_update || rng.bernoulli(behavior.update_prob);
  const std::int64_t update_ts = ts + rng.between(kDay, 5 * kDay);
  if (search) out.push_back({make_record(search_ts, EventKind::kSearch, dev.device_id, true, app, ip, Source::kClient), type});
  if (view) out.push_back({make_record(view_ts, EventKind::kView, dev.device_id, true, app, ip, Source::kClient), type});
  out.push_back({make_record(ts, EventKind::kDownload, dev.device_id, true, app, ip, Source::kClient), type});
  if (always_install) install_ts = std::min(install_ts, clock.end - 1);
  if (install && install_ts < clock.end) {
    out.push_back({make_record(install_ts, EventKind::kInstall, dev.device_id, true, app, ip, Source::kClient), type});
  }
  if (update && update_ts < clock.end) {
    out.push_back({make_record(update_ts, EventKind::kUpdate, dev.device_id, true, app, ip, Source::kUpdate), type});
  }
}

std::string session_ip(Rng& rng, const LegitBehavior& behavior, const DevicePool& pool, const DevicePool::Device& dev) {
  if (rng.bernoulli(behavior.home_ip_prob)) return dev.home_ip;
  return hex16(mix64(pool.mobile_ip_salt ^ rng.below(static_cast<std::uint64_t>(behavior.mobile_ip_pool))));
}

// Download time for a device, no earlier than activation.
std::optional<std::int64_t> device_download_ts(Rng& rng, const Clock& clock, const DevicePool::Device& dev) {
  const std::int64_t lo = std::max(clock.activity_start, dev.activation_ts + 60);
  if (lo >= clock.end) return std::nullopt;
  return diurnal_ts(rng, lo, clock.end, clock.night_attenuation);
}

}  // namespace

std::vector<SimEvent> generate_legit(const SimConfig& c, const Clock& clock, const Market& market,
                                     const DevicePool& pool, Rng& rng) {
  std::vector<SimEvent> out;
  if (c.legit_downloads == 0) return out;
  out.reserve(static_cast<std::size_t>(c.legit_downloads) * 4);
  const PopularityPicker picker(market);
  const auto& entries = market.catalog.entries();
  for (std::int64_t i = 0; i < c.legit_downloads; ++i) {
    std::optional<std::int64_t> ts;
    const DevicePool::Device* dev = nullptr;
    while (!ts) {
      dev = &pool.devices[static_cast<std::size_t>(rng.below(pool.devices.size()))];
      ts = device_download_ts(rng, clock, *dev);
    }
    const std::size_t app = pick_released_app(market, picker, rng, *ts);
    const std::string ip = session_ip(rng, c.legit, pool, *dev);
    emit_user_session(out, rng, clock, c.legit, *dev, entries[app].app_id, market.engagement[app], ip, *ts,
                      FraudType::kLegit, false, false);
  }
  return out;
}

std::vector<SimEvent> inject_type1(const FarmProfile& farm, Rng& rng, const std::string& app_id, const Clock& clock) {
  std::vector<SimEvent> out;
  if (!farm.enabled || farm.n_downloads == 0) return out;
  const auto span = static_cast<std::int64_t>(std::llround(farm.duration_hours * kHour));
  const std::int64_t duration = std::max<std::int64_t>(1, span);
  const std::int64_t t0 =
      farm.start_offset_hours
          ? clock.activity_start + static_cast<std::int64_t>(std::llround(*farm.start_offset_hours * kHour))
          : rng.between(clock.activity_start, std::max(clock.activity_start + 1, clock.end - duration));
  const std::uint64_t ip_salt = rng.next();
  const std::uint64_t device_salt = rng.next();
  EventKind kind = EventKind::kDownload;
  Source source = Source::kPortal;
  switch (farm.source_mode) {
    case FarmSource::kPortal: source = Source::kPortal; break;
    case FarmSource::kUpdate: kind = EventKind::kUpdate; source = Source::kUpdate; break;
    case FarmSource::kNull: source = Source::kNull; break;
  }
  out.reserve(static_cast<std::size_t>(farm.n_downloads));
  for (std::int64_t i = 0; i < farm.n_downloads; ++i) {
    const std::int64_t ts = t0 + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(duration));
    const std::uint64_t key = static_cast<std::uint64_t>(i);
    std::string device;
    switch (farm.device_id_mode) {
      case DeviceIdMode::kNone: break;
      case DeviceIdMode::kNormal: device = hex16(mix64(device_salt ^ key)); break;
      case DeviceIdMode::kAbnormal: device = "00000000" + hex16(mix64(device_salt ^ key)).substr(8); break;
    }
    // mix64 is a bijection, so per-record keys give pairwise-distinct IPs.
    out.push_back({make_record(ts, kind, device, false, app_id, hex16(mix64(ip_salt ^ key)), source),
                   FraudType::kType1});
  }
  return out;
}

namespace {

struct TargetPick {
  std::vector<std::size_t> chosen;
  std::int64_t shortfall = 0;
};

// Draws k apps from pool, round(boost * k) of them Finance/Game when the
// pool allows; the remainder falls back to whichever side still has apps.
TargetPick pick_stratified(std::vector<std::size_t> pool, std::int64_t k, double boost, const AppCatalog& catalog,
                           Rng& rng) {
  std::vector<std::size_t> fg;
  std::vector<std::size_t> rest;
  for (std::size_t idx : pool) {
    (is_finance_or_game(catalog.entries()[idx].category) ? fg : rest).push_back(idx);
  }
  auto draw = [&rng](std::vector<std::size_t>& from, std::int64_t n, std::vector<std::size_t>& into) {
    std::int64_t taken = 0;
    while (taken < n && !from.empty()) {
      const std::size_t j = static_cast<std::size_t>(rng.below(from.size()));
      into.push_back(from[j]);
      from[j] = from.back();
      from.pop_back();
      ++taken;
    }
    return n - taken;
  };
  TargetPick pick;
  const auto want_fg = static_cast<std::int64_t>(std::llround(boost * static_cast<double>(k)));
  draw(fg, want_fg, pick.chosen);
  draw(rest, k - want_fg, pick.chosen);
  const auto have = [&pick] { return static_cast<std::int64_t>(pick.chosen.size()); };
  draw(rest, k - have(), pick.chosen);
  draw(fg, k - have(), pick.chosen);
  pick.shortfall = k - have();
  return pick;
}

}  // namespace

Type2Outcome inject_type2(const BotProfile& bots, Rng& rng, Market& market, const SimConfig& c, const Clock& clock) {
  Type2Outcome outcome;
  if (!bots.enabled || bots.n_downloads == 0) return outcome;
  if (market.organic_apps < 1) throw ConfigError("type2 needs a non-empty catalog");
  const auto& entries = market.catalog.entries();
  const auto n_organic = static_cast<std::size_t>(market.organic_apps);

  std::vector<double> sorted_pop(market.popularity.begin(), market.popularity.begin() + market.organic_apps);
  std::sort(sorted_pop.begin(), sorted_pop.end());
  const std::size_t q_index = std::min(
      n_organic - 1, static_cast<std::size_t>(c.target_popularity_quantile * static_cast<double>(n_organic - 1)));
  const double pop_cut = sorted_pop[q_index];

  const std::int64_t new_lo = clock.activity_start - 7 * kDay;
  std::vector<std::size_t> new_pool;
  std::vector<std::size_t> old_pool;
  for (std::size_t i = 0; i < n_organic; ++i) {
    if (market.popularity[i] > pop_cut) continue;
    if (entries[i].release_ts >= new_lo) {
      new_pool.push_back(i);
    } else {
      old_pool.push_back(i);
    }
  }
  const std::int64_t n_targets = std::min<std::int64_t>(bots.n_target_apps, market.organic_apps);
  const auto n_new =
      static_cast<std::int64_t>(std::llround(bots.target_new_apps_fraction * static_cast<double>(n_targets)));
  TargetPick new_pick = pick_stratified(new_pool, n_new, c.suspicious_category_boost, market.catalog, rng);
  std::vector<std::size_t> new_targets = new_pick.chosen;
  // Missing new targets are made up from established apps.
  TargetPick old_pick = pick_stratified(old_pool, n_targets - static_cast<std::int64_t>(new_targets.size()),
                                        c.suspicious_category_boost, market.catalog, rng);
  std::vector<std::size_t> old_targets = old_pick.chosen;
  outcome.target_pool_shortfall = old_pick.shortfall;
  outcome.new_target_shortfall = new_pick.shortfall;
  if (old_targets.empty() && new_targets.empty()) throw ConfigError("type2: no apps eligible as targets");

  std::sort(new_targets.begin(), new_targets.end(),
            [&entries](std::size_t a, std::size_t b) {
              return std::tie(entries[a].release_ts, a) < std::tie(entries[b].release_ts, b);
            });
  std::sort(old_targets.begin(), old_targets.end());

  if (bots.co_rating_boost) {
    for (std::size_t idx : new_targets) {
      market.catalog.set_rating(entries[idx].app_id, round_rating(rng.normal(c.fraud_rating.mean, c.fraud_rating.stddev)));
    }
    for (std::size_t idx : old_targets) {
      market.catalog.set_rating(entries[idx].app_id, round_rating(rng.normal(c.fraud_rating.mean, c.fraud_rating.stddev)));
    }
  }
  for (std::size_t idx : new_targets) outcome.target_apps.push_back(entries[idx].app_id);
  for (std::size_t idx : old_targets) outcome.target_apps.push_back(entries[idx].app_id);
  std::sort(outcome.target_apps.begin(), outcome.target_apps.end());

  const std::uint64_t device_salt = rng.next();
  const std::uint64_t ip_salt = rng.next();
  outcome.events.reserve(static_cast<std::size_t>(bots.n_downloads) * 3);
  std::string ip;
  auto release_after = [&entries](std::int64_t t, std::size_t idx) { return t < entries[idx].release_ts; };
  // Target for a download at ts; empty only when no target is released yet.
  auto choose_target = [&](std::int64_t ts) -> std::optional<std::size_t> {
    const bool want_new = !new_targets.empty() && (old_targets.empty() || rng.bernoulli(bots.target_new_apps_fraction));
    if (want_new) {
      const auto lo = std::upper_bound(new_targets.begin(), new_targets.end(), ts - kNewWindow, release_after);
      const auto hi = std::upper_bound(new_targets.begin(), new_targets.end(), ts, release_after);
      if (lo < hi) return *(lo + static_cast<std::ptrdiff_t>(rng.below(static_cast<std::uint64_t>(hi - lo))));
      ++outcome.new_app_fallbacks;
      if (hi != new_targets.begin()) return *(hi - 1);  // youngest target already released
    }
    if (old_targets.empty()) return std::nullopt;
    return old_targets[static_cast<std::size_t>(rng.below(old_targets.size()))];
  };

  for (std::int64_t i = 0; i < bots.n_downloads; ++i) {
    std::int64_t ts = 0;
    std::optional<std::size_t> app;
    while (!app) {
      ts = bots.steady_traffic ? rng.between(clock.activity_start, clock.end)
                               : diurnal_ts(rng, clock.activity_start, clock.end, clock.night_attenuation);
      app = choose_target(ts);
    }
    const std::uint64_t device_key = bots.reset_device_per_download
                                         ? static_cast<std::uint64_t>(i)
                                         : static_cast<std::uint64_t>(i / bots.downloads_per_device);
    const std::string device = hex16(mix64(device_salt ^ device_key));
    if (bots.reset_device_per_download || i % bots.downloads_per_device == 0) {
      ip = hex16(mix64(ip_salt ^ rng.below(static_cast<std::uint64_t>(bots.ip_pool))));
    }
    const std::string& app_id = entries[*app].app_id;
    const bool search = rng.bernoulli(bots.search_prob);
    const bool view = rng.bernoulli(bots.view_prob);
    const std::int64_t search_ts = ts - rng.between(120, 600);
    const std::int64_t view_ts = ts - rng.between(5, 100);
    const bool install = rng.bernoulli(bots.install_prob);
    const std::int64_t install_ts = ts + rng.between(20, 300);
    if (search) {
      outcome.events.push_back({make_record(search_ts, EventKind::kSearch, device, false, app_id, ip, Source::kClient),
                                FraudType::kType2});
    }
    if (view) {
      outcome.events.push_back({make_record(view_ts, EventKind::kView, device, false, app_id, ip, Source::kClient),
                                FraudType::kType2});
    }
    outcome.events.push_back({make_record(ts, EventKind::kDownload, device, false, app_id, ip, Source::kClient),
                              FraudType::kType2});
    if (install && install_ts < clock.end) {
      outcome.events.push_back({make_record(install_ts, EventKind::kInstall, device, false, app_id, ip, Source::kClient),
                                FraudType::kType2});
    }
  }
  return outcome;
}

std::vector<SimEvent> inject_type3(const CrowdProfile& crowd, Rng& rng, const Market& market, const DevicePool& pool,
                                   const SimConfig& c, const Clock& clock,
                                   std::map<std::string, std::int64_t>* task_counts) {
  static constexpr const char* kTaskNames[kCrowdTaskCount] = {"registration", "daily_signin", "repost", "add_account",
                                                              "play_game"};
  std::vector<SimEvent> out;
  if (!crowd.enabled || crowd.n_workers == 0 || crowd.tasks_per_worker == 0) return out;
  if (static_cast<std::size_t>(crowd.n_workers) > pool.devices.size()) {
    throw ConfigError("type3.n_workers exceeds the device pool");
  }
  // Workers are real users: distinct pool devices, chosen by partial shuffle.
  std::vector<std::size_t> order(pool.devices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::int64_t w = 0; w < crowd.n_workers; ++w) {
    const auto j = static_cast<std::size_t>(w) +
                   static_cast<std::size_t>(rng.below(order.size() - static_cast<std::size_t>(w)));
    std::swap(order[static_cast<std::size_t>(w)], order[j]);
  }
  const PopularityPicker picker(market);
  const auto& entries = market.catalog.entries();
  for (std::int64_t w = 0; w < crowd.n_workers; ++w) {
    const auto& dev = pool.devices[order[static_cast<std::size_t>(w)]];
    for (std::int64_t t = 0; t < crowd.tasks_per_worker; ++t) {
      std::optional<std::int64_t> ts = device_download_ts(rng, clock, dev);
      if (!ts) ts = clock.end - 1;  // activation at the very end of the log
      const std::size_t app = pick_released_app(market, picker, rng, *ts);
      const auto task = rng.categorical(crowd.task_mix);
      if (task_counts) ++(*task_counts)[kTaskNames[task]];
      const std::string ip = session_ip(rng, c.legit, pool, dev);
      emit_user_session(out, rng, clock, c.legit, dev, entries[app].app_id, market.engagement[app], ip, *ts,
                        FraudType::kType3, true, false);
    }
  }
  return out;
}

SimOutput simulate(const SimConfig& config) {
  validate(config);
  const Clock clock = make_clock(config);

  Rng catalog_rng(config.seed, kStreamCatalog);
  Market market = build_market(config, clock, catalog_rng);

  struct Block {
    std::vector<SimEvent> events;
  };
  std::vector<Block> blocks;

  SimOutput output;
  output.report.seed = config.seed;

  Rng device_rng(config.seed, kStreamDevices);
  Block activation;
  const DevicePool pool = build_device_pool(config, clock, market, device_rng, activation.events);
  blocks.push_back(std::move(activation));

  Rng legit_rng(config.seed, kStreamLegit);
  blocks.push_back({generate_legit(config, clock, market, pool, legit_rng)});

  for (std::size_t i = 0; i < config.farms.size(); ++i) {
    Rng farm_rng(config.seed, kStreamFarmBase + i);
    blocks.push_back({inject_type1(config.farms[i], farm_rng, std::string(kHoneypotApp), clock)});
  }
  if (std::any_of(config.farms.begin(), config.farms.end(), [](const FarmProfile& f) { return f.enabled; })) {
    output.report.honeypot_app = std::string(kHoneypotApp);
  }

  Rng bot_rng(config.seed, kStreamBots);
  Type2Outcome type2 = inject_type2(config.bots, bot_rng, market, config, clock);
  blocks.push_back({std::move(type2.events)});
  output.report.type2_targets = std::move(type2.target_apps);
  output.report.warnings["type2_new_app_fallback"] = type2.new_app_fallbacks;
  output.report.warnings["type2_target_pool_shortfall"] = type2.target_pool_shortfall;
  output.report.warnings["type2_new_target_shortfall"] = type2.new_target_shortfall;

  Rng crowd_rng(config.seed, kStreamCrowd);
  blocks.push_back({inject_type3(config.crowd, crowd_rng, market, pool, config, clock, &output.report.crowd_tasks)});

  // Global order: (ts, block, position within block).
  struct Ref {
    std::int64_t ts;
    std::uint32_t block;
    std::uint32_t index;
  };
  std::vector<Ref> order;
  for (std::uint32_t b = 0; b < blocks.size(); ++b) {
    for (std::uint32_t i = 0; i < blocks[b].events.size(); ++i) {
      order.push_back({blocks[b].events[i].record.ts, b, i});
    }
  }
  std::sort(order.begin(), order.end(), [](const Ref& a, const Ref& b) {
    return std::tie(a.ts, a.block, a.index) < std::tie(b.ts, b.block, b.index);
  });

  output.log.reserve(order.size());
  output.truth.reserve(order.size());
  std::uint64_t next_id = 1;
  for (const Ref& ref : order) {
    SimEvent& ev = blocks[ref.block].events[ref.index];
    ev.record.event_id = next_id++;
    validate(ev.record);
    output.report.event_counts[std::string(type_name(ev.fraud_type)) + "." + std::string(to_string(ev.record.kind))]++;
    output.truth.push_back({ev.record.event_id, ev.fraud_type});
    output.log.push_back(std::move(ev.record));
  }
  output.catalog = std::move(market.catalog);
  return output;
}

std::string report_json(const SimReport& report) {
  nlohmann::ordered_json j;
  j["seed"] = report.seed;
  j["event_counts"] = report.event_counts;
  j["warnings"] = report.warnings;
  j["crowd_tasks"] = report.crowd_tasks;
  j["honeypot_app"] = report.honeypot_app;
  j["type2_targets"] = report.type2_targets;
  return j.dump(2) + "\n";
}

}  // namespace fraudlab::sim
