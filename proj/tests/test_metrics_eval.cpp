#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "fraudlab/ablation.hpp"
#include "fraudlab/analysis.hpp"
#include "fraudlab/errors.hpp"
#include "fraudlab/features.hpp"
#include "fraudlab/metrics.hpp"
#include "fraudlab/rng.hpp"
#include "fraudlab/type1_filter.hpp"

using namespace fraudlab;
using namespace fraudlab::eval;

namespace {

// Pairwise definition: P(score_pos > score_neg) + 0.5 P(tie).
double brute_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  long long twice_wins = 0;
  long long pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      ++pairs;
      if (s[i] > s[j]) twice_wins += 2;
      else if (s[i] == s[j]) twice_wins += 1;
    }
  }
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pairs));
}

EventRecord rec(std::uint64_t id, EventKind kind, Source source, const std::string& device, std::int64_t ts = 0,
                const std::string& app = "app_1") {
  EventRecord r;
  r.event_id = id;
  r.ts = ts;
  r.kind = kind;
  r.source = source;
  r.device_id = device;
  r.app_id = app;
  r.ip_hash = hex16(id);
  return r;
}

LabeledMatrix toy_matrix(std::uint64_t seed, std::size_t n_apps, std::size_t rows_per_app) {
  LabeledMatrix m;
  m.features = FeatureMatrix(features::feature_names());
  Rng rng(seed, 2);
  std::uint64_t id = 1;
  for (std::size_t a = 0; a < n_apps; ++a) {
    const bool pos = a % 5 == 0;
    for (std::size_t k = 0; k < rows_per_app; ++k) {
      std::vector<double> row(m.features.cols());
      for (auto& v : row) v = rng.normal(0, 1);
      row[0] = pos ? (rng.bernoulli(0.95) ? 1 : 0) : (rng.bernoulli(0.02) ? 1 : 0);
      m.features.append_row(row);
      m.labels.push_back(pos ? 1 : 0);
      m.event_ids.push_back(id++);
      m.app_ids.push_back("app_" + std::to_string(a));
    }
  }
  return m;
}

}  // namespace

TEST_CASE("confusion metrics example") {
  const std::vector<double> s{0.9, 0.8, 0.3};
  const std::vector<std::uint8_t> y{1, 0, 1};
  const auto m = confusion_metrics(s, y);
  CHECK(m.counts.tp == 1);
  CHECK(m.counts.fp == 1);
  CHECK(m.counts.fn == 1);
  CHECK(m.counts.tn == 0);
  CHECK(*m.precision == 0.5);
  CHECK(*m.recall == 0.5);
  CHECK(*m.f1 == 0.5);
  CHECK(*m.accuracy == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("threshold is inclusive") {
  const auto m = confusion_metrics(std::vector<double>{0.5}, std::vector<std::uint8_t>{1});
  CHECK(m.counts.tp == 1);
}

TEST_CASE("undefined metrics stay undefined") {
  const auto none = confusion_metrics(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{0, 0});
  CHECK_FALSE(none.precision);
  CHECK_FALSE(none.recall);
  CHECK_FALSE(none.f1);
  CHECK(*none.accuracy == 1.0);
  CHECK(format_metric(none.precision) == "undefined");
  CHECK(format_metric(0.25) == "0.25");
  const auto wrong = confusion_metrics(std::vector<double>{0.9, 0.1}, std::vector<std::uint8_t>{0, 1});
  CHECK(*wrong.precision == 0.0);
  CHECK(*wrong.recall == 0.0);
  CHECK_FALSE(wrong.f1);
  CHECK_THROWS_AS(confusion_metrics(std::vector<double>{}, std::vector<std::uint8_t>{}), DataError);
  CHECK_THROWS_AS(confusion_metrics(std::vector<double>{0.1}, std::vector<std::uint8_t>{1, 0}), DataError);
}

TEST_CASE("auc examples") {
  CHECK(auc(std::vector<double>{0.8, 0.6, 0.4}, std::vector<std::uint8_t>{1, 0, 1}) == 0.5);
  CHECK(auc(std::vector<double>{0.9, 0.1}, std::vector<std::uint8_t>{1, 0}) == 1.0);
  CHECK(auc(std::vector<double>{0.1, 0.9}, std::vector<std::uint8_t>{1, 0}) == 0.0);
  CHECK(auc(std::vector<double>{0.3, 0.3}, std::vector<std::uint8_t>{1, 0}) == 0.5);
  CHECK_THROWS_AS(auc(std::vector<double>{0.3, 0.4}, std::vector<std::uint8_t>{1, 1}), DataError);
}

TEST_CASE("auc oracle: pairwise brute force on inputs up to 200 points") {
  Rng rng(77, 1);
  int compared = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t n = rng.below(199) + 2;
    // Small value ranges force many ties.
    const std::uint64_t levels = trial % 3 == 0 ? 3 : (trial % 3 == 1 ? 20 : 1000000);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(levels)) / static_cast<double>(levels);
      y[i] = rng.bernoulli(0.3) ? 1 : 0;
    }
    if (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), 0) == 0) continue;
    CHECK(auc(s, y) == brute_auc(s, y));
    ++compared;
  }
  CHECK(compared > 2500);
}

TEST_CASE("auc invariances") {
  Rng rng(5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = rng.below(100) + 10;
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(30));
      y[i] = i % 2 == 0 ? 1 : 0;
    }
    const double base = auc(s, y);
    std::vector<double> mono(n);
    std::vector<double> neg(n);
    for (std::size_t i = 0; i < n; ++i) {
      mono[i] = std::exp(s[i] / 10.0) * 3.0 + 1.0;
      neg[i] = -s[i];
    }
    CHECK(auc(mono, y) == base);
    CHECK(auc(neg, y) == doctest::Approx(1.0 - base).epsilon(1e-12));
    // Permuting the points changes nothing.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = n - 1 - i;
    std::vector<double> ps(n);
    std::vector<std::uint8_t> py(n);
    for (std::size_t i = 0; i < n; ++i) {
      ps[i] = s[idx[i]];
      py[i] = y[idx[i]];
    }
    CHECK(auc(ps, py) == base);
  }
}

TEST_CASE("pr curve") {
  const std::vector<double> s{0.9, 0.8, 0.8, 0.1};
  const std::vector<std::uint8_t> y{1, 0, 1, 0};
  const auto pr = pr_curve(s, y);
  REQUIRE(pr.size() == 3);
  CHECK(pr[0].threshold == 0.9);
  CHECK(*pr[0].precision == 1.0);
  CHECK(pr[0].recall == 0.5);
  CHECK(pr[1].threshold == 0.8);
  CHECK(*pr[1].precision == doctest::Approx(2.0 / 3.0));
  CHECK(pr[1].recall == 1.0);
  CHECK(pr[2].recall == 1.0);
}

TEST_CASE("type-1 filter reasons") {
  std::vector<EventRecord> log;
  log.push_back(rec(1, EventKind::kDownload, Source::kPortal, ""));
  log.push_back(rec(2, EventKind::kDownload, Source::kNull, "aaaa"));
  log.push_back(rec(3, EventKind::kDownload, Source::kClient, ""));
  log.push_back(rec(4, EventKind::kDownload, Source::kClient, "bbbb"));
  log.push_back(rec(5, EventKind::kSearch, Source::kClient, "bbbb"));
  // 101 distinct devices updating one app in one hour; 1 device in another hour.
  for (std::uint64_t i = 0; i < 101; ++i) {
    log.push_back(rec(100 + i, EventKind::kUpdate, Source::kUpdate, hex16(i), 7200 + static_cast<std::int64_t>(i)));
  }
  log.push_back(rec(500, EventKind::kUpdate, Source::kUpdate, hex16(1), 3 * 3600));
  const auto flags = type1_rule_filter(log);
  REQUIRE(flags.size() == 104);
  CHECK(flags[0].event_id == 1);
  CHECK(flags[0].reason == Type1Reason::kPortalSource);
  CHECK(flags[1].reason == Type1Reason::kNullSource);
  CHECK(flags[2].reason == Type1Reason::kMissingDevice);
  CHECK(flags[3].reason == Type1Reason::kUpdateBurst);
  CHECK(flags.back().event_id == 200);

  Type1FilterParams loose;
  loose.burst_rate = 101;
  CHECK(type1_rule_filter(log, loose).size() == 3);

  const auto kept = remove_flagged(log, flags);
  CHECK(kept.size() == log.size() - flags.size());
  CHECK(kept[0].event_id == 4);
  CHECK(flags_csv(std::span(flags).first(2)) == "event_id,reason\n1,portal_source\n2,null_source\n");
}

TEST_CASE("app-disjoint split") {
  const auto m = toy_matrix(1, 50, 7);
  const auto s = split_by_app(m, {0.7, 3});
  CHECK(s.train.rows() + s.test.rows() == m.rows());
  CHECK(s.train_apps + s.test_apps == 50);
  CHECK(s.train_apps == 35);
  std::set<std::string> train_apps(s.train.app_ids.begin(), s.train.app_ids.end());
  for (const auto& a : s.test.app_ids) CHECK_FALSE(train_apps.count(a));
  CHECK(class_counts(s.train.labels).n_pos > 0);
  CHECK(class_counts(s.test.labels).n_pos > 0);
  CHECK_NOTHROW(check_app_disjoint(s.train, s.test));
  CHECK_THROWS_AS(check_app_disjoint(s.train, s.train), DataError);

  const auto again = split_by_app(m, {0.7, 3});
  CHECK(again.train.event_ids == s.train.event_ids);
  const auto other = split_by_app(m, {0.7, 4});
  CHECK(other.train.event_ids != s.train.event_ids);

  LabeledMatrix bare = m;
  bare.app_ids.clear();
  CHECK_THROWS_AS(split_by_app(bare, {0.7, 3}), DataError);
}

TEST_CASE("ablation runs every set on the same rows") {
  const auto m = toy_matrix(2, 60, 10);
  const auto s = split_by_app(m, {0.7, 1});
  trees::TrainParams p;
  p.n_trees = 20;
  p.max_depth = 3;
  const auto rep = run_ablation(s.train, s.test, features::kAllSets, p);
  REQUIRE(rep.rows.size() == 5);
  CHECK(rep.rows[4].set == features::FeatureSet::kAll);
  CHECK(rep.rows[4].n_features == features::feature_names().size());
  CHECK(rep.test_balance.n_pos + rep.test_balance.n_neg == s.test.rows());
  // is_new_device carries the signal and sits in the device and new sets.
  CHECK(*rep.rows[0].metrics.f1 > 0.75);
  CHECK(*rep.rows[0].metrics.f1 > *rep.rows[3].metrics.f1);
  const auto csv = ablation_csv(rep);
  CHECK(csv.rfind("feature_set,precision,recall,f1,auc,accuracy\ndevice,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(pr_curves_csv(rep).rfind("feature_set,threshold,precision,recall\n", 0) == 0);
  CHECK(ablation_csv(run_ablation(s.train, s.test, features::kAllSets, p)) == csv);
  CHECK_THROWS_AS(run_ablation(s.train, s.train, features::kAllSets, p), DataError);
}

TEST_CASE("analysis helpers") {
  CHECK(rating_bin(1.0) == 0);
  CHECK(rating_bin(2.0) == 1);
  CHECK(rating_bin(3.99) == 2);
  CHECK(rating_bin(5.0) == 3);
  std::array<double, kCategoryCount> share{};
  share[0] = 0.3;
  share[1] = 0.25;
  share[2] = 0.45;
  CHECK(finance_game_share(share) == doctest::Approx(0.55));
  CHECK(mode_bin(std::array<double, 4>{0.1, 0.4, 0.4, 0.1}) == 1);
  CHECK(coefficient_of_variation(std::vector<double>{1, 1, 1, 1}) == 0.0);
  CHECK(coefficient_of_variation(std::vector<double>{0, 0}) == 0.0);
  CHECK(coefficient_of_variation(std::vector<double>{0, 2}) == doctest::Approx(1.0));
}

TEST_CASE("comparative analysis on a tiny log") {
  AppCatalog cat;
  cat.add({"app_a", Category::kFinance, 4.5, 0});
  cat.add({"app_b", Category::kTools, 3.1, 0});
  cat.add({"app_c", Category::kGame, 2.2, 0});
  std::vector<EventRecord> log;
  labeling::EventLabels labels;
  for (std::uint64_t i = 0; i < 24; ++i) {
    log.push_back(rec(i + 1, EventKind::kDownload, Source::kClient, hex16(i), static_cast<std::int64_t>(i) * 3600,
                      "app_a"));
    labels[i + 1] = labeling::Label::kPositive;
  }
  for (std::uint64_t i = 0; i < 10; ++i) {
    log.push_back(rec(100 + i, EventKind::kDownload, Source::kClient, hex16(i), 12 * 3600, "app_b"));
    labels[100 + i] = labeling::Label::kNegative;
  }
  log.push_back(rec(200, EventKind::kDownload, Source::kClient, hex16(1), 0, "app_c"));
  labels[200] = labeling::Label::kExcluded;
  const auto rep = comparative_analysis(log, cat, labels);
  CHECK(rep.n_suspicious_apps == 1);
  CHECK(rep.n_normal_apps == 1);
  CHECK(rep.n_positive_records == 24);
  CHECK(rep.n_negative_records == 10);
  CHECK(finance_game_share(rep.suspicious_category_share) == 1.0);
  CHECK(finance_game_share(rep.all_category_share) == doctest::Approx(2.0 / 3.0));
  CHECK(mode_bin(rep.suspicious_rating_hist) == 3);
  CHECK(mode_bin(rep.normal_rating_hist) == 2);
  CHECK(coefficient_of_variation(rep.positive_hourly) == doctest::Approx(0.0));
  CHECK(coefficient_of_variation(rep.negative_hourly) > 1.0);
  CHECK(rating_hist_csv(rep).rfind("bin,suspicious_share,normal_share\n[1,2),0,0\n", 0) == 0);
  CHECK(analysis_json(rep).find("\"suspicious_rating_mode\": \"[4,5]\"") != std::string::npos);
}
