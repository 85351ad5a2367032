#include "fraudlab/analysis.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "fraudlab/csv.hpp"

namespace fraudlab::eval {

namespace {

template <std::size_t N>
void normalize(std::array<double, N>& hist) {
  const double total = std::accumulate(hist.begin(), hist.end(), 0.0);
  if (total <= 0.0) return;
  for (auto& v : hist) v /= total;
}

const char* const kRatingBinNames[kRatingBins] = {"[1,2)", "[2,3)", "[3,4)", "[4,5]"};

}  // namespace

std::size_t rating_bin(double rating) {
  if (rating < 2.0) return 0;
  if (rating < 3.0) return 1;
  if (rating < 4.0) return 2;
  return 3;
}

AnalysisReport comparative_analysis(std::span<const EventRecord> log, const AppCatalog& catalog,
                                    const labeling::EventLabels& labels, std::span<const Type1Flag> type1_flags) {
  AnalysisReport rep;
  rep.n_catalog_apps = catalog.size();
  std::set<std::string> suspicious;
  std::set<std::string> normal;
  for (const auto& r : log) {
    const auto it = labels.find(r.event_id);
    if (it == labels.end() || it->second == labeling::Label::kExcluded) continue;
    const auto hour = static_cast<std::size_t>(((r.ts % 86400) + 86400) % 86400 / 3600);
    if (it->second == labeling::Label::kPositive) {
      suspicious.insert(r.app_id);
      rep.positive_hourly[hour] += 1;
      ++rep.n_positive_records;
    } else {
      normal.insert(r.app_id);
      rep.negative_hourly[hour] += 1;
      ++rep.n_negative_records;
    }
  }
  rep.n_suspicious_apps = suspicious.size();
  rep.n_normal_apps = normal.size();
  for (const auto& e : catalog.entries()) rep.all_category_share[static_cast<std::size_t>(e.category)] += 1;
  for (const auto& app : suspicious) {
    const auto& e = catalog.at(app);
    rep.suspicious_category_share[static_cast<std::size_t>(e.category)] += 1;
    rep.suspicious_rating_hist[rating_bin(e.rating)] += 1;
  }
  for (const auto& app : normal) rep.normal_rating_hist[rating_bin(catalog.at(app).rating)] += 1;
  normalize(rep.all_category_share);
  normalize(rep.suspicious_category_share);
  normalize(rep.suspicious_rating_hist);
  normalize(rep.normal_rating_hist);
  normalize(rep.positive_hourly);
  normalize(rep.negative_hourly);
  for (const auto& f : type1_flags) ++rep.type1_hits[std::string(to_string(f.reason))];
  return rep;
}

double finance_game_share(const std::array<double, kCategoryCount>& share) {
  return share[static_cast<std::size_t>(Category::kFinance)] + share[static_cast<std::size_t>(Category::kGame)];
}

double coefficient_of_variation(std::span<const double> hist) {
  if (hist.empty()) return 0.0;
  const double n = static_cast<double>(hist.size());
  const double mean = std::accumulate(hist.begin(), hist.end(), 0.0) / n;
  if (mean == 0.0) return 0.0;
  double ss = 0.0;
  for (double v : hist) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n) / mean;
}

std::string category_dist_csv(const AnalysisReport& rep) {
  std::string out = "category,suspicious_share,all_share\n";
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    out.append(to_string(static_cast<Category>(c))).push_back(',');
    csv::append_double(out, rep.suspicious_category_share[c]);
    out.push_back(',');
    csv::append_double(out, rep.all_category_share[c]);
    out.push_back('\n');
  }
  return out;
}

std::string rating_hist_csv(const AnalysisReport& rep) {
  std::string out = "bin,suspicious_share,normal_share\n";
  for (std::size_t b = 0; b < kRatingBins; ++b) {
    out.append(kRatingBinNames[b]).push_back(',');
    csv::append_double(out, rep.suspicious_rating_hist[b]);
    out.push_back(',');
    csv::append_double(out, rep.normal_rating_hist[b]);
    out.push_back('\n');
  }
  return out;
}

std::string hourly_hist_csv(const AnalysisReport& rep) {
  std::string out = "hour,positive_share,negative_share\n";
  for (std::size_t h = 0; h < 24; ++h) {
    out.append(std::to_string(h)).push_back(',');
    csv::append_double(out, rep.positive_hourly[h]);
    out.push_back(',');
    csv::append_double(out, rep.negative_hourly[h]);
    out.push_back('\n');
  }
  return out;
}

std::string analysis_json(const AnalysisReport& rep) {
  nlohmann::ordered_json j;
  j["n_catalog_apps"] = rep.n_catalog_apps;
  j["n_suspicious_apps"] = rep.n_suspicious_apps;
  j["n_normal_apps"] = rep.n_normal_apps;
  j["n_positive_records"] = rep.n_positive_records;
  j["n_negative_records"] = rep.n_negative_records;
  j["finance_game_share_suspicious"] = finance_game_share(rep.suspicious_category_share);
  j["finance_game_share_all"] = finance_game_share(rep.all_category_share);
  j["suspicious_rating_mode"] = rep.n_suspicious_apps ? kRatingBinNames[mode_bin(rep.suspicious_rating_hist)] : "undefined";
  j["normal_rating_mode"] = rep.n_normal_apps ? kRatingBinNames[mode_bin(rep.normal_rating_hist)] : "undefined";
  j["positive_hourly_cv"] = coefficient_of_variation(rep.positive_hourly);
  j["negative_hourly_cv"] = coefficient_of_variation(rep.negative_hourly);
  j["type1_hits"] = rep.type1_hits;
  return j.dump(2) + "\n";
}

}  // namespace fraudlab::eval
