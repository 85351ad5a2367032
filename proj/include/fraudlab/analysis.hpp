#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "fraudlab/labeling.hpp"
#include "fraudlab/log_model.hpp"
#include "fraudlab/type1_filter.hpp"

namespace fraudlab::eval {

inline constexpr std::size_t kRatingBins = 4;  // [1,2) [2,3) [3,4) [4,5]

// Suspicious apps are those with positive records, normal apps those with
// negative records. Shares and histograms are normalized; a side with no
// members stays all-zero and its has_* flag is false.
struct AnalysisReport {
  std::size_t n_catalog_apps = 0;
  std::size_t n_suspicious_apps = 0;
  std::size_t n_normal_apps = 0;
  std::size_t n_positive_records = 0;
  std::size_t n_negative_records = 0;

  std::array<double, kCategoryCount> suspicious_category_share{};
  std::array<double, kCategoryCount> all_category_share{};
  std::array<double, kRatingBins> suspicious_rating_hist{};
  std::array<double, kRatingBins> normal_rating_hist{};
  std::array<double, 24> positive_hourly{};
  std::array<double, 24> negative_hourly{};

  std::map<std::string, std::size_t> type1_hits;  // by reason
};

std::size_t rating_bin(double rating);

AnalysisReport comparative_analysis(std::span<const EventRecord> log, const AppCatalog& catalog,
                                    const labeling::EventLabels& labels, std::span<const Type1Flag> type1_flags = {});

// Share of Finance and Game in a category distribution.
double finance_game_share(const std::array<double, kCategoryCount>& share);
// Index of the largest bin, earliest on ties.
template <std::size_t N>
std::size_t mode_bin(const std::array<double, N>& hist) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < N; ++i) {
    if (hist[i] > hist[best]) best = i;
  }
  return best;
}
// Population standard deviation over mean; 0 for an all-zero histogram.
double coefficient_of_variation(std::span<const double> hist);

std::string category_dist_csv(const AnalysisReport& report);
std::string rating_hist_csv(const AnalysisReport& report);
std::string hourly_hist_csv(const AnalysisReport& report);
std::string analysis_json(const AnalysisReport& report);

}  // namespace fraudlab::eval
