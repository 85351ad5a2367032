#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fraudlab/ablation.hpp"
#include "fraudlab/config.hpp"
#include "fraudlab/features.hpp"
#include "fraudlab/gbt.hpp"
#include "fraudlab/importance.hpp"
#include "fraudlab/labeling.hpp"
#include "fraudlab/type1_filter.hpp"

namespace fraudlab::cli {

// Settings for every stage after simulation, read from the [label], [split],
// [train], [importance] and [filter] sections.
struct PipelineConfig {
  double label_threshold = 0.5;
  bool fold_excluded = false;
  // Drop records the type-1 rule filter flags before labeling. Those records
  // are trivially detectable and would otherwise form a separate suspicious app.
  bool prefilter_type1 = true;
  std::size_t sample_days = 0;  // 0 keeps every day
  std::uint64_t sample_seed = 0;
  eval::Type1FilterParams filter;
  eval::SplitParams split;
  trees::TrainParams train;
  trees::ForestParams importance;
  // Rows drawn (seeded, without replacement) for the importance forest; 0 keeps all.
  std::size_t importance_max_rows = 0;
};

PipelineConfig pipeline_config_from(const ConfigFile& file);

// Log as seen by labeling and features: prefiltered, then day-sampled.
std::vector<EventRecord> prepare_log(std::span<const EventRecord> log, const PipelineConfig& cfg);
labeling::LabelSet label_log(std::span<const EventRecord> prepared, const PipelineConfig& cfg);

// Seeded row sample for the importance forest.
LabeledMatrix importance_rows(const LabeledMatrix& m, const PipelineConfig& cfg);

struct SimulateArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

struct LabelArgs {
  std::string log_path;
  std::string out_dir;
  std::string config_path;  // optional
  std::optional<double> threshold;
  bool no_prefilter = false;
  bool fold_excluded = false;
};

struct FeaturizeArgs {
  std::string log_path;
  std::string catalog_path;
  std::string labels_path;
  std::string out_dir;
  std::string config_path;
  std::string feature_set = "all";
  std::string split = "all";  // all, train or test
  bool no_prefilter = false;
};

struct TrainArgs {
  std::string matrix_path;
  std::string out_dir;
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

struct EvaluateArgs {
  std::string model_path;
  std::string matrix_path;
  std::string out_dir;
  double threshold = 0.5;
};

struct AblateArgs {
  std::string log_path;
  std::string catalog_path;
  std::string out_dir;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool no_prefilter = false;
};

struct AnalyzeArgs {
  std::string log_path;
  std::string catalog_path;
  std::string labels_path;
  std::string out_dir;
  std::string config_path;
};

struct FilterArgs {
  std::string log_path;
  std::string out_dir;
  std::string config_path;
  std::optional<std::string> truth_path;
};

struct ImportanceArgs {
  std::string matrix_path;
  std::string out_dir;
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

void cmd_simulate(const SimulateArgs& args);
void cmd_label(const LabelArgs& args);
void cmd_featurize(const FeaturizeArgs& args);
void cmd_train(const TrainArgs& args);
void cmd_evaluate(const EvaluateArgs& args);
void cmd_ablate(const AblateArgs& args);
void cmd_analyze(const AnalyzeArgs& args);
void cmd_filter_type1(const FilterArgs& args);
void cmd_importance(const ImportanceArgs& args);

// One JSON line describing err, as printed on stderr by the binary.
std::string error_json(const std::exception& err);

}  // namespace fraudlab::cli
