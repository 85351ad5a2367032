#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fraudlab/commands.hpp"
#include "fraudlab/errors.hpp"
#include "fraudlab/features.hpp"
#include "fraudlab/gbt.hpp"
#include "fraudlab/log_model.hpp"
#include "fraudlab/parallel.hpp"

namespace {

constexpr const char* kExitCodes =
    "\nExit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error\n"
    "  3  missing file\n"
    "  4  parse error\n"
    "  5  config error\n"
    "  6  validation error (record violates a log invariant)\n"
    "  7  data error (single class, unknown app, leaked split, ...)\n"
    "Errors are reported as one JSON line on stderr.\n";

}  // namespace

int main(int argc, char** argv) {
  using namespace fraudlab;
  CLI::App app{"fraudlab: download-fraud detection lab"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker thread cap (output does not depend on it)")->check(CLI::Range(1u, 256u));
  app.set_version_flag("--version",
                       std::string("fraudlab ") + FRAUDLAB_VERSION + "\nlog format " + std::to_string(kLogFormatVersion) +
                           "\nmodel format " + std::to_string(trees::kModelFormatVersion) + "\nfeature registry " +
                           std::to_string(features::kRegistryVersion));

  cli::SimulateArgs sim;
  std::uint64_t sim_seed = 0;
  auto* c_sim = app.add_subcommand("simulate", "Generate a labeled-by-construction event log");
  c_sim->add_option("-c,--config", sim.config_path, "Config file")->required();
  c_sim->add_option("-o,--out", sim.out_dir, "Output directory")->required();
  auto* o_sim_seed = c_sim->add_option("--seed", sim_seed, "Override [sim] seed");

  cli::LabelArgs label;
  double label_threshold = 0.5;
  auto* c_label = app.add_subcommand("label", "Apply the vendor-flag labeling rule");
  c_label->add_option("--log", label.log_path, "Event log CSV")->required();
  c_label->add_option("-o,--out", label.out_dir, "Output directory")->required();
  c_label->add_option("-c,--config", label.config_path, "Config file");
  auto* o_threshold = c_label->add_option("--threshold", label_threshold, "Non-vendor fraction threshold");
  c_label->add_flag("--no-prefilter", label.no_prefilter, "Keep records flagged by the type-1 rule filter");
  c_label->add_flag("--fold-excluded", label.fold_excluded, "Count excluded-band apps as negatives");

  cli::FeaturizeArgs feat;
  auto* c_feat = app.add_subcommand("featurize", "Export the feature matrix");
  c_feat->add_option("--log", feat.log_path, "Event log CSV")->required();
  c_feat->add_option("--catalog", feat.catalog_path, "App catalog CSV")->required();
  c_feat->add_option("--labels", feat.labels_path, "labels.csv from the label command")->required();
  c_feat->add_option("-o,--out", feat.out_dir, "Output directory")->required();
  c_feat->add_option("-c,--config", feat.config_path, "Config file");
  c_feat->add_option("--set", feat.feature_set, "device, app, new, previous or all");
  c_feat->add_option("--split", feat.split, "all, train or test (app-disjoint)");
  c_feat->add_flag("--no-prefilter", feat.no_prefilter, "Keep records flagged by the type-1 rule filter");

  cli::TrainArgs train;
  std::uint64_t train_seed = 0;
  auto* c_train = app.add_subcommand("train", "Train the boosted-tree classifier");
  c_train->add_option("--matrix", train.matrix_path, "Matrix CSV")->required();
  c_train->add_option("-o,--out", train.out_dir, "Output directory")->required();
  c_train->add_option("-c,--config", train.config_path, "Config file");
  auto* o_train_seed = c_train->add_option("--seed", train_seed, "Override [train] seed");

  cli::EvaluateArgs evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "Score a model on a matrix");
  c_eval->add_option("--model", evaluate.model_path, "model.json")->required();
  c_eval->add_option("--matrix", evaluate.matrix_path, "Matrix CSV")->required();
  c_eval->add_option("-o,--out", evaluate.out_dir, "Output directory")->required();
  c_eval->add_option("--threshold", evaluate.threshold, "Decision threshold");

  cli::AblateArgs ablate;
  std::uint64_t ablate_seed = 0;
  auto* c_abl = app.add_subcommand("ablate", "Label, featurize, split and run the feature-set ablation");
  c_abl->add_option("--log", ablate.log_path, "Event log CSV")->required();
  c_abl->add_option("--catalog", ablate.catalog_path, "App catalog CSV")->required();
  c_abl->add_option("-o,--out", ablate.out_dir, "Output directory")->required();
  c_abl->add_option("-c,--config", ablate.config_path, "Config file");
  auto* o_abl_seed = c_abl->add_option("--seed", ablate_seed, "Override split and train seeds");
  c_abl->add_flag("--no-prefilter", ablate.no_prefilter, "Keep records flagged by the type-1 rule filter");

  cli::AnalyzeArgs analyze;
  auto* c_an = app.add_subcommand("analyze", "Comparative distributions of suspicious and normal apps");
  c_an->add_option("--log", analyze.log_path, "Event log CSV")->required();
  c_an->add_option("--catalog", analyze.catalog_path, "App catalog CSV")->required();
  c_an->add_option("--labels", analyze.labels_path, "labels.csv")->required();
  c_an->add_option("-o,--out", analyze.out_dir, "Output directory")->required();
  c_an->add_option("-c,--config", analyze.config_path, "Config file");

  cli::FilterArgs filter;
  std::string truth_path;
  auto* c_filter = app.add_subcommand("filter-type1", "Flag type-1 records by source and device id rules");
  c_filter->add_option("--log", filter.log_path, "Event log CSV")->required();
  c_filter->add_option("-o,--out", filter.out_dir, "Output directory")->required();
  c_filter->add_option("-c,--config", filter.config_path, "Config file");
  auto* o_truth = c_filter->add_option("--truth", truth_path, "Ground truth CSV to score the flags against");

  cli::ImportanceArgs importance;
  std::uint64_t imp_seed = 0;
  auto* c_imp = app.add_subcommand("importance", "Gini feature importance from a randomized forest");
  c_imp->add_option("--matrix", importance.matrix_path, "Matrix CSV")->required();
  c_imp->add_option("-o,--out", importance.out_dir, "Output directory")->required();
  c_imp->add_option("-c,--config", importance.config_path, "Config file");
  auto* o_imp_seed = c_imp->add_option("--seed", imp_seed, "Override [importance] seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << cli::error_json(Error(ErrorKind::kUsage, e.what())) << "\n";
    return static_cast<int>(ErrorKind::kUsage);
  }

  try {
    set_thread_count(threads);
    if (*c_sim) {
      if (*o_sim_seed) sim.seed = sim_seed;
      cli::cmd_simulate(sim);
    } else if (*c_label) {
      if (*o_threshold) label.threshold = label_threshold;
      cli::cmd_label(label);
    } else if (*c_feat) {
      cli::cmd_featurize(feat);
    } else if (*c_train) {
      if (*o_train_seed) train.seed = train_seed;
      cli::cmd_train(train);
    } else if (*c_eval) {
      cli::cmd_evaluate(evaluate);
    } else if (*c_abl) {
      if (*o_abl_seed) ablate.seed = ablate_seed;
      cli::cmd_ablate(ablate);
    } else if (*c_an) {
      cli::cmd_analyze(analyze);
    } else if (*c_filter) {
      if (*o_truth) filter.truth_path = truth_path;
      cli::cmd_filter_type1(filter);
    } else if (*c_imp) {
      if (*o_imp_seed) importance.seed = imp_seed;
      cli::cmd_importance(importance);
    }
  } catch (const Error& e) {
    std::cerr << cli::error_json(e) << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << cli::error_json(e) << "\n";
    return static_cast<int>(ErrorKind::kInternal);
  }
  return 0;
}
