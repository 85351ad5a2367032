#include "fraudlab/commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "fraudlab/analysis.hpp"
#include "fraudlab/errors.hpp"
#include "fraudlab/log_model.hpp"
#include "fraudlab/parallel.hpp"
#include "fraudlab/rng.hpp"
#include "fraudlab/simulator.hpp"

namespace fraudlab::cli {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string content_hash(std::string_view bytes) { return hex16(fnv1a64(bytes)); }

// Collects one command's manifest; timings go to a separate file so the
// manifest stays byte-stable across runs.
class RunRecorder {
 public:
  RunRecorder(std::string command, std::string out_dir) : command_(std::move(command)), dir_(std::move(out_dir)) {
    if (dir_.empty()) throw Error(ErrorKind::kUsage, "output directory is required");
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::kInternal, "cannot create directory " + dir_ + ": " + ec.message());
    manifest_["command"] = command_;
    manifest_["fraudlab_version"] = FRAUDLAB_VERSION;
    manifest_["log_format_version"] = kLogFormatVersion;
    manifest_["model_format_version"] = trees::kModelFormatVersion;
    manifest_["feature_registry_version"] = features::kRegistryVersion;
    manifest_["config"] = nullptr;
    manifest_["config_hash"] = nullptr;
    manifest_["seeds"] = ordered_json::object();
    manifest_["inputs"] = ordered_json::object();
    manifest_["outputs"] = ordered_json::array();
    manifest_["warnings"] = ordered_json::object();
  }

  std::string read_input(const std::string& name, const std::string& path) {
    std::string text = read_file(path);
    manifest_["inputs"][name] = {{"path", path}, {"fnv1a64", content_hash(text)}};
    return text;
  }

  void config(const std::string& path, const ConfigFile& file) {
    if (path.empty()) return;
    manifest_["config"] = path;
    manifest_["config_hash"] = file.content_hash();
  }

  void seed(const std::string& name, std::uint64_t value) { manifest_["seeds"][name] = value; }
  void warning(const std::string& name, std::int64_t value) { manifest_["warnings"][name] = value; }
  ordered_json& extra(const std::string& key) { return manifest_[key]; }

  void write(const std::string& name, std::string_view contents) {
    write_file((fs::path(dir_) / name).string(), contents);
    manifest_["outputs"].push_back({{"file", name}, {"bytes", contents.size()}, {"fnv1a64", content_hash(contents)}});
  }

  template <typename F>
  auto timed(const std::string& stage, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      const auto dt = std::chrono::steady_clock::now() - t0;
      timings_[stage] = std::chrono::duration<double, std::milli>(dt).count();
    };
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      finish();
    } else {
      auto result = body();
      finish();
      return result;
    }
  }

  void finish() {
    ordered_json t;
    t["command"] = command_;
    t["threads"] = thread_count();
    t["stages_ms"] = timings_;
    write_file((fs::path(dir_) / "timings.json").string(), t.dump(2) + "\n");
    write_file((fs::path(dir_) / "manifest.json").string(), manifest_.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::string dir_;
  ordered_json manifest_;
  ordered_json timings_ = ordered_json::object();
};

ConfigFile load_optional_config(const std::string& path) {
  return path.empty() ? ConfigFile() : ConfigFile::load(path);
}

ordered_json params_json(const trees::TrainParams& p) {
  return {{"n_trees", p.n_trees},     {"max_depth", p.max_depth},   {"learning_rate", p.learning_rate},
          {"min_child_weight", p.min_child_weight}, {"subsample", p.subsample}, {"colsample", p.colsample},
          {"lambda_l2", p.lambda_l2}, {"seed", p.seed}};
}

ordered_json forest_json(const trees::ForestParams& p, std::size_t max_rows) {
  return {{"n_trees", p.n_trees},     {"max_features", p.max_features}, {"max_depth", p.max_depth},
          {"min_samples_split", p.min_samples_split}, {"bootstrap", p.bootstrap},
          {"random_thresholds", p.random_thresholds}, {"seed", p.seed},
          {"max_rows", max_rows}};
}

std::string balance_json(const labeling::LabelSet& labels) {
  const auto b = labeling::class_balance(labels);
  ordered_json j;
  j["threshold"] = labels.threshold;
  j["window"] = {{"start", labels.window.start}, {"end", labels.window.end}};
  j["fold_excluded"] = labels.folded_excluded;
  j["n_pos"] = b.n_pos;
  j["n_neg"] = b.n_neg;
  j["n_excluded"] = labels.excluded.size();
  j["positive_ratio"] = b.ratio ? ordered_json(*b.ratio) : ordered_json("undefined");
  std::size_t suspicious = 0;
  std::size_t normal = 0;
  std::size_t excluded = 0;
  for (const auto& [app, s] : labels.app_status) {
    if (s == labeling::AppStatus::kSuspicious) ++suspicious;
    if (s == labeling::AppStatus::kNormal) ++normal;
    if (s == labeling::AppStatus::kExcluded) ++excluded;
  }
  j["apps"] = {{"suspicious", suspicious}, {"normal", normal}, {"excluded", excluded}};
  return j.dump(2) + "\n";
}

// Rebuilds the label sets the features stage needs from labels.csv.
labeling::LabelSet label_set_from(const labeling::EventLabels& labels, std::span<const EventRecord> prepared) {
  labeling::LabelSet set;
  set.window = labeling::full_span(prepared);
  for (const auto& [id, label] : labels) {
    switch (label) {
      case labeling::Label::kPositive: set.positive.insert(id); break;
      case labeling::Label::kNegative: set.negative.insert(id); break;
      case labeling::Label::kExcluded: set.excluded.insert(id); break;
    }
  }
  return set;
}

}  // namespace

PipelineConfig pipeline_config_from(const ConfigFile& f) {
  PipelineConfig c;
  f.require_known_keys("label", {"threshold", "fold_excluded", "prefilter_type1", "sample_days", "sample_seed"});
  c.label_threshold = f.get_double("label", "threshold", c.label_threshold);
  if (!(c.label_threshold >= 0.0 && c.label_threshold < 1.0)) throw ConfigError("[label] threshold must lie in [0, 1)");
  c.fold_excluded = f.get_bool("label", "fold_excluded", c.fold_excluded);
  c.prefilter_type1 = f.get_bool("label", "prefilter_type1", c.prefilter_type1);
  c.sample_days = f.get_uint("label", "sample_days", c.sample_days);
  c.sample_seed = f.get_uint("label", "sample_seed", c.sample_seed);

  f.require_known_keys("filter", {"burst_rate"});
  c.filter.burst_rate = f.get_int("filter", "burst_rate", c.filter.burst_rate);
  if (c.filter.burst_rate < 1) throw ConfigError("[filter] burst_rate must be >= 1");

  f.require_known_keys("split", {"train_fraction", "seed"});
  c.split.train_fraction = f.get_double("split", "train_fraction", c.split.train_fraction);
  c.split.seed = f.get_uint("split", "seed", c.split.seed);
  if (!(c.split.train_fraction > 0.0 && c.split.train_fraction < 1.0)) {
    throw ConfigError("[split] train_fraction must lie in (0, 1)");
  }

  f.require_known_keys("train", {"n_trees", "max_depth", "learning_rate", "min_child_weight", "subsample",
                                 "colsample", "lambda_l2", "seed"});
  auto& t = c.train;
  t.n_trees = static_cast<int>(f.get_int("train", "n_trees", t.n_trees));
  t.max_depth = static_cast<int>(f.get_int("train", "max_depth", t.max_depth));
  t.learning_rate = f.get_double("train", "learning_rate", t.learning_rate);
  t.min_child_weight = f.get_double("train", "min_child_weight", t.min_child_weight);
  t.subsample = f.get_double("train", "subsample", t.subsample);
  t.colsample = f.get_double("train", "colsample", t.colsample);
  t.lambda_l2 = f.get_double("train", "lambda_l2", t.lambda_l2);
  t.seed = f.get_uint("train", "seed", t.seed);
  trees::validate(t);

  f.require_known_keys("importance", {"n_trees", "max_features", "max_depth", "min_samples_split", "bootstrap",
                                      "random_thresholds", "seed", "max_rows"});
  auto& im = c.importance;
  im.n_trees = static_cast<int>(f.get_int("importance", "n_trees", im.n_trees));
  im.max_features = static_cast<int>(f.get_int("importance", "max_features", im.max_features));
  im.max_depth = static_cast<int>(f.get_int("importance", "max_depth", im.max_depth));
  im.min_samples_split = static_cast<int>(f.get_int("importance", "min_samples_split", im.min_samples_split));
  im.bootstrap = f.get_bool("importance", "bootstrap", im.bootstrap);
  im.random_thresholds = f.get_bool("importance", "random_thresholds", im.random_thresholds);
  im.seed = f.get_uint("importance", "seed", im.seed);
  c.importance_max_rows = f.get_uint("importance", "max_rows", c.importance_max_rows);
  trees::validate(im);
  return c;
}

std::vector<EventRecord> prepare_log(std::span<const EventRecord> log, const PipelineConfig& cfg) {
  std::vector<EventRecord> out(log.begin(), log.end());
  if (cfg.prefilter_type1) {
    const auto flags = eval::type1_rule_filter(out, cfg.filter);
    out = eval::remove_flagged(out, flags);
  }
  if (cfg.sample_days > 0) out = labeling::sample_days(out, cfg.sample_days, cfg.sample_seed);
  return out;
}

labeling::LabelSet label_log(std::span<const EventRecord> prepared, const PipelineConfig& cfg) {
  labeling::LabelOptions opt;
  opt.threshold = cfg.label_threshold;
  opt.fold_excluded = cfg.fold_excluded;
  return labeling::build_labels(prepared, opt);
}

LabeledMatrix importance_rows(const LabeledMatrix& m, const PipelineConfig& cfg) {
  if (cfg.importance_max_rows == 0 || m.rows() <= cfg.importance_max_rows) return m;
  std::vector<std::size_t> idx(m.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(cfg.importance.seed, 0x726f777300000000ULL);
  for (std::size_t i = 0; i < cfg.importance_max_rows; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(cfg.importance_max_rows);
  std::sort(idx.begin(), idx.end());
  return m.select_rows(idx);
}

void cmd_simulate(const SimulateArgs& args) {
  RunRecorder run("simulate", args.out_dir);
  const std::string text = run.read_input("config", args.config_path);
  const ConfigFile file = ConfigFile::parse(text);
  run.config(args.config_path, file);
  sim::SimConfig config = sim::sim_config_from(file);
  if (args.seed) config.seed = *args.seed;
  run.seed("sim", config.seed);
  const sim::SimOutput out = run.timed("simulate", [&] { return sim::simulate(config); });
  run.timed("write", [&] {
    run.write("log.csv", write_log(out.log));
    run.write("catalog.csv", write_catalog(out.catalog));
    std::ostringstream truth;
    write_ground_truth(truth, out.truth);
    run.write("ground_truth.csv", truth.str());
    run.write("sim_report.json", sim::report_json(out.report));
  });
  for (const auto& [name, count] : out.report.warnings) run.warning(name, count);
  run.finish();
}

void cmd_label(const LabelArgs& args) {
  RunRecorder run("label", args.out_dir);
  const ConfigFile file = load_optional_config(args.config_path);
  run.config(args.config_path, file);
  PipelineConfig cfg = pipeline_config_from(file);
  if (args.threshold) cfg.label_threshold = *args.threshold;
  if (args.no_prefilter) cfg.prefilter_type1 = false;
  if (args.fold_excluded) cfg.fold_excluded = true;
  if (!(cfg.label_threshold >= 0.0 && cfg.label_threshold < 1.0)) throw ConfigError("threshold must lie in [0, 1)");
  const auto log = parse_log(std::string_view(run.read_input("log", args.log_path)));
  const auto prepared = run.timed("prefilter", [&] { return prepare_log(log, cfg); });
  const auto labels = run.timed("label", [&] { return label_log(prepared, cfg); });
  run.extra("prefilter_type1") = cfg.prefilter_type1;
  run.extra("records_dropped_by_prefilter") = log.size() - prepared.size();
  if (cfg.sample_days > 0) run.seed("sample_days", cfg.sample_seed);
  run.write("labels.csv", labeling::labels_csv(labels));
  run.write("app_status.csv", labeling::app_status_csv(labels));
  run.write("label_report.json", balance_json(labels));
  const auto b = labeling::class_balance(labels);
  if (b.n_pos == 0 || b.n_neg == 0) run.warning("single_class_labels", 1);
  run.finish();
}

void cmd_featurize(const FeaturizeArgs& args) {
  RunRecorder run("featurize", args.out_dir);
  const ConfigFile file = load_optional_config(args.config_path);
  run.config(args.config_path, file);
  PipelineConfig cfg = pipeline_config_from(file);
  if (args.no_prefilter) cfg.prefilter_type1 = false;
  const auto set = features::parse_feature_set(args.feature_set);
  if (args.split != "all" && args.split != "train" && args.split != "test") {
    throw Error(ErrorKind::kUsage, "--split must be all, train or test");
  }
  const auto log = parse_log(std::string_view(run.read_input("log", args.log_path)));
  const auto catalog = parse_catalog(std::string_view(run.read_input("catalog", args.catalog_path)));
  const auto labels = labeling::parse_labels_csv(run.read_input("labels", args.labels_path));
  const auto prepared = prepare_log(log, cfg);
  const auto label_set = label_set_from(labels, prepared);
  LabeledMatrix m = run.timed("features", [&] { return features::export_matrix(prepared, label_set, catalog); });
  if (args.split != "all") {
    run.seed("split", cfg.split.seed);
    auto parts = eval::split_by_app(m, cfg.split);
    m = args.split == "train" ? std::move(parts.train) : std::move(parts.test);
  }
  if (set != features::FeatureSet::kAll) m = m.select_columns(features::feature_set_columns(set));
  run.extra("feature_set") = features::to_string(set);
  run.extra("split") = args.split;
  run.extra("rows") = m.rows();
  run.write("matrix.csv", write_matrix_csv(m));
  run.write("features.json", features::manifest_json(set));
  run.finish();
}

void cmd_train(const TrainArgs& args) {
  RunRecorder run("train", args.out_dir);
  const ConfigFile file = load_optional_config(args.config_path);
  run.config(args.config_path, file);
  PipelineConfig cfg = pipeline_config_from(file);
  if (args.seed) cfg.train.seed = *args.seed;
  run.seed("train", cfg.train.seed);
  const auto m = parse_matrix_csv(run.read_input("matrix", args.matrix_path));
  trees::TrainTrace trace;
  const auto model = run.timed("train", [&] { return trees::train(m.features, m.labels, cfg.train, {}, &trace); });
  run.extra("params") = params_json(cfg.train);
  run.extra("final_train_loss") = trace.loss.back();
  run.write("model.json", trees::serialize(model));
  run.finish();
}

void cmd_evaluate(const EvaluateArgs& args) {
  RunRecorder run("evaluate", args.out_dir);
  const auto model = trees::deserialize(run.read_input("model", args.model_path));
  const auto m = parse_matrix_csv(run.read_input("matrix", args.matrix_path));
  const auto res = run.timed("evaluate", [&] { return eval::evaluate_model(model, m, args.threshold); });
  eval::EvalReport rep;
  rep.rows.push_back(res);
  rep.seed = model.params.seed;
  rep.threshold = args.threshold;
  rep.params = model.params;
  rep.test_balance = eval::class_counts(m.labels);
  rep.split_description = "evaluation matrix: " + std::to_string(m.rows()) + " rows";
  run.write("metrics.csv", eval::ablation_csv(rep));
  run.write("pr_curve.csv", eval::pr_curves_csv(rep));
  run.write("eval_report.json", eval::eval_report_json(rep));
  run.finish();
}

void cmd_ablate(const AblateArgs& args) {
  RunRecorder run("ablate", args.out_dir);
  const ConfigFile file = load_optional_config(args.config_path);
  run.config(args.config_path, file);
  PipelineConfig cfg = pipeline_config_from(file);
  if (args.seed) {
    cfg.split.seed = *args.seed;
    cfg.train.seed = *args.seed;
  }
  if (args.no_prefilter) cfg.prefilter_type1 = false;
  run.seed("split", cfg.split.seed);
  run.seed("train", cfg.train.seed);
  const auto log = parse_log(std::string_view(run.read_input("log", args.log_path)));
  const auto catalog = parse_catalog(std::string_view(run.read_input("catalog", args.catalog_path)));
  const auto prepared = run.timed("prefilter", [&] { return prepare_log(log, cfg); });
  const auto labels = run.timed("label", [&] { return label_log(prepared, cfg); });
  const auto m = run.timed("features", [&] { return features::export_matrix(prepared, labels, catalog); });
  const auto parts = eval::split_by_app(m, cfg.split);
  const auto rep = run.timed("ablation", [&] {
    return eval::run_ablation(parts.train, parts.test, features::kAllSets, cfg.train);
  });
  run.extra("train_apps") = parts.train_apps;
  run.extra("test_apps") = parts.test_apps;
  run.write("ablation.csv", eval::ablation_csv(rep));
  run.write("pr_curves.csv", eval::pr_curves_csv(rep));
  run.write("eval_report.json", eval::eval_report_json(rep));
  run.finish();
}

void cmd_analyze(const AnalyzeArgs& args) {
  RunRecorder run("analyze", args.out_dir);
  const ConfigFile file = load_optional_config(args.config_path);
  run.config(args.config_path, file);
  const PipelineConfig cfg = pipeline_config_from(file);
  const auto log = parse_log(std::string_view(run.read_input("log", args.log_path)));
  const auto catalog = parse_catalog(std::string_view(run.read_input("catalog", args.catalog_path)));
  const auto labels = labeling::parse_labels_csv(run.read_input("labels", args.labels_path));
  const auto flags = eval::type1_rule_filter(log, cfg.filter);
  const auto rep = run.timed("analyze", [&] { return eval::comparative_analysis(log, catalog, labels, flags); });
  run.write("category_dist.csv", eval::category_dist_csv(rep));
  run.write("rating_hist.csv", eval::rating_hist_csv(rep));
  run.write("hourly_hist.csv", eval::hourly_hist_csv(rep));
  run.write("analysis.json", eval::analysis_json(rep));
  run.finish();
}

void cmd_filter_type1(const FilterArgs& args) {
  RunRecorder run("filter-type1", args.out_dir);
  const ConfigFile file = load_optional_config(args.config_path);
  run.config(args.config_path, file);
  const PipelineConfig cfg = pipeline_config_from(file);
  const auto log = parse_log(std::string_view(run.read_input("log", args.log_path)));
  const auto flags = run.timed("filter", [&] { return eval::type1_rule_filter(log, cfg.filter); });
  run.write("type1_flags.csv", eval::flags_csv(flags));
  ordered_json summary;
  summary["burst_rate"] = cfg.filter.burst_rate;
  summary["records"] = log.size();
  summary["flagged"] = flags.size();
  std::map<std::string, std::size_t> by_reason;
  for (const auto& f : flags) ++by_reason[std::string(eval::to_string(f.reason))];
  summary["by_reason"] = by_reason;
  if (args.truth_path) {
    // Scored against every type-1 record in the ground truth.
    const auto truth = parse_ground_truth(std::string_view(run.read_input("ground_truth", *args.truth_path)));
    std::unordered_set<std::uint64_t> type1;
    for (const auto& t : truth) {
      if (t.fraud_type == FraudType::kType1) type1.insert(t.event_id);
    }
    std::size_t hits = 0;
    for (const auto& f : flags) hits += type1.contains(f.event_id) ? 1 : 0;
    summary["true_type1"] = type1.size();
    summary["precision"] = flags.empty() ? ordered_json("undefined") : ordered_json(double(hits) / double(flags.size()));
    summary["recall"] = type1.empty() ? ordered_json("undefined") : ordered_json(double(hits) / double(type1.size()));
  }
  run.write("filter_report.json", summary.dump(2) + "\n");
  run.finish();
}

void cmd_importance(const ImportanceArgs& args) {
  RunRecorder run("importance", args.out_dir);
  const ConfigFile file = load_optional_config(args.config_path);
  run.config(args.config_path, file);
  PipelineConfig cfg = pipeline_config_from(file);
  if (args.seed) cfg.importance.seed = *args.seed;
  run.seed("importance", cfg.importance.seed);
  const auto m = parse_matrix_csv(run.read_input("matrix", args.matrix_path));
  const auto sample = importance_rows(m, cfg);
  const auto imp = run.timed("importance", [&] { return trees::gini_importance(sample.features, sample.labels, cfg.importance); });
  run.extra("params") = forest_json(cfg.importance, cfg.importance_max_rows);
  run.extra("rows_used") = sample.rows();
  run.write("importance.csv", trees::importance_csv(m.features.names(), imp));
  run.finish();
}

std::string error_json(const std::exception& err) {
  ordered_json j;
  ErrorKind kind = ErrorKind::kInternal;
  if (const auto* e = dynamic_cast<const Error*>(&err)) kind = e->kind();
  j["error"] = to_string(kind);
  j["exit_code"] = static_cast<int>(kind);
  j["message"] = err.what();
  if (const auto* p = dynamic_cast<const ParseError*>(&err)) {
    j["line"] = p->line();
    j["field"] = p->field();
  }
  if (const auto* v = dynamic_cast<const ValidationError*>(&err)) {
    j["line"] = v->line();
    j["invariant"] = v->invariant();
  }
  if (const auto* m = dynamic_cast<const MissingFileError*>(&err)) j["path"] = m->path();
  return j.dump();
}

}  // namespace fraudlab::cli
