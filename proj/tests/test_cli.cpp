#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = FRAUDLAB_CLI_PATH;
const std::string kSmall = std::string(FRAUDLAB_SOURCE_DIR) + "/tests/data/small.cfg";

fs::path scratch() {
  static const fs::path root = [] {
    auto p = fs::temp_directory_path() / ("fraudlab_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

struct Result {
  int code = -1;
  std::string err;
};

Result run(const std::string& args) {
  const auto err_file = scratch() / "stderr.txt";
  const std::string cmd = kCli + " " + args + " >/dev/null 2>" + err_file.string();
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err_file);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// simulate, label, featurize (train and test), train, evaluate, ablate,
// analyze, filter, importance. Returns the directory.
fs::path pipeline(const std::string& name, int threads) {
  const auto d = scratch() / name;
  const std::string t = "--threads " + std::to_string(threads) + " ";
  const std::string c = " -c " + kSmall;
  const auto s = d / "sim";
  REQUIRE(run(t + "simulate" + c + " -o " + s.string()).code == 0);
  const std::string log = " --log " + (s / "log.csv").string();
  const std::string catalog = " --catalog " + (s / "catalog.csv").string();
  REQUIRE(run(t + "label" + c + log + " -o " + (d / "label").string()).code == 0);
  const std::string labels = " --labels " + (d / "label" / "labels.csv").string();
  REQUIRE(run(t + "featurize" + c + log + catalog + labels + " --split train -o " + (d / "ftrain").string()).code == 0);
  REQUIRE(run(t + "featurize" + c + log + catalog + labels + " --split test -o " + (d / "ftest").string()).code == 0);
  REQUIRE(run(t + "train" + c + " --matrix " + (d / "ftrain" / "matrix.csv").string() + " -o " + (d / "train").string())
              .code == 0);
  REQUIRE(run(t + "evaluate --model " + (d / "train" / "model.json").string() + " --matrix " +
              (d / "ftest" / "matrix.csv").string() + " -o " + (d / "eval").string())
              .code == 0);
  REQUIRE(run(t + "ablate" + c + log + catalog + " -o " + (d / "ablate").string()).code == 0);
  REQUIRE(run(t + "analyze" + c + log + catalog + labels + " -o " + (d / "analyze").string()).code == 0);
  REQUIRE(run(t + "filter-type1" + c + log + " --truth " + (s / "ground_truth.csv").string() + " -o " +
              (d / "filter").string())
              .code == 0);
  REQUIRE(run(t + "importance" + c + " --matrix " + (d / "ftrain" / "matrix.csv").string() + " -o " +
              (d / "importance").string())
              .code == 0);
  return d;
}

const std::vector<std::string> kArtifacts{
    "sim/log.csv",          "sim/catalog.csv",         "sim/ground_truth.csv",  "sim/sim_report.json",
    "label/labels.csv",     "label/app_status.csv",    "label/label_report.json", "ftrain/matrix.csv",
    "ftest/matrix.csv",     "ftrain/features.json",    "train/model.json",      "eval/metrics.csv",
    "eval/eval_report.json", "ablate/ablation.csv",    "ablate/eval_report.json", "ablate/pr_curves.csv",
    "analyze/analysis.json", "analyze/category_dist.csv", "filter/type1_flags.csv", "filter/filter_report.json",
    "importance/importance.csv"};

}  // namespace

TEST_CASE("full pipeline is byte-identical across runs and thread counts") {
  const auto a = pipeline("a", 1);
  const auto b = pipeline("b", 1);
  const auto c = pipeline("c", 4);
  for (const auto& f : kArtifacts) {
    CAPTURE(f);
    const auto ref = slurp(a / f);
    CHECK_FALSE(ref.empty());
    CHECK(ref == slurp(b / f));
    CHECK(ref == slurp(c / f));
  }
  // Manifests differ only in paths; the output hashes must match.
  for (const auto* stage : {"sim", "label", "train", "ablate"}) {
    const auto ja = nlohmann::json::parse(slurp(a / stage / "manifest.json"));
    const auto jc = nlohmann::json::parse(slurp(c / stage / "manifest.json"));
    CHECK(ja.at("outputs") == jc.at("outputs"));
    CHECK(ja.at("seeds") == jc.at("seeds"));
  }
  const auto manifest = nlohmann::json::parse(slurp(a / "sim" / "manifest.json"));
  CHECK(manifest.at("command") == "simulate");
  CHECK(manifest.at("seeds").at("sim") == 5);
  CHECK(manifest.at("config_hash").is_string());
  CHECK(fs::exists(a / "sim" / "timings.json"));

  const auto filter = nlohmann::json::parse(slurp(a / "filter" / "filter_report.json"));
  CHECK(filter.at("precision") == 1.0);
  CHECK(filter.at("recall").get<double>() >= 0.99);
  const auto ablation = slurp(a / "ablate" / "ablation.csv");
  CHECK(ablation.rfind("feature_set,precision,recall,f1,auc,accuracy\n", 0) == 0);
  for (const auto* set : {"device,", "app,", "new,", "previous,", "all,"}) {
    CHECK(ablation.find(std::string("\n") + set) != std::string::npos);
  }
}

TEST_CASE("seed override changes the log") {
  const auto d = scratch() / "seeded";
  REQUIRE(run("simulate -c " + kSmall + " --seed 6 -o " + d.string()).code == 0);
  CHECK(slurp(d / "log.csv") != slurp(scratch() / "a" / "sim" / "log.csv"));
}

TEST_CASE("exit codes") {
  const auto d = scratch() / "errors";
  fs::create_directories(d);
  CHECK(run("").code == 2);
  CHECK(run("simulate").code == 2);
  CHECK(run("bogus-command").code == 2);
  CHECK(run("--version").code == 0);
  CHECK(run("simulate -c " + (d / "nope.cfg").string() + " -o " + (d / "x").string()).code == 3);

  std::ofstream(d / "bad_key.cfg") << "[sim]\nno_such_key = 1\n";
  const auto cfg = run("simulate -c " + (d / "bad_key.cfg").string() + " -o " + (d / "x").string());
  CHECK(cfg.code == 5);
  CHECK(cfg.err.find("\"exit_code\":5") != std::string::npos);

  std::ofstream(d / "bad.csv") << "event_id,ts,kind,device_id,vendor_verified,app_id,ip_hash,source\n1,abc,download,,0,a,"
                                  "0000000000000001,client\n";
  const auto parse = run("label --log " + (d / "bad.csv").string() + " -o " + (d / "y").string());
  CHECK(parse.code == 4);
  CHECK(parse.err.find("\"line\":2") != std::string::npos);

  std::ofstream(d / "invalid.csv") << "event_id,ts,kind,device_id,vendor_verified,app_id,ip_hash,source\n1,5,download,,1,a,"
                                      "0000000000000001,client\n";
  CHECK(run("label --log " + (d / "invalid.csv").string() + " -o " + (d / "z").string()).code == 6);

  // A featurize run whose labels refer to an app the catalog lacks.
  const auto sim = scratch() / "a" / "sim";
  std::ofstream(d / "empty_catalog.csv") << "app_id,category,rating,release_ts\n";
  const auto data = run("featurize --log " + (sim / "log.csv").string() + " --catalog " +
                        (d / "empty_catalog.csv").string() + " --labels " +
                        (scratch() / "a" / "label" / "labels.csv").string() + " -o " + (d / "w").string());
  CHECK(data.code == 7);
  CHECK(run("featurize --log " + (sim / "log.csv").string() + " --catalog " + (sim / "catalog.csv").string() +
            " --labels " + (scratch() / "a" / "label" / "labels.csv").string() + " --set nope -o " +
            (d / "v").string())
            .code != 0);
}
