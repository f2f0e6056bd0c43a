#include "mdfuse/cli.hpp"

#include "mdfuse/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mdfuse;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("mdfuse_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Small global dataset produced through the CLI itself.
fs::path small_global(const fs::path& root) {
    write_file(root / "gen.json", R"({"generate": {"M": 30, "P": 6, "K": 4}})");
    const CliResult r = cli({"generate", "--config", (root / "gen.json").string(), "--seed", "3", "--out",
                       (root / "data").string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    return root / "data";
}

}  // namespace

TEST(Cli, UnknownSubcommandIsUsageError) {
    EXPECT_EQ(cli({"frobnicate"}).code, kExitValidation);
    EXPECT_EQ(cli({}).code, kExitValidation);
    EXPECT_EQ(cli({"fit", "--bogus", "1"}).code, kExitValidation);
}

TEST(Cli, HelpExitsCleanly) { EXPECT_EQ(cli({"--help"}).code, kExitOk); }

TEST(Cli, GenerateWritesDatasetTruthAndManifest) {
    const fs::path data = small_global(fresh_dir("generate"));
    for (const char* f : {"dataset.json", "truth.json", "true_params.json", "resolved_config.json", "manifest.json"})
        EXPECT_TRUE(fs::exists(data / f)) << f;
    const Json cfg = read_json(data / "resolved_config.json");
    EXPECT_EQ(cfg["M"], 30);
    EXPECT_EQ(cfg["seed"], 3);
    EXPECT_EQ(load_global_dataset(data / "dataset.json").M(), 30);
}

TEST(Cli, RerunsAreByteIdentical) {
    const fs::path root = fresh_dir("rerun");
    const fs::path data = small_global(root);
    const std::vector<std::string> files{"fit/params.json",   "fit/estimates.json",     "fit/resolved_config.json",
                                         "fit/manifest.json", "eval/report.json",       "eval/report.csv",
                                         "eval/significance.json", "eval/resolved_config.json", "eval/manifest.json"};
    std::vector<std::string> first;
    for (int run = 0; run < 2; ++run) {
        ASSERT_EQ(cli({"fit", "--data", (data / "dataset.json").string(), "--out", (root / "fit").string()}).code,
                  kExitOk);
        ASSERT_EQ(cli({"evaluate", "--data", (data / "dataset.json").string(), "--truth",
                       (data / "truth.json").string(), "--out", (root / "eval").string()})
                      .code,
                  kExitOk);
        for (std::size_t i = 0; i < files.size(); ++i) {
            if (run == 0)
                first.push_back(slurp(root / files[i]));
            else
                EXPECT_EQ(slurp(root / files[i]), first[i]) << files[i];
        }
    }
}

TEST(Cli, MaxItersFlagCapsTrace) {
    const fs::path root = fresh_dir("maxiters");
    const fs::path data = small_global(root);
    ASSERT_EQ(cli({"fit", "--data", (data / "dataset.json").string(), "--max-iters", "1", "--out",
                   (root / "fit").string()})
                  .code,
              kExitOk);
    const Json params = read_json(root / "fit" / "params.json");
    EXPECT_EQ(params["trace"]["iterations"], 1);
    EXPECT_EQ(params["trace"]["ll"].size(), 1u);
}

TEST(Cli, FlagsOverrideConfigFile) {
    const fs::path root = fresh_dir("override");
    const fs::path data = small_global(root);
    write_file(root / "cfg.json", R"({"seed": 5, "fit": {"max_iters": 7, "ridge": 0.5}})");
    ASSERT_EQ(cli({"fit", "--config", (root / "cfg.json").string(), "--data", (data / "dataset.json").string(),
                   "--max-iters", "2", "--out", (root / "fit").string()})
                  .code,
              kExitOk);
    const Json cfg = read_json(root / "fit" / "resolved_config.json");
    EXPECT_EQ(cfg["max_iters"], 2);
    EXPECT_EQ(cfg["ridge"], 0.5);
    EXPECT_EQ(cfg["seed"], 5);
}

TEST(Cli, UnknownConfigKeyIsValidationError) {
    const fs::path root = fresh_dir("badkey");
    write_file(root / "cfg.json", R"({"fit": {"itres": 3}})");
    EXPECT_EQ(cli({"fit", "--config", (root / "cfg.json").string(), "--data", "x", "--out", "y"}).code,
              kExitValidation);
}

TEST(Cli, MissingOrMalformedInputsAreValidationErrors) {
    const fs::path root = fresh_dir("inputs");
    const fs::path data = small_global(root);
    EXPECT_EQ(cli({"evaluate", "--data", (data / "dataset.json").string(), "--out", (root / "e").string()}).code,
              kExitValidation);
    EXPECT_EQ(cli({"fit", "--data", (root / "nope.json").string(), "--out", (root / "f").string()}).code,
              kExitValidation);
    write_file(root / "broken.json", "{\"kind\": \"global\", ");
    EXPECT_EQ(cli({"fit", "--data", (root / "broken.json").string(), "--out", (root / "f").string()}).code,
              kExitValidation);
    EXPECT_EQ(cli({"fit", "--data", (data / "dataset.json").string(), "--setting", "spectral", "--out",
                   (root / "f").string()})
                  .code,
              kExitValidation);
}

TEST(Cli, DegenerateSolveIsNumericFailure) {
    const fs::path root = fresh_dir("numeric");
    write_file(root / "d.json", R"({"kind": "global", "D": 1, "P": 1, "K": 1, "instances": [
        {"id": "a", "features": [0], "annotations": [{"annotator": 0, "values": [1]}]},
        {"id": "b", "features": [0], "annotations": [{"annotator": 0, "values": [2]}]}]})");
    write_file(root / "cfg.json", R"({"fit": {"ridge": 0}})");
    const CliResult r = cli({"fit", "--config", (root / "cfg.json").string(), "--data", (root / "d.json").string(), "--out",
                       (root / "f").string()});
    EXPECT_EQ(r.code, kExitNumeric) << r.err;
}

TEST(Cli, EvaluateCsvHasRowPerModelFoldDimMetric) {
    const fs::path root = fresh_dir("csvrows");
    const fs::path data = small_global(root);
    ASSERT_EQ(cli({"evaluate", "--data", (data / "dataset.json").string(), "--truth", (data / "truth.json").string(),
                   "--out", (root / "e").string()})
                  .code,
              kExitOk);
    const std::string csv = slurp(root / "e" / "report.csv");
    // Header plus 2 models x 5 folds x 2 dims x 2 metrics.
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 41);
}

TEST(Cli, TimeSeriesFitAndEvaluate) {
    const fs::path root = fresh_dir("series");
    write_file(root / "gen.json", R"({"generate": {"recipe": "timeseries-reduced", "M": 6, "T": 30, "P": 4, "K": 3}})");
    ASSERT_EQ(cli({"generate", "--config", (root / "gen.json").string(), "--out", (root / "data").string()}).code,
              kExitOk);
    const std::string ds = (root / "data" / "dataset.json").string();
    ASSERT_EQ(cli({"fit", "--data", ds, "--setting", "timeseries", "--restarts", "2", "--w", "3", "--out",
                   (root / "fit").string()})
                  .code,
              kExitOk);
    const Json params = read_json(root / "fit" / "params.json");
    EXPECT_EQ(params["W"], 3);
    EXPECT_EQ(params["restarts"].size(), 2u);
    const CliResult r = cli({"evaluate", "--data", ds, "--truth", (root / "data" / "truth.json").string(), "--setting",
                       "timeseries", "--restarts", "1", "--folds", "3", "--w-grid", "2,3", "--out",
                       (root / "eval").string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(cli({"fit", "--data", ds, "--setting", "timeseries", "--w", "40", "--out", (root / "bad").string()}).code,
              kExitValidation);
}

TEST(Cli, SweepRowsPerStep) {
    const fs::path root = fresh_dir("sweep");
    write_file(root / "cfg.json", R"({"sweep": {"M": 40, "K": 20, "annotators_per_instance": 5}})");
    const CliResult r = cli({"sweep", "--config", (root / "cfg.json").string(), "--steps", "0,0.5,1", "--out",
                       (root / "s").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const std::string csv = slurp(root / "s" / "sweep.csv");
    // Header plus 3 steps x 2 models x 2 dims x 2 metrics.
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 25);
    const Json sweep = read_json(root / "s" / "sweep.json");
    EXPECT_EQ(sweep["steps"].size(), 3u);
    EXPECT_TRUE(sweep["steps"][2].contains("f_recovery"));
}

TEST(Cli, ContentHashIsFnv1a) {
    EXPECT_EQ(content_hash(""), "cbf29ce484222325");
    EXPECT_EQ(content_hash("a"), "af63dc4c8601ec8c");
}
