#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "colm_unit_cli";

int run(const std::string& args) {
    const std::string cmd = "\""s + COLM_CLI_PATH + "\" " + args + " > \"" + (kDir / "stdout.txt").string() +
                            "\" 2> \"" + (kDir / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write(const std::string& name, const std::string& text) {
    fs::create_directories(kDir);
    std::ofstream(kDir / name) << text;
    return kDir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kSmallRun = R"({
  "steps": 10, "batch_size": 4, "hidden_dim": 4,
  "logging": {"variance_interval": 3, "variance_resamples": 30},
  "dataset": {"synthetic": {"num_sources": 2, "source_sizes": [40, 10], "feature_dim": 3, "num_classes": 2}}
})";

}  // namespace

TEST_CASE("help and usage errors") {
    fs::create_directories(kDir);
    CHECK(run("--help") == 0);
    CHECK(slurp(kDir / "stdout.txt").find("Exit codes") != std::string::npos);
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("train") == 2);
}

TEST_CASE("configuration problems exit with 2") {
    CHECK(run("train --config " + write("unknown.json", R"({"stepz": 1})").string()) == 2);
    CHECK(run("train --config " + write("broken.json", "{").string()) == 2);
    CHECK(run("train --config " + (kDir / "missing.json").string()) == 2);
    CHECK(run("train --config " + write("ok.json", kSmallRun).string() + " --format xml") == 2);
}

TEST_CASE("divergence exits with 3") {
    const auto cfg = write("diverge.json", R"({
      "steps": 10, "batch_size": 4, "hidden_dim": 4, "optimizer": {"lr": 1e308},
      "dataset": {"synthetic": {"num_sources": 2, "source_sizes": [40, 10], "feature_dim": 3, "num_classes": 2}}
    })");
    CHECK(run("train --config " + cfg.string() + " --out " + (kDir / "div").string()) == 3);
}

TEST_CASE("generate writes the dataset and its ground truth") {
    const auto spec = write("spec.json", R"({"num_sources": 2, "source_sizes": [30, 6], "feature_dim": 3,
                                             "num_classes": 2, "outliers": 2, "seed": 1})");
    const auto out = kDir / "gen";
    fs::remove_all(out);
    REQUIRE(run("generate --spec " + spec.string() + " --out " + out.string() + " --format jsonl") == 0);
    CHECK(fs::exists(out / "dataset.jsonl"));
    CHECK(fs::exists(out / "truth.json"));
    CHECK(fs::exists(out / "spec.json"));
    CHECK(slurp(out / "truth.json").find("is_outlier") != std::string::npos);
}

TEST_CASE("train writes metrics and reruns are byte-identical") {
    const auto cfg = write("train.json", kSmallRun);
    for (const char* sub : {"a", "b"}) {
        REQUIRE(run("train --config " + cfg.string() + " --seed 3 --out " + (kDir / sub).string()) == 0);
    }
    const std::string a = slurp(kDir / "a" / "metrics.csv");
    CHECK(a.rfind("step,loss,grad_variance,small_src_acc,big_src_acc,select_ms,train_ms\n", 0) == 0);
    CHECK(a == slurp(kDir / "b" / "metrics.csv"));
    CHECK(slurp(kDir / "a" / "config.json").find("\"seed\": 3") != std::string::npos);
}
