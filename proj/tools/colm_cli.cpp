// colm: coreset-selection experiments on synthetic or file-backed data.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "colm/config.h"
#include "colm/data_gen.h"
#include "colm/dataset.h"
#include "colm/errors.h"
#include "colm/harness.h"
#include "colm/theory.h"

namespace fs = std::filesystem;
using namespace colm;

namespace {

struct CommonFlags {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--seed", flags.seed, "Override the config seed");
    cmd->add_option("--out", flags.out, "Override the output directory");
    cmd->add_option("--format", flags.format, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    fs::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << j.dump(2) << '\n';
}

ExperimentConfig load_experiment(const std::string& path, const CommonFlags& flags) {
    nlohmann::json j = read_json_file(path);
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    if (flags.seed) j["seed"] = *flags.seed;
    if (flags.out) j["output"] = *flags.out;
    if (flags.format) j["format"] = *flags.format;
    return parse_experiment_config(j);
}

void report_run(const RunResult& run) {
    std::printf("%-16s final_loss=%s small_acc=%s big_acc=%s\n", to_string(run.method).c_str(),
                format_double(run.final_loss).c_str(), format_double(run.final_small_acc).c_str(),
                format_double(run.final_big_acc).c_str());
    if (run.over_budget_steps > 0) {
        std::fprintf(stderr, "warning: %s: small-source members filled the budget on %zu steps; coresets exceeded b\n",
                     to_string(run.method).c_str(), run.over_budget_steps);
    }
}

int cmd_generate(const std::string& spec_path, const CommonFlags& flags) {
    nlohmann::json j = read_json_file(spec_path);
    if (flags.seed && j.is_object()) j["seed"] = *flags.seed;
    const MixtureSpec spec = parse_mixture(j);
    const fs::path out = flags.out.value_or("data");
    const DataFormat fmt = parse_data_format(flags.format.value_or("csv"));
    const GeneratedData gen = generate(spec);
    write_dataset(out / ("dataset." + to_string(fmt)), gen.dataset, fmt);

    nlohmann::json truth{{"centers", nlohmann::json::array()},
                         {"center_source", gen.truth.center_source},
                         {"example_center", gen.truth.example_center},
                         {"is_outlier", gen.truth.is_outlier}};
    for (const auto& c : gen.truth.centers) truth["centers"].push_back(c.values());
    write_json(out / "truth.json", truth);
    write_json(out / "spec.json", mixture_to_json(spec));
    std::printf("wrote %zu examples from %zu sources to %s\n", gen.dataset.size(), spec.num_sources,
                out.string().c_str());
    return 0;
}

int cmd_train(const std::string& config_path, const CommonFlags& flags) {
    const ExperimentConfig cfg = load_experiment(config_path, flags);
    const Dataset data = resolve_dataset(cfg);
    const RunResult run = run_training(cfg, data);
    write_metrics(cfg.output, run, cfg.format, cfg.logging.wall_time_in_metrics);
    write_json(fs::path(cfg.output) / "config.json", experiment_to_json(cfg));
    report_run(run);
    return 0;
}

int cmd_bench(const std::string& config_path, const CommonFlags& flags) {
    const ExperimentConfig cfg = load_experiment(config_path, flags);
    const Dataset data = resolve_dataset(cfg);
    const auto runs = run_baseline_selectors(cfg, data);
    std::string summary = "method,final_loss,small_src_acc,big_src_acc\n";
    for (const auto& run : runs) {
        write_metrics(fs::path(cfg.output) / to_string(run.method), run, cfg.format, cfg.logging.wall_time_in_metrics);
        summary += to_string(run.method) + "," + format_double(run.final_loss) + "," +
                   format_double(run.final_small_acc) + "," + format_double(run.final_big_acc) + "\n";
        report_run(run);
    }
    std::ofstream(fs::path(cfg.output) / "summary.csv", std::ios::binary) << summary;
    write_json(fs::path(cfg.output) / "config.json", experiment_to_json(cfg));
    return 0;
}

int cmd_variance_probe(const std::string& config_path, const CommonFlags& flags) {
    const ExperimentConfig cfg = load_experiment(config_path, flags);
    const Dataset data = resolve_dataset(cfg);
    double bound = std::numeric_limits<double>::quiet_NaN();
    if (cfg.probe.bound) {
        bound = *cfg.probe.bound;
    } else if (cfg.dataset.path.empty()) {
        bound = mixture_gap_bound(cfg.dataset.synthetic, cfg.resolved_large_batch());
    }
    const VarianceReport report = run_variance_probe(cfg, data, bound);
    write_variance_report(cfg.output, report, cfg.format);
    write_json(fs::path(cfg.output) / "config.json", experiment_to_json(cfg));
    std::printf("# statistic: %s\n", report.statistic.c_str());
    for (const auto& c : report.checkpoints) {
        std::printf("checkpoint %2zu step %5zu random %s colm %s\n", c.index, c.step,
                    format_double(c.random_var).c_str(), format_double(c.colm_var).c_str());
    }
    std::printf("colm lower at %.0f%% of checkpoints; max gap %s; bound %s; p=%s\n", 100.0 * report.fraction_colm_lower,
                format_double(report.max_gap).c_str(), format_double(report.bound).c_str(),
                format_double(report.p_value).c_str());
    return 0;
}

int cmd_theory(const std::string& config_path, const CommonFlags& flags) {
    nlohmann::json j = read_json_file(config_path);
    if (!j.is_object()) throw ConfigError(config_path + ": expected an object");
    if (flags.seed) j["seed"] = *flags.seed;
    if (flags.out) j["output"] = *flags.out;
    if (flags.format) j["format"] = *flags.format;
    const TheoryConfig cfg = parse_theory_config(j);
    const TheoryReport report = run_theory_checks(cfg);
    write_theory_report(cfg.output, report, cfg.format);
    std::printf("coverage n=%zu (neighborhood mass %s), local-evaluation n=%zu, gap bound %s\n", report.coverage_n,
                format_double(report.neighborhood_mass).c_str(), report.local_eval_n,
                format_double(report.gap_bound).c_str());
    for (const auto& c : report.checks) {
        std::printf("%-26s %s value=%s threshold=%s  %s\n", c.name.c_str(), c.passed ? "PASS" : "FAIL",
                    format_double(c.value).c_str(), format_double(c.threshold).c_str(), c.detail.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coreset selection for imbalanced multi-source mini-batches"};
    app.require_subcommand(1);
    app.footer("Experiment config defaults (train, variance-probe, bench):\n" +
               experiment_to_json(ExperimentConfig{}).dump(2) + "\n\nTheory config defaults (theory-check):\n" +
               theory_to_json(TheoryConfig{}).dump(2) + "\n\nExit codes: 0 success, 2 configuration error, 3 divergence.");

    CommonFlags flags;
    std::string spec_path, config_path;

    auto* gen = app.add_subcommand("generate", "Generate a synthetic mixture dataset");
    gen->add_option("--spec", spec_path, "Mixture spec (JSON)")->required();
    add_common(gen, flags);

    auto* train = app.add_subcommand("train", "Train with the configured method and write metrics");
    auto* theory = app.add_subcommand("theory-check", "Monte-Carlo checks of the coverage and variance results");
    auto* probe = app.add_subcommand("variance-probe", "Compare random and CoLM gradient variance at checkpoints");
    auto* bench = app.add_subcommand("bench", "Train every configured selection method");
    for (auto* cmd : {train, theory, probe, bench}) {
        cmd->add_option("--config", config_path, "Config file (JSON)")->required();
        add_common(cmd, flags);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*gen) return cmd_generate(spec_path, flags);
        if (*train) return cmd_train(config_path, flags);
        if (*theory) return cmd_theory(config_path, flags);
        if (*probe) return cmd_variance_probe(config_path, flags);
        if (*bench) return cmd_bench(config_path, flags);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DatasetFormatError& e) {
        std::fprintf(stderr, "dataset error: %s\n", e.what());
        return 2;
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "diverged: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
