#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "colm/data_gen.h"
#include "colm/dataset.h"
#include "colm/optimizer.h"
#include "colm/selector.h"

namespace colm {

enum class Method { random, colm, big_loss, grad_norm, least_confidence, hidden_fl };

Method parse_method(const std::string& name);
std::string to_string(Method method);
std::vector<Method> all_methods();

struct DatasetSettings {
    /// Empty: generate from `synthetic`.
    std::string path;
    DataFormat format = DataFormat::csv;
    MixtureSpec synthetic;
};

enum class OptimizerKind { adam, sgd };

struct OptimizerSettings {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    LrScheduleKind schedule = LrScheduleKind::constant;
    double warmup_fraction = 0.03;
};

struct SelectionSettings {
    std::size_t sparsity = 0;
    MaskAggregation aggregation = MaskAggregation::mean_abs;
    SelectionGrouping grouping = SelectionGrouping::per_source;
    CoresetWeighting weighting = CoresetWeighting::uniform;
    GreedyVariant greedy = GreedyVariant::lazy;
    bool keep_small = true;
    /// Explicit small sources; unset classifies by size.
    std::optional<std::set<int>> small_sources;
    NormalizationMode normalization = NormalizationMode::blended;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct SpsaSettings {
    double perturbation_scale = 1e-3;
    std::size_t probes = 1;
    bool perturb_bias = true;
    PerturbationSharing sharing = PerturbationSharing::shared_per_step;
};

struct DiscoverySettings {
    bool enabled = false;
    std::size_t clusters = 2;
    std::size_t warmup_steps = 20;
    std::size_t refreshes = 4;
};

struct LoggingSettings {
    /// grad_variance is computed every this many steps (and at the last step).
    std::size_t variance_interval = 10;
    std::size_t variance_resamples = 30;
    /// Write measured wall times into the metrics file. Off by default so
    /// metrics files are byte-reproducible; timings always go to timing.csv.
    bool wall_time_in_metrics = false;
};

struct ProbeSettings {
    std::size_t checkpoints = 10;
    std::size_t resamples = 50;
    Method trajectory = Method::random;
    /// Gap bound to report; unset derives it from the synthetic mixture.
    std::optional<double> bound;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string output = "runs/default";
    DataFormat format = DataFormat::csv;
    Method method = Method::colm;
    std::size_t steps = 500;
    std::size_t batch_size = 32;
    /// 0 means 2 * batch_size.
    std::size_t large_batch_size = 0;
    std::size_t hidden_dim = 32;
    DatasetSettings dataset;
    OptimizerSettings optimizer;
    SelectionSettings selection;
    SpsaSettings spsa;
    DiscoverySettings discovery;
    LoggingSettings logging;
    ProbeSettings probe;
    std::vector<Method> bench_methods = all_methods();

    std::size_t resolved_large_batch() const noexcept { return large_batch_size ? large_batch_size : 2 * batch_size; }
    /// Throws ConfigError.
    void validate() const;
};

struct TheoryConfig {
    std::uint64_t seed = 0;
    std::string output = "runs/theory";
    DataFormat format = DataFormat::csv;
    std::size_t k = 2;
    std::size_t m = 2;
    double delta = 0.04;
    double epsilon = 0.1;
    double alpha_star = 1.0;
    /// Neighborhood radius for coverage and medoid checks (<= alpha_star).
    double alpha = 0.5;
    /// Density floor; unset derives beta g(alpha) from the planted mixture.
    std::optional<double> beta;
    std::size_t dim = 2;
    double center_spread = 4.0;
    double dense_scale = 0.5;
    std::size_t trials = 500;
    /// Variance-gap check: outliers per partition, their radius, partition
    /// size and planted centers.
    double kappa_per_partition = 1.0;
    double alpha_u = 2.0;
    std::size_t partition_size = 32;
    std::size_t variance_centers = 1;
    /// Size multiplier for the undersized coverage run.
    double undersize_factor = 0.1;

    void validate() const;
};

MixtureSpec parse_mixture(const nlohmann::json& j);
nlohmann::json mixture_to_json(const MixtureSpec& spec);

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentConfig& cfg);

TheoryConfig parse_theory_config(const nlohmann::json& j);
nlohmann::json theory_to_json(const TheoryConfig& cfg);

/// Reads a JSON file; parse failures raise ConfigError.
nlohmann::json read_json_file(const std::string& path);

}  // namespace colm
