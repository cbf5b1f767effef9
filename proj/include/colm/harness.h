#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "colm/config.h"
#include "colm/dataset.h"
#include "colm/toy_model.h"

namespace colm {

/// Column order of every metrics file.
inline constexpr const char* kMetricsHeader = "step,loss,grad_variance,small_src_acc,big_src_acc,select_ms,train_ms";

struct MetricsRow {
    std::size_t step = 0;
    /// Mean loss over the full dataset after the step's update.
    double loss = 0.0;
    /// Estimator variance of the method's mini-batch mean gradient; NaN on
    /// steps where it is not computed.
    double grad_variance = 0.0;
    double small_src_acc = 0.0;
    double big_src_acc = 0.0;
    double select_ms = 0.0;
    double train_ms = 0.0;
};

struct RunResult {
    Method method = Method::colm;
    std::vector<MetricsRow> rows;
    ModelParams final_params{ModelShape{}, DenseVector(ModelShape{}.total_dim())};
    double final_loss = 0.0;
    double final_small_acc = 0.0;
    double final_big_acc = 0.0;
    /// Steps on which the small-source members alone filled the budget.
    std::size_t over_budget_steps = 0;
    /// Source id of every example as used for selection at the end of the
    /// run (cluster labels when sources are discovered).
    std::vector<int> selection_sources;
};

/// Loads the configured file or generates the synthetic mixture.
Dataset resolve_dataset(const ExperimentConfig& cfg);

/// Trains with cfg.method. Throws DivergenceError on a non-finite loss.
RunResult run_training(const ExperimentConfig& cfg, const Dataset& data);

/// One run per entry of cfg.bench_methods, all from the same seeds.
std::vector<RunResult> run_baseline_selectors(const ExperimentConfig& cfg, const Dataset& data);

/// Writes <dir>/metrics.<fmt> and <dir>/timing.csv.
void write_metrics(const std::filesystem::path& dir, const RunResult& run, DataFormat format,
                   bool wall_time_in_metrics);

/// Selected positions (ascending) for a baseline scorer over a batch: the b
/// highest-scoring members, smaller dataset index on ties. Exposed for tests.
std::vector<std::size_t> top_scoring_positions(const std::vector<double>& scores,
                                               const std::vector<std::size_t>& dataset_indices, std::size_t b);

/// Per-member scores used by the score-based baselines (higher is picked).
std::vector<double> baseline_scores(Method method, const ModelParams& params, std::span<const Example> batch);

/// Trace of the covariance of the mean gradient of b uniformly drawn
/// examples, over `resamples` draws at fixed params.
double random_subset_variance(const ModelParams& params, std::span<const Example> data, std::size_t b,
                              std::size_t resamples, std::uint64_t seed);

struct VarianceCheckpoint {
    std::size_t index = 0;
    std::size_t step = 0;
    double random_var = 0.0;
    double colm_var = 0.0;
};

struct VarianceReport {
    std::string statistic;
    Method trajectory = Method::random;
    std::size_t resamples = 0;
    std::size_t batch_size = 0;
    std::size_t large_batch_size = 0;
    /// NaN when no bound applies.
    double bound = 0.0;
    std::vector<VarianceCheckpoint> checkpoints;
    double fraction_colm_lower = 0.0;
    double max_gap = 0.0;
    /// Two-sided test that log(random_var / colm_var) has mean zero.
    double p_value = 1.0;
};

/// (kappa/m)(alpha_u - alpha*)(2 alpha* + (kappa/m)(alpha_u - alpha*)).
double variance_gap_bound(double kappa_per_batch, double alpha_u, double alpha_star);

/// The bound at a mixture's planted parameters with kappa/m measured per
/// large batch of size r.
double mixture_gap_bound(const MixtureSpec& spec, std::size_t large_batch);

/// Trains along cfg.probe.trajectory and, at evenly spaced checkpoints,
/// compares random size-b subsets with CoLM coresets over the same
/// resampled large batches.
VarianceReport run_variance_probe(const ExperimentConfig& cfg, const Dataset& data, double bound);

void write_variance_report(const std::filesystem::path& dir, const VarianceReport& report, DataFormat format);

}  // namespace colm
