#pragma once

#include <cstddef>
#include <cstdint>

#include "colm/numeric.h"

namespace colm {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double lr = 1e-3;
};

/// Adam moments. m and v hold the raw (uncorrected) exponential averages;
/// bias correction is applied when they are read.
struct AdamState {
    AdamConfig config;
    DenseVector m;
    DenseVector v;
    std::uint64_t t = 0;

    static AdamState zeros(std::size_t dim, AdamConfig config = {});

    DenseVector corrected_first_moment() const;
    DenseVector corrected_second_moment() const;
};

struct AdamStepResult {
    AdamState state;
    DenseVector params;
};

/// One Adam update: advance the moments, then move params by
/// -lr * m_corrected / (eps + sqrt(v_corrected)).
AdamStepResult adam_step(const AdamState& state, const DenseVector& params, const DenseVector& grad);

DenseVector sgd_step(const DenseVector& params, const DenseVector& grad, double lr);

enum class LrScheduleKind { constant, cosine };

/// Constant rate, or linear warm-up followed by cosine decay to zero.
struct LrSchedule {
    LrScheduleKind kind = LrScheduleKind::constant;
    double base_lr = 1e-3;
    double warmup_fraction = 0.03;

    /// Rate for 1-based step `step` out of `total_steps`.
    double at(std::size_t step, std::size_t total_steps) const;
};

/// How a per-example gradient is turned into a selection feature.
enum class NormalizationMode {
    /// Blend the example gradient into the shared history, bias-correct, and
    /// divide the first moment by eps + sqrt(second moment).
    blended,
    /// Divide the raw example gradient by eps + sqrt of the shared,
    /// bias-corrected second moment only.
    shared_second_moment,
    /// Use the raw gradient (no Adam normalization).
    none,
};

/// Shared moment history over last-projection gradients, advanced only from
/// big-source gradient summaries.
struct SelectionState {
    DenseVector m_hat;
    DenseVector v_hat;
    std::uint64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    NormalizationMode mode = NormalizationMode::blended;

    static SelectionState zeros(std::size_t dim);
};

/// Adam-normalized feature of one example's gradient at step t+1. Does not
/// modify the state.
DenseVector normalized_feature(const SelectionState& state, const DenseVector& grad);

/// Advances the shared history by one exponential-average step.
SelectionState update_selection_history(const SelectionState& state, const DenseVector& big_source_mean_grad);

}  // namespace colm
