#include "colm/optimizer.h"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace colm {

namespace {

void require_len(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                             std::to_string(got));
    }
}

double correction(double beta, std::uint64_t t) {
    return 1.0 - std::pow(beta, static_cast<double>(t));
}

}  // namespace

AdamState AdamState::zeros(std::size_t dim, AdamConfig config) {
    return AdamState{config, DenseVector(dim), DenseVector(dim), 0};
}

DenseVector AdamState::corrected_first_moment() const {
    if (t == 0) return DenseVector(m.size());
    return m * (1.0 / correction(config.beta1, t));
}

DenseVector AdamState::corrected_second_moment() const {
    if (t == 0) return DenseVector(v.size());
    return v * (1.0 / correction(config.beta2, t));
}

AdamStepResult adam_step(const AdamState& state, const DenseVector& params, const DenseVector& grad) {
    require_len(params.size(), state.m.size(), "adam_step(params)");
    require_len(grad.size(), state.m.size(), "adam_step(grad)");
    const auto& cfg = state.config;
    AdamStepResult out{state, params};
    auto& s = out.state;
    s.t = state.t + 1;
    const double c1 = correction(cfg.beta1, s.t);
    const double c2 = correction(cfg.beta2, s.t);
    for (std::size_t j = 0; j < grad.size(); ++j) {
        const double g = grad[j];
        s.m[j] = cfg.beta1 * state.m[j] + (1.0 - cfg.beta1) * g;
        s.v[j] = cfg.beta2 * state.v[j] + (1.0 - cfg.beta2) * g * g;
        const double m_corr = s.m[j] / c1;
        const double v_corr = s.v[j] / c2;
        out.params[j] -= cfg.lr * m_corr / (cfg.eps + std::sqrt(v_corr));
    }
    return out;
}

DenseVector sgd_step(const DenseVector& params, const DenseVector& grad, double lr) {
    require_len(grad.size(), params.size(), "sgd_step");
    DenseVector out = params;
    out.add_scaled(grad, -lr);
    return out;
}

double LrSchedule::at(std::size_t step, std::size_t total_steps) const {
    if (kind == LrScheduleKind::constant) return base_lr;
    if (total_steps == 0 || step == 0) return 0.0;
    const auto warmup = static_cast<std::size_t>(std::ceil(warmup_fraction * static_cast<double>(total_steps)));
    if (step <= warmup) return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
    if (total_steps <= warmup) return base_lr;
    const double progress =
        static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
    return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * progress));
}

SelectionState SelectionState::zeros(std::size_t dim) {
    SelectionState s;
    s.m_hat = DenseVector(dim);
    s.v_hat = DenseVector(dim);
    return s;
}

DenseVector normalized_feature(const SelectionState& state, const DenseVector& grad) {
    require_len(grad.size(), state.m_hat.size(), "normalized_feature");
    if (state.mode == NormalizationMode::none) return grad;

    DenseVector out(grad.size());
    if (state.mode == NormalizationMode::shared_second_moment && state.t > 0) {
        const double c2 = correction(state.beta2, state.t);
        for (std::size_t j = 0; j < grad.size(); ++j) {
            out[j] = grad[j] / (state.eps + std::sqrt(state.v_hat[j] / c2));
        }
        return out;
    }

    // Blended: the example's gradient is treated as this step's observation.
    const std::uint64_t t = state.t + 1;
    const double c1 = correction(state.beta1, t);
    const double c2 = correction(state.beta2, t);
    for (std::size_t j = 0; j < grad.size(); ++j) {
        const double g = grad[j];
        const double m = (state.beta1 * state.m_hat[j] + (1.0 - state.beta1) * g) / c1;
        const double v = (state.beta2 * state.v_hat[j] + (1.0 - state.beta2) * g * g) / c2;
        out[j] = m / (state.eps + std::sqrt(v));
    }
    return out;
}

SelectionState update_selection_history(const SelectionState& state, const DenseVector& big_source_mean_grad) {
    require_len(big_source_mean_grad.size(), state.m_hat.size(), "update_selection_history");
    SelectionState next = state;
    for (std::size_t j = 0; j < big_source_mean_grad.size(); ++j) {
        const double g = big_source_mean_grad[j];
        next.m_hat[j] = state.beta1 * state.m_hat[j] + (1.0 - state.beta1) * g;
        next.v_hat[j] = state.beta2 * state.v_hat[j] + (1.0 - state.beta2) * g * g;
    }
    next.t = state.t + 1;
    return next;
}

}  // namespace colm
