#include "colm/toy_model.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "colm/random.h"

namespace colm {

namespace {

void check_example(const ModelShape& shape, const Example& example) {
    if (example.features.size() != shape.input_dim) {
        throw DimensionError("example has " + std::to_string(example.features.size()) +
                             " features, model expects " + std::to_string(shape.input_dim));
    }
    if (example.label >= shape.num_classes) {
        throw std::invalid_argument("label " + std::to_string(example.label) + " outside [0, " +
                                    std::to_string(shape.num_classes) + ")");
    }
}

double log_sum_exp(const std::vector<double>& logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double z : logits) s += std::exp(z - peak);
    return peak + std::log(s);
}

}  // namespace

ModelParams::ModelParams(ModelShape shape, DenseVector flat) : shape_(shape), flat_(std::move(flat)) {
    if (shape_.input_dim == 0 || shape_.hidden_dim == 0 || shape_.num_classes < 2) {
        throw std::invalid_argument("ModelShape: dimensions must be positive and num_classes >= 2");
    }
    if (flat_.size() != shape_.total_dim()) {
        throw DimensionError("ModelParams: expected " + std::to_string(shape_.total_dim()) +
                             " parameters, got " + std::to_string(flat_.size()));
    }
}

ModelParams ModelParams::zeros(ModelShape shape) { return ModelParams(shape, DenseVector(shape.total_dim())); }

ModelParams ModelParams::initialize(ModelShape shape, std::uint64_t seed) {
    DenseVector flat(shape.total_dim());
    CounterRng rng(seed, /*stream=*/0x1417);
    const double hidden_scale = 1.0 / std::sqrt(static_cast<double>(shape.input_dim));
    const double proj_scale = 1.0 / std::sqrt(static_cast<double>(shape.hidden_dim));
    const std::size_t w1 = shape.input_dim * shape.hidden_dim;
    const std::size_t w2_begin = w1 + shape.hidden_dim;
    const std::size_t w2_end = w2_begin + shape.hidden_dim * shape.num_classes;
    for (std::size_t i = 0; i < w1; ++i) flat[i] = hidden_scale * rng.normal();
    for (std::size_t i = w2_begin; i < w2_end; ++i) flat[i] = proj_scale * rng.normal();
    return ModelParams(shape, std::move(flat));
}

std::span<const double> ModelParams::hidden_weights() const noexcept {
    return flat_.span().subspan(0, shape_.input_dim * shape_.hidden_dim);
}

std::span<const double> ModelParams::hidden_bias() const noexcept {
    return flat_.span().subspan(shape_.input_dim * shape_.hidden_dim, shape_.hidden_dim);
}

std::size_t ModelParams::projection_offset() const noexcept { return shape_.total_dim() - shape_.projection_dim(); }

std::span<const double> ModelParams::projection() const noexcept {
    return flat_.span().subspan(projection_offset(), shape_.projection_dim());
}

std::span<const double> ActivationCache::row(std::size_t i) const {
    if (i >= rows_) throw std::out_of_range("ActivationCache: no row " + std::to_string(i));
    return std::span<const double>(data_).subspan(i * width_, width_);
}

std::span<double> ActivationCache::row(std::size_t i) {
    if (i >= rows_) throw std::out_of_range("ActivationCache: no row " + std::to_string(i));
    return std::span<double>(data_).subspan(i * width_, width_);
}

DenseVector hidden_activation(const ModelParams& params, const DenseVector& features) {
    const auto& shape = params.shape();
    if (features.size() != shape.input_dim) {
        throw DimensionError("hidden_activation: feature length mismatch");
    }
    const auto w1 = params.hidden_weights();
    const auto b1 = params.hidden_bias();
    DenseVector act(shape.hidden_dim);
    for (std::size_t j = 0; j < shape.hidden_dim; ++j) act[j] = b1[j];
    for (std::size_t i = 0; i < shape.input_dim; ++i) {
        const double xi = features[i];
        const double* row = w1.data() + i * shape.hidden_dim;
        for (std::size_t j = 0; j < shape.hidden_dim; ++j) act[j] += xi * row[j];
    }
    for (double& a : act) a = std::tanh(a);
    return act;
}

std::vector<double> logits_from_activation(const ModelShape& shape, std::span<const double> projection,
                                           std::span<const double> activation) {
    if (projection.size() != shape.projection_dim() || activation.size() != shape.hidden_dim) {
        throw DimensionError("logits_from_activation: size mismatch");
    }
    const std::size_t c = shape.num_classes;
    const double* bias = projection.data() + shape.hidden_dim * c;
    std::vector<double> logits(bias, bias + c);
    for (std::size_t j = 0; j < shape.hidden_dim; ++j) {
        const double aj = activation[j];
        const double* row = projection.data() + j * c;
        for (std::size_t k = 0; k < c; ++k) logits[k] += aj * row[k];
    }
    return logits;
}

double loss_from_activation(const ModelShape& shape, std::span<const double> projection,
                            std::span<const double> activation, std::size_t label) {
    if (label >= shape.num_classes) throw std::invalid_argument("loss_from_activation: label out of range");
    const auto logits = logits_from_activation(shape, projection, activation);
    return log_sum_exp(logits) - logits[label];
}

double per_example_loss(const ModelParams& params, const Example& example) {
    check_example(params.shape(), example);
    const DenseVector act = hidden_activation(params, example.features);
    return loss_from_activation(params.shape(), params.projection(), act.span(), example.label);
}

std::vector<double> predict_proba(const ModelParams& params, const Example& example) {
    check_example(params.shape(), example);
    const DenseVector act = hidden_activation(params, example.features);
    auto logits = logits_from_activation(params.shape(), params.projection(), act.span());
    const double lse = log_sum_exp(logits);
    for (double& z : logits) z = std::exp(z - lse);
    return logits;
}

std::size_t predict(const ModelParams& params, const Example& example) {
    const auto p = predict_proba(params, example);
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

DenseVector exact_gradient(const ModelParams& params, const Example& example, GradScope scope) {
    const auto& shape = params.shape();
    check_example(shape, example);
    const std::size_t din = shape.input_dim;
    const std::size_t dh = shape.hidden_dim;
    const std::size_t c = shape.num_classes;

    const DenseVector act = hidden_activation(params, example.features);
    const auto proj = params.projection();
    auto probs = logits_from_activation(shape, proj, act.span());
    const double lse = log_sum_exp(probs);
    for (double& z : probs) z = std::exp(z - lse);
    // d loss / d logits
    std::vector<double> dlogits = probs;
    dlogits[example.label] -= 1.0;

    DenseVector grad(shape.total_dim());
    const std::size_t w2_off = params.projection_offset();
    const std::size_t b2_off = w2_off + dh * c;
    for (std::size_t j = 0; j < dh; ++j) {
        for (std::size_t k = 0; k < c; ++k) grad[w2_off + j * c + k] = act[j] * dlogits[k];
    }
    for (std::size_t k = 0; k < c; ++k) grad[b2_off + k] = dlogits[k];

    if (scope == GradScope::last_projection) {
        DenseVector suffix(shape.projection_dim());
        std::copy(grad.begin() + static_cast<std::ptrdiff_t>(w2_off), grad.end(), suffix.begin());
        return suffix;
    }

    const std::size_t b1_off = din * dh;
    for (std::size_t j = 0; j < dh; ++j) {
        double da = 0.0;
        const double* row = proj.data() + j * c;
        for (std::size_t k = 0; k < c; ++k) da += row[k] * dlogits[k];
        const double dz = da * (1.0 - act[j] * act[j]);
        grad[b1_off + j] = dz;
        for (std::size_t i = 0; i < din; ++i) grad[i * dh + j] = example.features[i] * dz;
    }
    return grad;
}

DenseVector mean_gradient(const ModelParams& params, std::span<const Example> batch) {
    if (batch.empty()) throw std::invalid_argument("mean_gradient: empty batch");
    DenseVector acc(params.shape().total_dim());
    for (const auto& ex : batch) acc += exact_gradient(params, ex);
    acc *= 1.0 / static_cast<double>(batch.size());
    return acc;
}

ForwardResult forward_cached(const ModelParams& params, std::span<const Example> batch) {
    if (batch.empty()) throw std::invalid_argument("forward_cached: empty batch");
    const auto& shape = params.shape();
    ForwardResult out{std::vector<double>(batch.size()), ActivationCache(batch.size(), shape.hidden_dim)};
    for (std::size_t i = 0; i < batch.size(); ++i) {
        check_example(shape, batch[i]);
        const DenseVector act = hidden_activation(params, batch[i].features);
        auto row = out.cache.row(i);
        std::copy(act.begin(), act.end(), row.begin());
        out.losses[i] = loss_from_activation(shape, params.projection(), row, batch[i].label);
    }
    return out;
}

}  // namespace colm
