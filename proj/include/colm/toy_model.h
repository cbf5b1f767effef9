#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "colm/numeric.h"

namespace colm {

/// Sizes of the one-hidden-layer classifier.
struct ModelShape {
    std::size_t input_dim = 20;
    std::size_t hidden_dim = 32;
    std::size_t num_classes = 10;

    /// Flattened size of the final linear layer (weights + bias).
    std::size_t projection_dim() const noexcept { return hidden_dim * num_classes + num_classes; }
    std::size_t total_dim() const noexcept {
        return input_dim * hidden_dim + hidden_dim + projection_dim();
    }

    friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// Parameters of x -> tanh(x W1 + b1) W2 + b2, stored as one flat vector laid
/// out as [W1 (input x hidden, row-major), b1, W2 (hidden x classes,
/// row-major), b2]. The last projection_dim() entries are the projection
/// layer, so a last-layer gradient is a suffix of the full gradient.
class ModelParams {
public:
    ModelParams(ModelShape shape, DenseVector flat);

    /// All-zero parameters.
    static ModelParams zeros(ModelShape shape);
    /// Gaussian init with scale 1/sqrt(fan_in); biases start at zero.
    static ModelParams initialize(ModelShape shape, std::uint64_t seed);

    const ModelShape& shape() const noexcept { return shape_; }
    const DenseVector& flat() const noexcept { return flat_; }
    DenseVector& flat() noexcept { return flat_; }

    std::span<const double> hidden_weights() const noexcept;
    std::span<const double> hidden_bias() const noexcept;
    /// Projection weights followed by projection bias.
    std::span<const double> projection() const noexcept;
    std::size_t projection_offset() const noexcept;

private:
    ModelShape shape_;
    DenseVector flat_;
};

struct Example {
    DenseVector features;
    std::size_t label = 0;
    int source_id = 0;
};

enum class GradScope { all, last_projection };

/// Penultimate (post-tanh) activations, one row per batch example.
class ActivationCache {
public:
    ActivationCache(std::size_t rows, std::size_t width) : rows_(rows), width_(width), data_(rows * width) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t width() const noexcept { return width_; }
    std::span<const double> row(std::size_t i) const;
    std::span<double> row(std::size_t i);

private:
    std::size_t rows_;
    std::size_t width_;
    std::vector<double> data_;
};

struct ForwardResult {
    std::vector<double> losses;
    ActivationCache cache;
};

/// Penultimate activations for one example.
DenseVector hidden_activation(const ModelParams& params, const DenseVector& features);

/// Logits computed from a penultimate activation row and a flattened
/// projection block (weights then bias, length projection_dim()).
std::vector<double> logits_from_activation(const ModelShape& shape, std::span<const double> projection,
                                           std::span<const double> activation);

/// Softmax cross-entropy evaluated from a cached activation row. This is the
/// only path by which the last layer is evaluated, so full and cached
/// forwards agree exactly.
double loss_from_activation(const ModelShape& shape, std::span<const double> projection,
                            std::span<const double> activation, std::size_t label);

double per_example_loss(const ModelParams& params, const Example& example);

/// Class probabilities.
std::vector<double> predict_proba(const ModelParams& params, const Example& example);
std::size_t predict(const ModelParams& params, const Example& example);

/// Backpropagated gradient of the per-example loss. With
/// GradScope::last_projection the result is the last projection_dim()
/// entries of the full gradient.
DenseVector exact_gradient(const ModelParams& params, const Example& example, GradScope scope = GradScope::all);

/// Gradient of the mean loss over a batch.
DenseVector mean_gradient(const ModelParams& params, std::span<const Example> batch);

ForwardResult forward_cached(const ModelParams& params, std::span<const Example> batch);

}  // namespace colm
