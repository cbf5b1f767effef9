#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "colm/dataset.h"
#include "colm/numeric.h"

namespace colm {

enum class LabelRule {
    /// argmax of one random linear map applied to the features.
    shared_linear,
    /// argmax of a per-source random linear map applied to the offset from
    /// the example's planted center.
    source_linear,
    /// Class of the planted center (center index mod classes).
    center,
};

/// Multi-source mixture: every source owns `centers_per_source` dense balls
/// of radius `dense_radius` (alpha*), and `outliers` points in total sit
/// between alpha* and `outlier_radius` (alpha_u) from a center of their
/// source.
struct MixtureSpec {
    std::size_t num_sources = 10;
    /// Explicit sizes. When empty, sizes fall geometrically from
    /// `largest_source` to `largest_source / imbalance_ratio`.
    std::vector<std::size_t> source_sizes;
    std::size_t largest_source = 3000;
    double imbalance_ratio = 300.0;
    std::size_t centers_per_source = 2;
    double dense_radius = 1.0;
    /// Typical distance of a dense point from its center, as a fraction of
    /// alpha*. Points are Gaussian around the center, truncated at alpha*.
    double dense_scale = 0.5;
    std::size_t outliers = 0;
    double outlier_radius = 2.0;
    std::size_t feature_dim = 20;
    /// Typical norm of a randomly placed center.
    double center_spread = 6.0;
    /// Optional explicit centers, source-major (num_sources * centers_per_source).
    std::vector<DenseVector> centers;
    std::size_t num_classes = 10;
    LabelRule label_rule = LabelRule::shared_linear;
    /// Probability that a label is replaced by a uniformly random class.
    double label_noise = 0.1;
    std::uint64_t seed = 0;

    /// Throws ConfigError on an inconsistent spec.
    void validate() const;
    std::vector<std::size_t> resolved_sizes() const;
    /// Per-coordinate standard deviation of the dense Gaussians.
    double coordinate_sigma() const;
};

struct PlantedTruth {
    std::vector<DenseVector> centers;
    /// Source owning each center.
    std::vector<int> center_source;
    /// Planted center of each example (outliers: the center they orbit).
    std::vector<std::size_t> example_center;
    std::vector<bool> is_outlier;
};

struct GeneratedData {
    Dataset dataset;
    PlantedTruth truth;
};

/// Pure function of the spec. Throws ConfigError when two centers are closer
/// than 2 alpha* or the geometry cannot be realised.
GeneratedData generate(const MixtureSpec& spec);

/// Volume of the Euclidean ball of radius r in R^dim.
double ball_volume(std::size_t dim, double radius);

/// Probability that a dense point lies within `alpha` of its own center.
double dense_ball_mass(const MixtureSpec& spec, double alpha);

/// Smallest n with n >= 2 k m ln(k m / delta) / mass, where mass (= beta
/// g(alpha)) is the probability that a draw lands in a given
/// alpha-neighborhood.
std::size_t coverage_sample_size(std::size_t k, std::size_t m, double delta, double mass);

}  // namespace colm
