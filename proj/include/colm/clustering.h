#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "colm/numeric.h"

namespace colm {

struct KMeansOptions {
    std::size_t max_iterations = 100;
    /// Stop once no center moves by more than this (Euclidean).
    double tolerance = 1e-6;
};

struct KMeansResult {
    /// Cluster of each row, renumbered in order of first appearance.
    std::vector<int> labels;
    std::vector<DenseVector> centers;
    std::size_t iterations = 0;
    double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding. Requires rows.size() >= k >= 1.
KMeansResult kmeans(std::span<const DenseVector> rows, std::size_t k, std::uint64_t seed, KMeansOptions options = {});

}  // namespace colm
