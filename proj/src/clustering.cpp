#include "colm/clustering.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "colm/random.h"

namespace colm {

namespace {

double squared_distance(const DenseVector& a, const DenseVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::size_t nearest(const DenseVector& row, const std::vector<DenseVector>& centers, double& best_d2) {
    std::size_t best = 0;
    best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d2 = squared_distance(row, centers[c]);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = c;
        }
    }
    return best;
}

std::vector<DenseVector> seed_plus_plus(std::span<const DenseVector> rows, std::size_t k, CounterRng& rng) {
    std::vector<DenseVector> centers;
    centers.reserve(k);
    centers.push_back(rows[rng.uniform_index(rows.size())]);
    std::vector<double> d2(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) d2[i] = squared_distance(rows[i], centers[0]);
    while (centers.size() < k) {
        double total = 0.0;
        for (double x : d2) total += x;
        std::size_t pick = 0;
        if (total <= 0.0) {
            pick = rng.uniform_index(rows.size());
        } else {
            double target = rng.uniform() * total;
            pick = rows.size() - 1;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                target -= d2[i];
                if (target < 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(rows[pick]);
        for (std::size_t i = 0; i < rows.size(); ++i) d2[i] = std::min(d2[i], squared_distance(rows[i], centers.back()));
    }
    return centers;
}

}  // namespace

KMeansResult kmeans(std::span<const DenseVector> rows, std::size_t k, std::uint64_t seed, KMeansOptions options) {
    if (k == 0) throw std::invalid_argument("kmeans: k must be positive");
    if (rows.size() < k) {
        throw std::invalid_argument("kmeans: " + std::to_string(rows.size()) + " rows for " + std::to_string(k) +
                                    " clusters");
    }
    const std::size_t dim = rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != dim) throw DimensionError("kmeans: rows differ in length");
    }

    CounterRng rng(seed, /*stream=*/0x6B6D);
    std::vector<DenseVector> centers = seed_plus_plus(rows, k, rng);
    std::vector<std::size_t> assign(rows.size(), 0);

    KMeansResult result;
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) assign[i] = nearest(rows[i], centers, d2);

        std::vector<DenseVector> sums(k, DenseVector(dim));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            sums[assign[i]] += rows[i];
            ++counts[assign[i]];
        }
        double max_shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its center
            sums[c] *= 1.0 / static_cast<double>(counts[c]);
            max_shift = std::max(max_shift, std::sqrt(squared_distance(sums[c], centers[c])));
            centers[c] = std::move(sums[c]);
        }
        result.iterations = iter + 1;
        if (max_shift <= options.tolerance) break;
    }

    // Final assignment against the final centers, then canonical numbering.
    std::vector<int> renumber(k, -1);
    int next_label = 0;
    result.labels.resize(rows.size());
    result.inertia = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double d2 = 0.0;
        const std::size_t c = nearest(rows[i], centers, d2);
        result.inertia += d2;
        if (renumber[c] < 0) renumber[c] = next_label++;
        result.labels[i] = renumber[c];
    }
    result.centers.resize(static_cast<std::size_t>(next_label));
    for (std::size_t c = 0; c < k; ++c) {
        if (renumber[c] >= 0) result.centers[static_cast<std::size_t>(renumber[c])] = centers[c];
    }
    return result;
}

}  // namespace colm
