#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "colm/numeric.h"

namespace colm {

enum class Metric { l1, l2 };

double distance(Metric metric, const DenseVector& a, const DenseVector& b);

/// Facility-location instance: sum_i max_{s in S} (C - d(i, s)) over a
/// symmetric, zero-diagonal distance matrix with C >= every distance, so
/// the empty set scores 0 and every term is non-negative.
class FacilityLocationProblem {
public:
    /// `distances` is row-major n x n.
    FacilityLocationProblem(std::size_t n, std::vector<double> distances, double offset, std::size_t budget);

    /// Eager pairwise distances with C = 1.01 * max distance.
    static FacilityLocationProblem from_points(std::span<const DenseVector> points, Metric metric,
                                               std::size_t budget);

    static constexpr double kOffsetFactor = 1.01;

    std::size_t size() const noexcept { return n_; }
    double distance(std::size_t i, std::size_t j) const noexcept { return distances_[i * n_ + j]; }
    double offset() const noexcept { return offset_; }
    std::size_t budget() const noexcept { return budget_; }
    const std::vector<double>& distances() const noexcept { return distances_; }

    FacilityLocationProblem with_budget(std::size_t budget) const;
    FacilityLocationProblem with_offset(double offset) const;

private:
    std::size_t n_;
    std::vector<double> distances_;
    double offset_;
    std::size_t budget_;
};

struct MedoidSolution {
    /// Elements in the order they were picked.
    std::vector<std::size_t> selected;
    /// For every element, the selected element nearest to it (smaller index
    /// on ties).
    std::vector<std::size_t> assignment;
    /// Number of elements assigned to each entry of `selected`.
    std::vector<std::size_t> cluster_sizes;
    double objective_value = 0.0;
    /// Marginal-gain evaluations performed.
    std::size_t gain_evaluations = 0;
};

/// Objective value; the empty set scores 0.
double fl_value(const FacilityLocationProblem& problem, std::span<const std::size_t> subset);

/// Naive greedy: each round adds the element of largest marginal gain,
/// smaller index on ties, until the budget is used.
MedoidSolution greedy_maximize(const FacilityLocationProblem& problem);

/// Lazy greedy over stale upper bounds. Same selections as greedy_maximize.
MedoidSolution lazy_greedy_maximize(const FacilityLocationProblem& problem);

}  // namespace colm
