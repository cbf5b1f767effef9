#include "colm/facility_location.h"

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <string>

namespace colm {

double distance(Metric metric, const DenseVector& a, const DenseVector& b) {
    return metric == Metric::l1 ? l1_distance(a, b) : l2_distance(a, b);
}

FacilityLocationProblem::FacilityLocationProblem(std::size_t n, std::vector<double> distances, double offset,
                                                 std::size_t budget)
    : n_(n), distances_(std::move(distances)), offset_(offset), budget_(budget) {
    if (n_ == 0) throw std::invalid_argument("FacilityLocationProblem: no elements");
    if (distances_.size() != n_ * n_) throw DimensionError("FacilityLocationProblem: distance matrix is not n x n");
    if (budget_ == 0 || budget_ > n_) {
        throw std::invalid_argument("FacilityLocationProblem: budget " + std::to_string(budget_) +
                                    " outside [1, " + std::to_string(n_) + "]");
    }
    double max_entry = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        if (distance(i, i) != 0.0) throw std::invalid_argument("FacilityLocationProblem: non-zero diagonal");
        for (std::size_t j = i + 1; j < n_; ++j) {
            const double d = distance(i, j);
            if (!(d >= 0.0)) throw std::invalid_argument("FacilityLocationProblem: negative or NaN distance");
            if (d != distance(j, i)) throw std::invalid_argument("FacilityLocationProblem: asymmetric distances");
            max_entry = std::max(max_entry, d);
        }
    }
    if (offset_ < max_entry) {
        throw std::invalid_argument("FacilityLocationProblem: offset C below the largest distance");
    }
}

FacilityLocationProblem FacilityLocationProblem::from_points(std::span<const DenseVector> points, Metric metric,
                                                             std::size_t budget) {
    const std::size_t n = points.size();
    std::vector<double> d(n * n, 0.0);
    double max_entry = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dij = colm::distance(metric, points[i], points[j]);
            d[i * n + j] = dij;
            d[j * n + i] = dij;
            max_entry = std::max(max_entry, dij);
        }
    }
    return FacilityLocationProblem(n, std::move(d), kOffsetFactor * max_entry, budget);
}

FacilityLocationProblem FacilityLocationProblem::with_budget(std::size_t budget) const {
    return FacilityLocationProblem(n_, distances_, offset_, budget);
}

FacilityLocationProblem FacilityLocationProblem::with_offset(double offset) const {
    return FacilityLocationProblem(n_, distances_, offset, budget_);
}

double fl_value(const FacilityLocationProblem& problem, std::span<const std::size_t> subset) {
    if (subset.empty()) return 0.0;
    const std::size_t n = problem.size();
    for (std::size_t s : subset) {
        if (s >= n) throw std::out_of_range("fl_value: element " + std::to_string(s) + " out of range");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = 0.0;
        for (std::size_t s : subset) best = std::max(best, problem.offset() - problem.distance(i, s));
        total += best;
    }
    return total;
}

namespace {

/// Running coverage: cover[i] = max over selected s of (C - d(i, s)), 0 when empty.
class Coverage {
public:
    explicit Coverage(const FacilityLocationProblem& p) : problem_(p), cover_(p.size(), 0.0) {}

    double gain(std::size_t e) {
        ++evaluations_;
        double g = 0.0;
        const std::size_t n = problem_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double improvement = (problem_.offset() - problem_.distance(i, e)) - cover_[i];
            if (improvement > 0.0) g += improvement;
        }
        return g;
    }

    void add(std::size_t e) {
        for (std::size_t i = 0; i < problem_.size(); ++i) {
            cover_[i] = std::max(cover_[i], problem_.offset() - problem_.distance(i, e));
        }
    }

    std::size_t evaluations() const noexcept { return evaluations_; }

private:
    const FacilityLocationProblem& problem_;
    std::vector<double> cover_;
    std::size_t evaluations_ = 0;
};

MedoidSolution finish(const FacilityLocationProblem& problem, std::vector<std::size_t> selected,
                      std::size_t evaluations) {
    MedoidSolution sol;
    const std::size_t n = problem.size();
    sol.selected = std::move(selected);
    sol.assignment.assign(n, 0);
    sol.cluster_sizes.assign(sol.selected.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best_slot = 0;
        for (std::size_t k = 1; k < sol.selected.size(); ++k) {
            const double dk = problem.distance(i, sol.selected[k]);
            const double db = problem.distance(i, sol.selected[best_slot]);
            if (dk < db || (dk == db && sol.selected[k] < sol.selected[best_slot])) best_slot = k;
        }
        sol.assignment[i] = sol.selected[best_slot];
        ++sol.cluster_sizes[best_slot];
    }
    sol.objective_value = fl_value(problem, sol.selected);
    sol.gain_evaluations = evaluations;
    return sol;
}

}  // namespace

MedoidSolution greedy_maximize(const FacilityLocationProblem& problem) {
    const std::size_t n = problem.size();
    Coverage coverage(problem);
    std::vector<bool> taken(n, false);
    std::vector<std::size_t> selected;
    selected.reserve(problem.budget());
    while (selected.size() < problem.budget()) {
        std::size_t best = n;
        double best_gain = -1.0;
        for (std::size_t e = 0; e < n; ++e) {
            if (taken[e]) continue;
            const double g = coverage.gain(e);
            if (g > best_gain) {
                best_gain = g;
                best = e;
            }
        }
        taken[best] = true;
        coverage.add(best);
        selected.push_back(best);
    }
    return finish(problem, std::move(selected), coverage.evaluations());
}

MedoidSolution lazy_greedy_maximize(const FacilityLocationProblem& problem) {
    struct Entry {
        double bound;
        std::size_t element;
        std::size_t round;  // round in which `bound` was computed
    };
    // Max-heap on bound; smaller element first on equal bounds.
    auto lower_priority = [](const Entry& a, const Entry& b) {
        return a.bound != b.bound ? a.bound < b.bound : a.element > b.element;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(lower_priority)> heap(lower_priority);

    Coverage coverage(problem);
    for (std::size_t e = 0; e < problem.size(); ++e) heap.push({coverage.gain(e), e, 0});

    std::vector<std::size_t> selected;
    selected.reserve(problem.budget());
    std::size_t round = 0;
    while (selected.size() < problem.budget()) {
        Entry top = heap.top();
        heap.pop();
        if (top.round == round) {
            coverage.add(top.element);
            selected.push_back(top.element);
            ++round;
            continue;
        }
        heap.push({coverage.gain(top.element), top.element, round});
    }
    return finish(problem, std::move(selected), coverage.evaluations());
}

}  // namespace colm
