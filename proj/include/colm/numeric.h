#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace colm {

/// Raised when two vectors (or a vector and a mask) disagree on length.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Fixed-length vector of doubles. Length is set at construction and every
/// binary operation requires equal lengths.
class DenseVector {
public:
    DenseVector() = default;
    explicit DenseVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
    explicit DenseVector(std::vector<double> values) : values_(std::move(values)) {}
    DenseVector(std::initializer_list<double> values) : values_(values) {}

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    double* data() noexcept { return values_.data(); }
    const double* data() const noexcept { return values_.data(); }

    auto begin() noexcept { return values_.begin(); }
    auto end() noexcept { return values_.end(); }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    std::span<double> span() noexcept { return values_; }
    std::span<const double> span() const noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    DenseVector& operator+=(const DenseVector& other);
    DenseVector& operator-=(const DenseVector& other);
    DenseVector& operator*=(double scale) noexcept;

    /// this += scale * other
    DenseVector& add_scaled(const DenseVector& other, double scale);

    bool all_finite() const noexcept;

    friend bool operator==(const DenseVector&, const DenseVector&) = default;

private:
    std::vector<double> values_;
};

DenseVector operator+(DenseVector a, const DenseVector& b);
DenseVector operator-(DenseVector a, const DenseVector& b);
DenseVector operator*(DenseVector a, double scale);
DenseVector operator*(double scale, DenseVector a);

double dot(const DenseVector& a, const DenseVector& b);
double squared_norm(const DenseVector& v) noexcept;
double l2_norm(const DenseVector& v) noexcept;
double cosine_similarity(const DenseVector& a, const DenseVector& b);

/// Kept coordinates of a vector of dimension `dimension`. Indices are
/// strictly increasing, in range, and there is at least one.
class SparsityMask {
public:
    SparsityMask(std::size_t dimension, std::vector<std::size_t> kept_indices);

    /// Mask that keeps every coordinate.
    static SparsityMask full(std::size_t dimension);

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t kept() const noexcept { return kept_.size(); }
    const std::vector<std::size_t>& kept_indices() const noexcept { return kept_; }

    friend bool operator==(const SparsityMask&, const SparsityMask&) = default;

private:
    std::size_t dimension_;
    std::vector<std::size_t> kept_;
};

double l1_distance(const DenseVector& a, const DenseVector& b);
double l1_distance(const DenseVector& a, const DenseVector& b, const SparsityMask& mask);
double l2_distance(const DenseVector& a, const DenseVector& b);

/// The h coordinates of largest magnitude. Ties go to the smaller index.
SparsityMask top_h_mask(const DenseVector& v, std::size_t h);

/// Gathers the kept coordinates into a compact vector of length mask.kept().
DenseVector restrict_to(const DenseVector& v, const SparsityMask& mask);

/// Elementwise mean of equal-length vectors. Requires at least one vector.
DenseVector mean_of(std::span<const DenseVector> vectors);

/// Trace of the empirical (unbiased) covariance of a set of samples.
double covariance_trace(std::span<const DenseVector> samples);

}  // namespace colm
