#include "colm/numeric.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace colm {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) +
                             " vs " + std::to_string(b) + ")");
    }
}

}  // namespace

DenseVector& DenseVector::operator+=(const DenseVector& other) {
    require_same_size(size(), other.size(), "DenseVector::operator+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

DenseVector& DenseVector::operator-=(const DenseVector& other) {
    require_same_size(size(), other.size(), "DenseVector::operator-=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

DenseVector& DenseVector::operator*=(double scale) noexcept {
    for (double& x : values_) x *= scale;
    return *this;
}

DenseVector& DenseVector::add_scaled(const DenseVector& other, double scale) {
    require_same_size(size(), other.size(), "DenseVector::add_scaled");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * other.values_[i];
    return *this;
}

bool DenseVector::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

DenseVector operator+(DenseVector a, const DenseVector& b) { return a += b; }
DenseVector operator-(DenseVector a, const DenseVector& b) { return a -= b; }
DenseVector operator*(DenseVector a, double scale) { return a *= scale; }
DenseVector operator*(double scale, DenseVector a) { return a *= scale; }

double dot(const DenseVector& a, const DenseVector& b) {
    require_same_size(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double squared_norm(const DenseVector& v) noexcept {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double l2_norm(const DenseVector& v) noexcept { return std::sqrt(squared_norm(v)); }

double cosine_similarity(const DenseVector& a, const DenseVector& b) {
    const double denom = l2_norm(a) * l2_norm(b);
    return denom > 0.0 ? dot(a, b) / denom : 0.0;
}

SparsityMask::SparsityMask(std::size_t dimension, std::vector<std::size_t> kept_indices)
    : dimension_(dimension), kept_(std::move(kept_indices)) {
    if (dimension_ == 0) throw std::invalid_argument("SparsityMask: dimension must be positive");
    if (kept_.empty()) throw std::invalid_argument("SparsityMask: must keep at least one index");
    for (std::size_t i = 0; i < kept_.size(); ++i) {
        if (kept_[i] >= dimension_) {
            throw std::invalid_argument("SparsityMask: index " + std::to_string(kept_[i]) +
                                        " out of range for dimension " + std::to_string(dimension_));
        }
        if (i > 0 && kept_[i] <= kept_[i - 1]) {
            throw std::invalid_argument("SparsityMask: indices must be strictly increasing");
        }
    }
}

SparsityMask SparsityMask::full(std::size_t dimension) {
    std::vector<std::size_t> all(dimension);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return SparsityMask(dimension, std::move(all));
}

double l1_distance(const DenseVector& a, const DenseVector& b) {
    require_same_size(a.size(), b.size(), "l1_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

double l1_distance(const DenseVector& a, const DenseVector& b, const SparsityMask& mask) {
    require_same_size(a.size(), b.size(), "l1_distance");
    require_same_size(a.size(), mask.dimension(), "l1_distance (mask)");
    double s = 0.0;
    for (std::size_t j : mask.kept_indices()) s += std::abs(a[j] - b[j]);
    return s;
}

double l2_distance(const DenseVector& a, const DenseVector& b) {
    require_same_size(a.size(), b.size(), "l2_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

SparsityMask top_h_mask(const DenseVector& v, std::size_t h) {
    if (h == 0 || h > v.size()) {
        throw std::invalid_argument("top_h_mask: h=" + std::to_string(h) + " outside [1, " +
                                    std::to_string(v.size()) + "]");
    }
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto by_magnitude = [&v](std::size_t a, std::size_t b) {
        const double ma = std::abs(v[a]);
        const double mb = std::abs(v[b]);
        return ma != mb ? ma > mb : a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(h), order.end(),
                      by_magnitude);
    order.resize(h);
    std::sort(order.begin(), order.end());
    return SparsityMask(v.size(), std::move(order));
}

DenseVector restrict_to(const DenseVector& v, const SparsityMask& mask) {
    require_same_size(v.size(), mask.dimension(), "restrict_to");
    DenseVector out(mask.kept());
    for (std::size_t k = 0; k < mask.kept(); ++k) out[k] = v[mask.kept_indices()[k]];
    return out;
}

DenseVector mean_of(std::span<const DenseVector> vectors) {
    if (vectors.empty()) throw std::invalid_argument("mean_of: no vectors");
    DenseVector acc(vectors.front().size());
    for (const auto& v : vectors) acc += v;
    acc *= 1.0 / static_cast<double>(vectors.size());
    return acc;
}

double covariance_trace(std::span<const DenseVector> samples) {
    if (samples.size() < 2) throw std::invalid_argument("covariance_trace: need at least two samples");
    const DenseVector mu = mean_of(samples);
    double total = 0.0;
    for (const auto& s : samples) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            const double d = s[j] - mu[j];
            total += d * d;
        }
    }
    return total / static_cast<double>(samples.size() - 1);
}

}  // namespace colm
