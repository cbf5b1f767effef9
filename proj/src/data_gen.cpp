#include "colm/data_gen.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "colm/errors.h"
#include "colm/random.h"

namespace colm {

void MixtureSpec::validate() const {
    if (num_sources == 0) throw ConfigError("mixture: num_sources must be >= 1");
    if (!source_sizes.empty() && source_sizes.size() != num_sources) {
        throw ConfigError("mixture: source_sizes has " + std::to_string(source_sizes.size()) + " entries for " +
                          std::to_string(num_sources) + " sources");
    }
    for (std::size_t s : source_sizes) {
        if (s == 0) throw ConfigError("mixture: source sizes must be >= 1");
    }
    if (source_sizes.empty()) {
        if (largest_source == 0) throw ConfigError("mixture: largest_source must be >= 1");
        if (!(imbalance_ratio >= 1.0)) throw ConfigError("mixture: imbalance_ratio must be >= 1");
        if (static_cast<double>(largest_source) / imbalance_ratio < 0.5) {
            throw ConfigError("mixture: imbalance_ratio leaves the smallest source empty");
        }
    }
    if (centers_per_source == 0) throw ConfigError("mixture: centers_per_source must be >= 1");
    if (!(dense_radius > 0.0)) throw ConfigError("mixture: dense_radius must be positive");
    if (!(dense_scale > 0.0)) throw ConfigError("mixture: dense_scale must be positive");
    if (!(outlier_radius > dense_radius)) throw ConfigError("mixture: outlier_radius must exceed dense_radius");
    if (feature_dim == 0) throw ConfigError("mixture: feature_dim must be >= 1");
    if (num_classes < 2) throw ConfigError("mixture: num_classes must be >= 2");
    if (!(label_noise >= 0.0 && label_noise <= 1.0)) throw ConfigError("mixture: label_noise must be in [0, 1]");
    if (!centers.empty()) {
        if (centers.size() != num_sources * centers_per_source) {
            throw ConfigError("mixture: expected " + std::to_string(num_sources * centers_per_source) + " centers");
        }
        for (const auto& c : centers) {
            if (c.size() != feature_dim) throw ConfigError("mixture: center dimension differs from feature_dim");
        }
    }
    std::size_t total = 0;
    for (std::size_t s : resolved_sizes()) total += s;
    if (outliers > total) throw ConfigError("mixture: more outliers than examples");
}

std::vector<std::size_t> MixtureSpec::resolved_sizes() const {
    if (!source_sizes.empty()) return source_sizes;
    std::vector<std::size_t> sizes(num_sources);
    for (std::size_t q = 0; q < num_sources; ++q) {
        const double frac = num_sources == 1 ? 0.0 : static_cast<double>(q) / static_cast<double>(num_sources - 1);
        const double s = static_cast<double>(largest_source) * std::pow(imbalance_ratio, -frac);
        sizes[q] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(s)));
    }
    return sizes;
}

double MixtureSpec::coordinate_sigma() const {
    return dense_scale * dense_radius / std::sqrt(static_cast<double>(feature_dim));
}

double ball_volume(std::size_t dim, double radius) {
    const double d = static_cast<double>(dim);
    return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0) * std::pow(radius, d);
}

double dense_ball_mass(const MixtureSpec& spec, double alpha) {
    if (alpha >= spec.dense_radius) return 1.0;
    if (alpha <= 0.0) return 0.0;
    // |x - c|^2 / sigma^2 is chi-squared with D degrees of freedom.
    const double sigma = spec.coordinate_sigma();
    const double half_d = static_cast<double>(spec.feature_dim) / 2.0;
    const auto cdf = [&](double r) { return boost::math::gamma_p(half_d, r * r / (2.0 * sigma * sigma)); };
    return cdf(alpha) / cdf(spec.dense_radius);
}

std::size_t coverage_sample_size(std::size_t k, std::size_t m, double delta, double mass) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("coverage_sample_size: delta must be in (0, 1)");
    if (!(mass > 0.0 && mass <= 1.0)) throw std::invalid_argument("coverage_sample_size: mass must be in (0, 1]");
    const double km = static_cast<double>(k * m);
    return static_cast<std::size_t>(std::ceil(2.0 * km * std::log(km / delta) / mass));
}

namespace {

DenseVector gaussian_vector(CounterRng& rng, std::size_t dim, double sigma) {
    DenseVector v(dim);
    for (std::size_t j = 0; j < dim; ++j) v[j] = sigma * rng.normal();
    return v;
}

std::vector<DenseVector> place_centers(const MixtureSpec& spec, CounterRng& rng) {
    const std::size_t count = spec.num_sources * spec.centers_per_source;
    const double min_sep = 2.0 * spec.dense_radius;
    if (!spec.centers.empty()) {
        for (std::size_t a = 0; a < count; ++a) {
            for (std::size_t b = a + 1; b < count; ++b) {
                if (l2_distance(spec.centers[a], spec.centers[b]) < min_sep) {
                    throw ConfigError("mixture: centers " + std::to_string(a) + " and " + std::to_string(b) +
                                      " are closer than 2 * dense_radius");
                }
            }
        }
        return spec.centers;
    }
    const double sigma = spec.center_spread / std::sqrt(static_cast<double>(spec.feature_dim));
    std::vector<DenseVector> centers;
    for (std::size_t c = 0; c < count; ++c) {
        bool placed = false;
        for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
            DenseVector candidate = gaussian_vector(rng, spec.feature_dim, sigma);
            placed = std::all_of(centers.begin(), centers.end(),
                                 [&](const DenseVector& other) { return l2_distance(candidate, other) >= min_sep; });
            if (placed) centers.push_back(std::move(candidate));
        }
        if (!placed) throw ConfigError("mixture: cannot place centers 2 * dense_radius apart; raise center_spread");
    }
    return centers;
}

/// Largest-remainder split of `total` proportional to `weights`, capped at
/// the weights themselves.
std::vector<std::size_t> proportional_split(std::size_t total, const std::vector<std::size_t>& weights) {
    std::size_t sum = 0;
    for (auto w : weights) sum += w;
    std::vector<std::size_t> out(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t used = 0;
    for (std::size_t q = 0; q < weights.size(); ++q) {
        const double exact = static_cast<double>(total) * static_cast<double>(weights[q]) / static_cast<double>(sum);
        out[q] = std::min(weights[q], static_cast<std::size_t>(std::floor(exact)));
        used += out[q];
        remainders.emplace_back(exact - std::floor(exact), q);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    while (used < total) {
        for (const auto& [_, q] : remainders) {
            if (used == total) break;
            if (out[q] < weights[q]) {
                ++out[q];
                ++used;
            }
        }
    }
    return out;
}

}  // namespace

GeneratedData generate(const MixtureSpec& spec) {
    spec.validate();
    CounterRng geometry_rng(spec.seed, 1);
    CounterRng point_rng(spec.seed, 2);
    CounterRng label_rng(spec.seed, 3);

    GeneratedData out;
    PlantedTruth& truth = out.truth;
    truth.centers = place_centers(spec, geometry_rng);
    for (std::size_t c = 0; c < truth.centers.size(); ++c) {
        truth.center_source.push_back(static_cast<int>(c / spec.centers_per_source));
    }

    const std::size_t dim = spec.feature_dim;
    const std::size_t classes = spec.num_classes;
    const std::size_t label_maps = spec.label_rule == LabelRule::source_linear ? spec.num_sources : 1;
    std::vector<std::vector<DenseVector>> maps(label_maps);
    for (auto& map : maps) {
        for (std::size_t c = 0; c < classes; ++c) map.push_back(gaussian_vector(geometry_rng, dim, 1.0));
    }

    const std::vector<std::size_t> sizes = spec.resolved_sizes();
    const std::vector<std::size_t> outlier_counts = proportional_split(spec.outliers, sizes);
    const double sigma = spec.coordinate_sigma();
    const double alpha = spec.dense_radius;
    const std::size_t k = spec.centers_per_source;

    Dataset& ds = out.dataset;
    ds.feature_dim = dim;
    ds.num_classes = classes;
    ds.has_sources = true;

    for (std::size_t q = 0; q < spec.num_sources; ++q) {
        const std::size_t dense_count = sizes[q] - outlier_counts[q];
        for (std::size_t i = 0; i < sizes[q]; ++i) {
            const bool outlier = i >= dense_count;
            const std::size_t center = q * k + (outlier ? point_rng.uniform_index(k) : i % k);
            const DenseVector& c = truth.centers[center];
            DenseVector x;
            bool ok = false;
            for (int attempt = 0; attempt < 100000 && !ok; ++attempt) {
                if (!outlier) {
                    DenseVector offset = gaussian_vector(point_rng, dim, sigma);
                    if (l2_norm(offset) > alpha) continue;
                    x = c + offset;
                    ok = true;
                } else {
                    DenseVector dir = gaussian_vector(point_rng, dim, 1.0);
                    const double norm = l2_norm(dir);
                    if (norm == 0.0) continue;
                    // Radius in (alpha*, alpha_u].
                    const double radius = spec.outlier_radius - point_rng.uniform() * (spec.outlier_radius - alpha);
                    x = c + dir * (radius / norm);
                    ok = std::all_of(truth.centers.begin(), truth.centers.end(),
                                     [&](const DenseVector& other) { return l2_distance(x, other) > alpha; });
                }
            }
            if (!ok) throw ConfigError("mixture: could not place a point for source " + std::to_string(q));

            std::size_t label = 0;
            if (spec.label_rule == LabelRule::center) {
                label = center % classes;
            } else {
                const auto& map = maps[spec.label_rule == LabelRule::source_linear ? q : 0];
                const DenseVector input = spec.label_rule == LabelRule::source_linear ? x - c : x;
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t cls = 0; cls < classes; ++cls) {
                    const double score = dot(map[cls], input);
                    if (score > best) {
                        best = score;
                        label = cls;
                    }
                }
            }
            const double flip = label_rng.uniform();
            const std::size_t random_class = label_rng.uniform_index(classes);
            if (flip < spec.label_noise) label = random_class;

            ds.examples.push_back(Example{std::move(x), label, static_cast<int>(q)});
            truth.example_center.push_back(center);
            truth.is_outlier.push_back(outlier);
        }
    }
    return out;
}

}  // namespace colm
